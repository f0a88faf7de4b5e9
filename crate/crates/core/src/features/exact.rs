//! Exact floating-point summation.
//!
//! [`ExactSum`] keeps a list of non-overlapping partials whose real-valued sum
//! equals the sum of everything added so far, with no rounding error. Values
//! can be removed by adding their negation, which makes it usable for sliding
//! windows: the rounded result depends only on the multiset of values in the
//! window, never on the order they arrived in.
//!
//! Exactness assumes no intermediate overflow and no underflow of the product
//! error terms, which holds for any physically meaningful kW magnitude.

/// Error-free product: `a * b == hi + lo` exactly.
#[inline]
pub(crate) fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let hi = a * b;
    let lo = a.mul_add(b, -hi);
    (hi, lo)
}

#[derive(Debug, Clone, Default)]
pub struct ExactSum {
    partials: Vec<f64>,
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, mut x: f64) {
        let mut kept = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[kept] = lo;
                kept += 1;
            }
            x = hi;
        }
        self.partials.truncate(kept);
        self.partials.push(x);
    }

    pub fn sub(&mut self, x: f64) {
        self.add(-x);
    }

    /// Adds `x * x` exactly.
    pub fn add_square(&mut self, x: f64) {
        let (hi, lo) = two_prod(x, x);
        self.add(hi);
        self.add(lo);
    }

    pub fn sub_square(&mut self, x: f64) {
        let (hi, lo) = two_prod(x, x);
        self.add(-hi);
        self.add(-lo);
    }

    pub fn partials(&self) -> &[f64] {
        &self.partials
    }

    /// Sum correctly rounded to the nearest `f64` (ties to even).
    pub fn value(&self) -> f64 {
        let p = &self.partials;
        let mut n = p.len();
        if n == 0 {
            return 0.0;
        }
        n -= 1;
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            let y = p[n - 1];
            n -= 1;
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != 0.0 {
                break;
            }
        }
        // Half-way case: the remaining partials decide the rounding direction.
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            let yr = x - hi;
            if y == yr {
                hi = x;
            }
        }
        hi
    }
}

/// Population mean and variance from exact running sums of `x` and `x²` over
/// `count` samples.
///
/// The variance is `(count·Σx² − (Σx)²) / count²`, where the numerator is
/// evaluated exactly before the single final rounding, so it is never
/// negative and is exactly zero for a constant window.
pub fn mean_and_variance(sum: &ExactSum, sum_sq: &ExactSum, count: usize) -> (f64, f64) {
    debug_assert!(count > 0);
    let n = count as f64;
    let mean = sum.value() / n;

    let mut numer = ExactSum::new();
    for &q in sum_sq.partials() {
        let (hi, lo) = two_prod(q, n);
        numer.add(hi);
        numer.add(lo);
    }
    let s = sum.partials();
    for (i, &a) in s.iter().enumerate() {
        for (j, &b) in s.iter().enumerate().skip(i) {
            let (hi, lo) = two_prod(a, b);
            if i == j {
                numer.sub(hi);
                numer.sub(lo);
            } else {
                // cross terms appear twice; doubling is exact
                numer.sub(2.0 * hi);
                numer.sub(2.0 * lo);
            }
        }
    }
    let variance = (numer.value() / (n * n)).max(0.0);
    (mean, variance)
}
