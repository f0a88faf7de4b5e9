//! Incremental window aggregates.
//!
//! [`RollingStats`] tracks the statistics of a contiguous index range
//! `[lo, hi]` that only ever grows at the right and shrinks at the left. It
//! does not keep its own copy of the samples; callers hand back the evicted
//! value (and its successor, for peak bookkeeping) when the left edge moves.
//!
//! Per operation cost: min/max through monotonic deques (amortized O(1)),
//! median through a pair of ordered multisets (O(log n)), mean and variance
//! through exact running sums (O(1) in the number of partials).

use std::cmp::Ordering;
use std::collections::{BTreeMap, VecDeque};

use super::exact::ExactSum;
use super::stats::{middle_of, PeakThreshold, WindowStats};

/// Total-order key for non-negative finite samples.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[derive(Debug, Clone, Default)]
struct Multiset {
    counts: BTreeMap<Key, u32>,
    len: usize,
}

impl Multiset {
    fn insert(&mut self, v: f64) {
        *self.counts.entry(Key(v)).or_insert(0) += 1;
        self.len += 1;
    }

    fn remove(&mut self, v: f64) -> bool {
        match self.counts.get_mut(&Key(v)) {
            Some(c) => {
                *c -= 1;
                if *c == 0 {
                    self.counts.remove(&Key(v));
                }
                self.len -= 1;
                true
            }
            None => false,
        }
    }

    fn first(&self) -> Option<f64> {
        self.counts.keys().next().map(|k| k.0)
    }

    fn last(&self) -> Option<f64> {
        self.counts.keys().next_back().map(|k| k.0)
    }

    fn pop_first(&mut self) -> Option<f64> {
        let v = self.first()?;
        self.remove(v);
        Some(v)
    }

    fn pop_last(&mut self) -> Option<f64> {
        let v = self.last()?;
        self.remove(v);
        Some(v)
    }
}

/// Sliding median over two multisets: `low` holds the smaller half and is
/// never shorter than `high`, nor longer by more than one.
#[derive(Debug, Clone, Default)]
struct RollingMedian {
    low: Multiset,
    high: Multiset,
}

impl RollingMedian {
    fn insert(&mut self, v: f64) {
        match self.low.last() {
            Some(m) if v > m => self.high.insert(v),
            _ => self.low.insert(v),
        }
        self.rebalance();
    }

    fn remove(&mut self, v: f64) {
        let in_low = matches!(self.low.last(), Some(m) if v <= m);
        let removed = if in_low { self.low.remove(v) } else { self.high.remove(v) };
        debug_assert!(removed, "removed a value that was never inserted");
        self.rebalance();
    }

    fn rebalance(&mut self) {
        if self.low.len > self.high.len + 1 {
            let v = self.low.pop_last().expect("non-empty");
            self.high.insert(v);
        } else if self.high.len > self.low.len {
            let v = self.high.pop_first().expect("non-empty");
            self.low.insert(v);
        }
    }

    fn median(&self) -> f64 {
        let lo = self.low.last().expect("median of empty window");
        if self.low.len == self.high.len {
            middle_of(lo, self.high.first().expect("balanced"))
        } else {
            lo
        }
    }
}

#[derive(Debug, Clone)]
pub struct RollingStats {
    threshold: PeakThreshold,
    count: usize,
    sum: ExactSum,
    sum_sq: ExactSum,
    // (index, value), values non-increasing front to back
    max_deque: VecDeque<(usize, f64)>,
    // (index, value), values non-decreasing front to back
    min_deque: VecDeque<(usize, f64)>,
    median: RollingMedian,
    peaks: u32,
}

impl RollingStats {
    pub fn new(threshold: PeakThreshold) -> Self {
        Self {
            threshold,
            count: 0,
            sum: ExactSum::new(),
            sum_sq: ExactSum::new(),
            max_deque: VecDeque::new(),
            min_deque: VecDeque::new(),
            median: RollingMedian::default(),
            peaks: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Appends sample `index` at the right edge. `prev` is the value at
    /// `index - 1` when that sample is inside the window.
    pub fn push(&mut self, index: usize, value: f64, prev: Option<f64>) {
        self.count += 1;
        self.sum.add(value);
        self.sum_sq.add_square(value);
        while matches!(self.max_deque.back(), Some(&(_, v)) if v <= value) {
            self.max_deque.pop_back();
        }
        self.max_deque.push_back((index, value));
        while matches!(self.min_deque.back(), Some(&(_, v)) if v >= value) {
            self.min_deque.pop_back();
        }
        self.min_deque.push_back((index, value));
        self.median.insert(value);
        if let Some(p) = prev {
            if self.threshold.is_peak(p, value) {
                self.peaks += 1;
            }
        }
    }

    /// Drops sample `index` from the left edge. `next` is the value at
    /// `index + 1` when that sample stays inside the window.
    pub fn evict(&mut self, index: usize, value: f64, next: Option<f64>) {
        debug_assert!(self.count > 0);
        self.count -= 1;
        self.sum.sub(value);
        self.sum_sq.sub_square(value);
        if matches!(self.max_deque.front(), Some(&(i, _)) if i == index) {
            self.max_deque.pop_front();
        }
        if matches!(self.min_deque.front(), Some(&(i, _)) if i == index) {
            self.min_deque.pop_front();
        }
        self.median.remove(value);
        if let Some(n) = next {
            if self.threshold.is_peak(value, n) {
                self.peaks -= 1;
            }
        }
    }

    pub fn peaks(&self) -> u32 {
        self.peaks
    }

    pub fn stats(&self) -> WindowStats {
        let minimum = self.min_deque.front().expect("stats of empty window").1;
        let maximum = self.max_deque.front().expect("stats of empty window").1;
        WindowStats::from_parts(&self.sum, &self.sum_sq, self.count, minimum, maximum, self.median.median())
    }
}

/// Walks a window with monotone bounds over a fully available slice.
pub(crate) struct SliceWindow<'a> {
    values: &'a [f64],
    agg: RollingStats,
    // current window is [lo, hi) in half-open form
    lo: usize,
    hi: usize,
}

impl<'a> SliceWindow<'a> {
    pub(crate) fn new(values: &'a [f64], threshold: PeakThreshold) -> Self {
        Self { values, agg: RollingStats::new(threshold), lo: 0, hi: 0 }
    }

    /// Moves the window to inclusive bounds `[lo, hi]`. Both bounds must be
    /// non-decreasing across calls.
    pub(crate) fn advance_to(&mut self, lo: usize, hi: usize) -> &RollingStats {
        if self.agg.is_empty() {
            self.lo = lo;
            self.hi = lo;
        }
        debug_assert!(lo >= self.lo && hi + 1 >= self.hi);
        while self.hi <= hi {
            let i = self.hi;
            let prev = (i > self.lo).then(|| self.values[i - 1]);
            self.agg.push(i, self.values[i], prev);
            self.hi += 1;
        }
        while self.lo < lo {
            let i = self.lo;
            let next = (i + 1 < self.hi).then(|| self.values[i + 1]);
            self.agg.evict(i, self.values[i], next);
            self.lo += 1;
        }
        &self.agg
    }
}
