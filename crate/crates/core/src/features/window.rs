use serde::{Deserialize, Serialize};

use super::FeatureError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    Forward,
    Centered,
    Backward,
}

impl WindowKind {
    /// Column-name prefix letter.
    pub fn prefix(self) -> char {
        match self {
            WindowKind::Forward => 'f',
            WindowKind::Centered => 'c',
            WindowKind::Backward => 'b',
        }
    }
}

/// Window geometry around a target step `t`. Both edges are inclusive:
///
/// * forward: `[t, t + n]`
/// * backward: `[t - n, t]`
/// * centered: `[t - ⌈n/2⌉ + offset, t + ⌈n/2⌉ + offset]`
///
/// and every window is clamped to the series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    kind: WindowKind,
    length: usize,
    offset: i64,
}

impl WindowSpec {
    pub fn new(kind: WindowKind, length: usize, offset: i64) -> Result<Self, FeatureError> {
        if length == 0 {
            return Err(FeatureError::InvalidWindow("window length must be at least 1".into()));
        }
        if offset != 0 && kind != WindowKind::Centered {
            return Err(FeatureError::InvalidWindow("offset is only allowed for centered windows".into()));
        }
        Ok(Self { kind, length, offset })
    }

    pub fn forward(length: usize) -> Result<Self, FeatureError> {
        Self::new(WindowKind::Forward, length, 0)
    }

    pub fn backward(length: usize) -> Result<Self, FeatureError> {
        Self::new(WindowKind::Backward, length, 0)
    }

    pub fn centered(length: usize, offset: i64) -> Result<Self, FeatureError> {
        Self::new(WindowKind::Centered, length, offset)
    }

    pub fn kind(&self) -> WindowKind {
        self.kind
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    /// Samples on each side of a centered window.
    pub fn half_width(&self) -> usize {
        self.length.div_ceil(2)
    }

    /// Inclusive bounds `[lo, hi]` of the window at step `t` of a series of
    /// length `len`. Assumes `t < len`.
    pub(crate) fn bounds_unchecked(&self, t: usize, len: usize) -> (usize, usize) {
        let last = len - 1;
        match self.kind {
            WindowKind::Forward => (t, (t + self.length).min(last)),
            WindowKind::Backward => (t.saturating_sub(self.length), t),
            WindowKind::Centered => {
                let h = self.half_width() as i64;
                let clamp = |x: i64| x.clamp(0, last as i64) as usize;
                let centre = t as i64 + self.offset;
                (clamp(centre - h), clamp(centre + h))
            }
        }
    }
}

pub fn window_bounds(spec: &WindowSpec, t: usize, series_length: usize) -> Result<(usize, usize), FeatureError> {
    if t >= series_length {
        return Err(FeatureError::IndexOutOfRange { index: t, len: series_length });
    }
    Ok(spec.bounds_unchecked(t, series_length))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let b = WindowSpec::backward(360).unwrap();
        assert_eq!(window_bounds(&b, 5000, 100_000).unwrap(), (4640, 5000));
        assert_eq!(window_bounds(&b, 100, 100_000).unwrap(), (0, 100));
        let c = WindowSpec::centered(360, 0).unwrap();
        assert_eq!(window_bounds(&c, 5000, 100_000).unwrap(), (4820, 5180));
        let f = WindowSpec::forward(360).unwrap();
        assert_eq!(window_bounds(&f, 5000, 100_000).unwrap(), (5000, 5360));
        assert_eq!(window_bounds(&f, 99_990, 100_000).unwrap(), (99_990, 99_999));
    }

    #[test]
    fn odd_centered_length_rounds_up() {
        let c = WindowSpec::centered(5, 0).unwrap();
        assert_eq!(window_bounds(&c, 10, 100).unwrap(), (7, 13));
    }

    #[test]
    fn centered_offset_shifts_and_clamps() {
        let c = WindowSpec::centered(10, 3).unwrap();
        assert_eq!(window_bounds(&c, 20, 100).unwrap(), (18, 28));
        let c = WindowSpec::centered(10, -50).unwrap();
        assert_eq!(window_bounds(&c, 20, 100).unwrap(), (0, 0));
        let c = WindowSpec::centered(10, 500).unwrap();
        assert_eq!(window_bounds(&c, 20, 100).unwrap(), (99, 99));
    }

    #[test]
    fn invalid_specs_and_indices() {
        assert!(WindowSpec::backward(0).is_err());
        assert!(WindowSpec::new(WindowKind::Forward, 10, 2).is_err());
        let b = WindowSpec::backward(3).unwrap();
        assert_eq!(window_bounds(&b, 10, 10), Err(FeatureError::IndexOutOfRange { index: 10, len: 10 }));
    }

    proptest! {
        #[test]
        fn backward_windows_nest(t in 0usize..2000, len_extra in 1usize..2000, n in 1usize..500, extra in 0usize..500) {
            let len = t + len_extra;
            let (lo1, hi1) = window_bounds(&WindowSpec::backward(n).unwrap(), t, len).unwrap();
            let (lo2, hi2) = window_bounds(&WindowSpec::backward(n + extra).unwrap(), t, len).unwrap();
            prop_assert!(lo2 <= lo1 && hi1 <= hi2);
        }

        #[test]
        fn bounds_are_ordered_and_in_range(t in 0usize..500, len_extra in 1usize..500, n in 1usize..300,
                                           offset in -400i64..400, kind in 0u8..3) {
            let len = t + len_extra;
            let spec = match kind {
                0 => WindowSpec::forward(n).unwrap(),
                1 => WindowSpec::backward(n).unwrap(),
                _ => WindowSpec::centered(n, offset).unwrap(),
            };
            let (lo, hi) = window_bounds(&spec, t, len).unwrap();
            prop_assert!(lo <= hi && hi < len);
            if spec.kind() != WindowKind::Centered || offset.unsigned_abs() as usize <= spec.half_width() {
                prop_assert!(lo <= t && t <= hi);
            }
        }
    }
}
