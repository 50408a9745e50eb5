//! Radial compacts: finite unions of closed balls, annuli and spheres,
//! described by closed log-radius intervals.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompactError {
    #[error("interval {index} is malformed: [{a}, {b}]")]
    Malformed { index: usize, a: f64, b: f64 },
    #[error("intervals {index} and {next} overlap or are out of order")]
    Overlap { index: usize, next: usize },
}

/// Closed intervals `[a_i, b_i]` in log-radius. `a_0 = −∞` stands for a
/// closed ball (the origin included).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RadialCompact {
    intervals: Vec<(f64, f64)>,
}

impl RadialCompact {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self, CompactError> {
        for (i, &(a, b)) in intervals.iter().enumerate() {
            let bad_a = a.is_nan() || a == f64::INFINITY || (i > 0 && a == f64::NEG_INFINITY);
            if bad_a || !b.is_finite() || a > b {
                return Err(CompactError::Malformed { index: i, a, b });
            }
            if i > 0 && intervals[i - 1].1 >= a {
                return Err(CompactError::Overlap { index: i - 1, next: i });
            }
        }
        Ok(Self { intervals })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Closed ball `{‖z‖ ≤ e^t}`.
    pub fn ball(t: f64) -> Result<Self, CompactError> {
        Self::new(vec![(f64::NEG_INFINITY, t)])
    }

    pub fn annulus(a: f64, b: f64) -> Result<Self, CompactError> {
        Self::new(vec![(a, b)])
    }

    pub fn sphere(t: f64) -> Result<Self, CompactError> {
        Self::new(vec![(t, t)])
    }

    pub(crate) fn ball_unchecked(t: f64) -> Self {
        Self {
            intervals: vec![(f64::NEG_INFINITY, t)],
        }
    }

    pub(crate) fn sphere_unchecked(t: f64) -> Self {
        Self { intervals: vec![(t, t)] }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains_origin(&self) -> bool {
        self.intervals.first().is_some_and(|&(a, _)| a == f64::NEG_INFINITY)
    }

    /// Membership of the sphere of log-radius `t`; `t = −∞` is the origin.
    pub fn contains(&self, t: f64) -> bool {
        if t == f64::NEG_INFINITY {
            return self.contains_origin();
        }
        let idx = self.intervals.partition_point(|&(_, b)| b < t);
        self.intervals.get(idx).is_some_and(|&(a, _)| a <= t)
    }

    /// Largest log-radius in the compact.
    pub fn sup(&self) -> Option<f64> {
        self.intervals.last().map(|&(_, b)| b)
    }

    /// Smallest log-radius (`−∞` for a ball).
    pub fn inf(&self) -> Option<f64> {
        self.intervals.first().map(|&(a, _)| a)
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.intervals.iter().all(|&(a, b)| {
            other
                .intervals
                .iter()
                .any(|&(c, d)| c <= a && b <= d)
        })
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        for &(a, b) in &self.intervals {
            for &(c, d) in &other.intervals {
                let lo = a.max(c);
                let hi = b.min(d);
                if lo <= hi {
                    out.push((lo, hi));
                }
            }
        }
        out.sort_by(|x, y| x.0.total_cmp(&y.0));
        Self { intervals: out }
    }
}
