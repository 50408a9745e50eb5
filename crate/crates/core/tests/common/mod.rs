//! Seeded generators shared by the property and acceptance targets.
#![allow(dead_code)]

use rand::Rng;
use radial_ma::{ConvexProfile, LeftEnd, RadialCompact};

/// Random convex nondecreasing profile on `(−∞, log_r)` with 1..=6 knots in
/// `[log_r − 8, log_r − 0.05]`.
pub fn random_profile<R: Rng>(rng: &mut R, log_r: f64) -> ConvexProfile {
    let m = rng.gen_range(1..=6);
    let mut ts: Vec<f64> = (0..m).map(|_| rng.gen_range(log_r - 8.0..log_r - 0.05)).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let bounded = rng.gen_bool(0.5);
    let mut slope = if bounded { 0.0 } else { rng.gen_range(0.1..1.0) };
    let left = if bounded {
        LeftEnd::FiniteValue(rng.gen_range(-5.0..-0.5))
    } else {
        LeftEnd::MinusInfinity(slope)
    };
    let mut v = match left {
        LeftEnd::FiniteValue(v) => v,
        LeftEnd::MinusInfinity(_) => rng.gen_range(-5.0..-0.5),
    };
    let mut knots = vec![(ts[0], v)];
    for w in ts.windows(2) {
        slope += rng.gen_range(0.0..1.0);
        v += slope * (w[1] - w[0]);
        knots.push((w[1], v));
    }
    let final_slope = slope + rng.gen_range(0.0..1.0);
    ConvexProfile::with_final_slope(knots, left, final_slope, log_r).expect("generated profile is convex")
}

/// Like [`random_profile`] but every knot is a node `t0 + i·h` of a dyadic grid.
pub fn random_grid_profile<R: Rng>(rng: &mut R, t0: f64, h: f64, m: usize, log_r: f64) -> ConvexProfile {
    let count = rng.gen_range(1..=6);
    let mut idx: Vec<usize> = (0..count).map(|_| rng.gen_range(1..m)).collect();
    idx.sort_unstable();
    idx.dedup();
    let bounded = rng.gen_bool(0.5);
    let mut slope = if bounded { 0.0 } else { rng.gen_range(1..8) as f64 / 8.0 };
    let left = if bounded {
        LeftEnd::FiniteValue(-(rng.gen_range(4..40) as f64) / 8.0)
    } else {
        LeftEnd::MinusInfinity(slope)
    };
    let mut v = match left {
        LeftEnd::FiniteValue(v) => v,
        LeftEnd::MinusInfinity(_) => -(rng.gen_range(4..40) as f64) / 8.0,
    };
    let mut knots = vec![(t0 + idx[0] as f64 * h, v)];
    for w in idx.windows(2) {
        slope += rng.gen_range(0..8) as f64 / 8.0;
        v += slope * (w[1] - w[0]) as f64 * h;
        knots.push((t0 + w[1] as f64 * h, v));
    }
    let final_slope = slope + rng.gen_range(0..8) as f64 / 8.0;
    ConvexProfile::with_final_slope(knots, left, final_slope, log_r).expect("generated profile is convex")
}

/// Random radial compact: 1..=3 disjoint pieces in `[log_r − 8, log_r − 0.05]`,
/// possibly a ball and possibly spheres.
pub fn random_compact<R: Rng>(rng: &mut R, log_r: f64) -> RadialCompact {
    let pieces = rng.gen_range(1..=3);
    let mut ends: Vec<f64> = (0..2 * pieces).map(|_| rng.gen_range(log_r - 8.0..log_r - 0.05)).collect();
    ends.sort_by(f64::total_cmp);
    let mut intervals: Vec<(f64, f64)> = ends.chunks(2).map(|c| (c[0], c[1])).collect();
    for iv in &mut intervals {
        if rng.gen_bool(0.2) {
            iv.0 = iv.1;
        }
    }
    if rng.gen_bool(0.3) {
        intervals[0].0 = f64::NEG_INFINITY;
    }
    RadialCompact::new(intervals).expect("generated intervals are disjoint")
}

/// Random radial competitor for the extremal problem: a max of lines with
/// nonnegative slopes, each `≤ −1` at `sup K` and `≤ 0` at `log_r`. Such a
/// function is convex, nondecreasing, `≤ −1` on `K` and `≤ 0` on the ball.
pub struct Competitor {
    pub lines: Vec<(f64, f64)>,
    pub sup: f64,
}

impl Competitor {
    pub fn random<R: Rng>(rng: &mut R, sup: f64, log_r: f64) -> Self {
        let count = rng.gen_range(1..=4);
        let lines = (0..count)
            .map(|_| {
                let b = if rng.gen_bool(0.3) { -1.0 } else { -1.0 - rng.gen_range(0.0..3.0) };
                let max_a = -b / (log_r - sup);
                let a = if rng.gen_bool(0.3) { max_a } else { rng.gen_range(0.0..=max_a) };
                (a, b)
            })
            .collect();
        Self { lines, sup }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.lines
            .iter()
            .map(|&(a, b)| a * (t - self.sup) + b)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}
