//! Slow, independent cross-checks for the exact radial formulas.
//!
//! `fd_riesz_measure` computes the `n = 1` Riesz measure from second
//! differences of sampled profile values. `relaxation_envelope` solves the
//! discrete obstacle problem for the relative extremal profile with projected
//! SOR sweeps, nested from coarse to fine grids. Neither touches the hull or
//! slope-jump code.

use std::f64::consts::TAU;

use thiserror::Error;

use crate::compact::RadialCompact;
use crate::measure::RadialMeasure;
use crate::profile::{ConvexProfile, LeftEnd, ProfileError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("grid needs at least 8 intervals, got {0}")]
    GridTooSmall(usize),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("negative second difference {value} at node {index}: input is not convex")]
    NegativeSecondDifference { index: usize, value: f64 },
    #[error("relaxation did not converge in {iters} sweeps (last change {residual})")]
    NotConverged { iters: usize, residual: f64 },
    #[error("compact is empty")]
    EmptyCompact,
    #[error("compact not inside the grid range")]
    CompactOutsideGrid,
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

/// Uniform nodes `t_i = t0 + i·h`, `i = 0..=m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    t0: f64,
    h: f64,
    m: usize,
    /// Exact last node; `t0 + m·h` up to rounding.
    t1: f64,
}

impl Grid1D {
    pub fn new(t0: f64, h: f64, m: usize) -> Result<Self, OracleError> {
        if m < 8 {
            return Err(OracleError::GridTooSmall(m));
        }
        if !(h > 0.0 && h.is_finite() && t0.is_finite()) {
            return Err(OracleError::InvalidGrid(format!("t0 = {t0}, h = {h}")));
        }
        Ok(Self { t0, h, m, t1: t0 + h * m as f64 })
    }

    /// `m` equal intervals spanning `[a, b]`; the last node is exactly `b`.
    pub fn spanning(a: f64, b: f64, m: usize) -> Result<Self, OracleError> {
        if !(a < b) {
            return Err(OracleError::InvalidGrid(format!("[{a}, {b}]")));
        }
        let mut g = Self::new(a, (b - a) / m as f64, m)?;
        g.t1 = b;
        Ok(g)
    }

    /// Grid ending at `log_r` with `anchor` on a node, spacing at most `h`,
    /// reaching left of `lo`, and an interval count with many factors of two
    /// so that it can be coarsened while keeping `anchor` on a node.
    pub fn fitted(lo: f64, anchor: f64, log_r: f64, h: f64) -> Result<Self, OracleError> {
        if !(lo <= anchor && anchor < log_r && h > 0.0) {
            return Err(OracleError::InvalidGrid(format!(
                "need lo <= anchor < log_R and h > 0, got {lo}, {anchor}, {log_r}, {h}"
            )));
        }
        let q = ((log_r - anchor) / h).ceil().max(8.0) as usize;
        let block = 1usize << (q / 16).max(1).ilog2();
        let q = q.div_ceil(block) * block;
        let h = (log_r - anchor) / q as f64;
        let p = (((anchor - lo) / h).ceil() as usize + 2).div_ceil(block) * block;
        Ok(Self {
            t0: log_r - (p + q) as f64 * h,
            h,
            m: p + q,
            t1: log_r,
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn intervals(&self) -> usize {
        self.m
    }

    pub fn start(&self) -> f64 {
        self.t0
    }

    pub fn end(&self) -> f64 {
        self.node(self.m)
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.m {
            return self.t1;
        }
        self.t0 + self.h * i as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.m).map(|i| self.node(i)).collect()
    }

    fn coarsen(&self) -> Option<Self> {
        (self.m % 2 == 0 && self.m / 2 >= 8).then(|| Self {
            t0: self.t0,
            h: 2.0 * self.h,
            m: self.m / 2,
            t1: self.t1,
        })
    }
}

/// `n = 1` Riesz measure from second differences on `grid`.
///
/// The mass of the closed ball of log-radius `t_0` is lumped into the origin
/// atom, `2π(v_1 − v_0)/h`; node `i` in `1..m` carries
/// `2π(v_{i+1} − 2v_i + v_{i−1})/h`, with rounding-level negatives absorbed
/// into the next node. The last node is not assigned mass.
pub fn fd_riesz_measure(profile: &ConvexProfile, grid: &Grid1D) -> Result<RadialMeasure, OracleError> {
    let v: Vec<f64> = grid
        .nodes()
        .into_iter()
        .map(|t| profile.eval(t))
        .collect::<Result<_, _>>()?;
    fd_from_samples(&v, grid)
}

fn fd_from_samples(v: &[f64], grid: &Grid1D) -> Result<RadialMeasure, OracleError> {
    let h = grid.h();
    let scale = v.iter().fold(0.0f64, |a, x| a.max(x.abs())) + 1.0;
    let tol = 64.0 * f64::EPSILON * scale;
    let mut measure = RadialMeasure::zero(1);
    // Differences of the running maximum of the grid slopes: each second
    // difference is kept nonnegative without losing the telescoping sum.
    let mut prev = (v[1] - v[0]) / h;
    measure.origin_mass = TAU * prev;
    for i in 1..grid.intervals() {
        let d2 = v[i + 1] - 2.0 * v[i] + v[i - 1];
        if d2 < -tol {
            return Err(OracleError::NegativeSecondDifference { index: i, value: d2 });
        }
        let slope = ((v[i + 1] - v[i]) / h).max(prev);
        if slope > prev {
            measure.atoms.push((grid.node(i), TAU * (slope - prev)));
        }
        prev = slope;
    }
    Ok(measure)
}

/// Sampled solution of the discrete obstacle problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub grid: Grid1D,
    pub values: Vec<f64>,
    /// Sup-norm change of the last sweep on the finest grid.
    pub residual: f64,
    /// Sweeps summed over all levels.
    pub sweeps: usize,
}

impl Envelope {
    /// Slope of the last grid interval (the boundary flux).
    pub fn final_slope(&self) -> f64 {
        let m = self.grid.intervals();
        (self.values[m] - self.values[m - 1]) / self.grid.h()
    }

    /// `(2π · boundary flux)^n`.
    pub fn capacity(&self, n: u32) -> f64 {
        (TAU * self.final_slope()).powi(n as i32)
    }

    /// Linear interpolation of the samples; constant left of the grid.
    pub fn eval(&self, t: f64) -> f64 {
        let m = self.grid.intervals();
        if t <= self.grid.start() {
            return self.values[0];
        }
        let x = (t - self.grid.start()) / self.grid.h();
        let i = (x.floor() as usize).min(m - 1);
        let w = x - i as f64;
        self.values[i] + w * (self.values[i + 1] - self.values[i])
    }

    /// Piecewise-linear profile through the samples, keeping only nodes where
    /// the second difference exceeds rounding.
    pub fn to_profile(&self) -> Result<ConvexProfile, OracleError> {
        let m = self.grid.intervals();
        let v = &self.values;
        let tol = 1e-12;
        let mut knots = vec![(self.grid.node(0), v[0])];
        for i in 1..m {
            if v[i + 1] - 2.0 * v[i] + v[i - 1] > tol {
                knots.push((self.grid.node(i), v[i]));
            }
        }
        let mut prev = 0.0f64;
        for w in knots.windows(2) {
            let s = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            prev = prev.max(s);
        }
        let last = *knots.last().unwrap();
        let final_slope = ((v[m] - last.1) / (self.grid.end() - last.0)).max(prev);
        Ok(ConvexProfile::with_final_slope(
            knots,
            LeftEnd::FiniteValue(v[0]),
            final_slope,
            self.grid.end(),
        )?)
    }
}

/// Largest convex nondecreasing grid function with `v ≤ −1` on `K`, `v ≤ 0`
/// elsewhere and `v = 0` at the last node, which must be `log_r`.
///
/// Projected SOR: `v_i ← min(g_i, v_i + ω(avg − v_i))`, with the reflecting
/// condition `v_0 ← min(g_0, v_1)` on the left. The grid is coarsened by
/// halving while possible, solved from the coarsest level up, and each level
/// is started from the linear interpolation of the one below.
pub fn relaxation_envelope(
    k: &RadialCompact,
    log_r: f64,
    grid: &Grid1D,
    max_iters: usize,
    tol: f64,
) -> Result<Envelope, OracleError> {
    if k.is_empty() {
        return Err(OracleError::EmptyCompact);
    }
    let sup = k.sup().unwrap();
    let inf = k.inf().unwrap();
    let lo_ok = inf == f64::NEG_INFINITY || inf >= grid.start();
    if !(lo_ok && sup < grid.end() && grid.start() <= sup) {
        return Err(OracleError::CompactOutsideGrid);
    }
    if (grid.end() - log_r).abs() > 1e-12 * (1.0 + log_r.abs()) {
        return Err(OracleError::InvalidGrid(format!(
            "grid ends at {}, not at log R = {log_r}",
            grid.end()
        )));
    }

    let mut levels = vec![*grid];
    while let Some(c) = levels.last().unwrap().coarsen() {
        levels.push(c);
    }
    levels.reverse();

    let mut v = vec![0.0; grid.intervals() + 1];
    let mut spare = vec![0.0; grid.intervals() + 1];
    let mut sweeps = 0;
    let mut residual = f64::INFINITY;
    for (li, g) in levels.iter().enumerate() {
        let m = g.intervals();
        let segments = obstacle_segments(k, g);
        if li == 0 {
            for &(lo, hi, c) in &segments {
                v[lo..=hi].fill(c);
            }
        } else {
            prolongate(&v[..=m / 2], &mut spare[..=m]);
            std::mem::swap(&mut v, &mut spare);
            for &(lo, hi, c) in &segments {
                for x in &mut v[lo..=hi] {
                    *x = x.min(c);
                }
            }
        }
        let v = &mut v[..=m];
        // a good start needs only smoothing; SOR handles what remains
        let (mut it, mut res) = sor(v, &segments, 1.0, GS_SWEEPS.min(max_iters), tol);
        if res >= tol && it < max_iters {
            let omega = 2.0 / (1.0 + (std::f64::consts::PI / m as f64).sin());
            let (it2, res2) = sor(v, &segments, omega, max_iters - it, tol);
            it += it2;
            res = res2;
        }
        sweeps += it;
        residual = res;
        if li + 1 == levels.len() && res >= tol {
            return Err(OracleError::NotConverged { iters: it, residual: res });
        }
    }
    // largest nondecreasing minorant; a no-op at an exact fixed point
    let mut acc = f64::INFINITY;
    for x in v.iter_mut().rev() {
        acc = acc.min(*x);
        *x = acc;
    }
    Ok(Envelope {
        grid: *grid,
        values: v,
        residual,
        sweeps,
    })
}

/// Plain Gauss–Seidel sweeps tried on each level before switching to SOR.
const GS_SWEEPS: usize = 8;

/// Upper obstacle as maximal runs `(lo, hi, value)` covering nodes `0..=m`:
/// −1 on nodes in `K`, 0 elsewhere, 0 at node `m`.
fn obstacle_segments(k: &RadialCompact, g: &Grid1D) -> Vec<(usize, usize, f64)> {
    let m = g.intervals();
    // nodes within rounding of an endpoint of K count as inside it
    let d = 1e-9 * g.h();
    // first node index satisfying `pred`, for a predicate monotone in t
    let first = |pred: &dyn Fn(f64) -> bool, guess: f64| -> usize {
        let mut i = ((guess - g.start()) / g.h()).floor().clamp(0.0, m as f64) as usize;
        while i > 0 && pred(g.node(i - 1)) {
            i -= 1;
        }
        while i <= m && !pred(g.node(i)) {
            i += 1;
        }
        i
    };
    let mut contact: Vec<(usize, usize)> = Vec::new();
    for &(a, b) in k.intervals() {
        let lo = if a == f64::NEG_INFINITY { 0 } else { first(&|t| t >= a - d, a - d) };
        let above = first(&|t| t > b + d, b + d);
        if above == 0 || lo >= m {
            continue;
        }
        let hi = (above - 1).min(m - 1);
        if lo > hi {
            continue;
        }
        match contact.last_mut() {
            Some(last) if last.1 + 1 >= lo => last.1 = last.1.max(hi),
            _ => contact.push((lo, hi)),
        }
    }
    let mut out = Vec::with_capacity(2 * contact.len() + 1);
    let mut next = 0;
    for (lo, hi) in contact {
        if lo > next {
            out.push((next, lo - 1, 0.0));
        }
        out.push((lo, hi, -1.0));
        next = hi + 1;
    }
    out.push((next, m, 0.0));
    out
}

/// Linear interpolation onto the grid with half the spacing.
fn prolongate(coarse: &[f64], fine: &mut [f64]) {
    debug_assert_eq!(fine.len(), 2 * coarse.len() - 1);
    for (pair, w) in fine.chunks_exact_mut(2).zip(coarse.windows(2)) {
        pair[0] = w[0];
        pair[1] = 0.5 * (w[0] + w[1]);
    }
    fine[fine.len() - 1] = coarse[coarse.len() - 1];
}

/// Red-black projected SOR: even nodes (with the reflecting node 0) from the
/// current odd values, then odd nodes. Node `m` is held fixed. Returns sweeps
/// used and the last sup-norm change.
fn sor(v: &mut [f64], segments: &[(usize, usize, f64)], omega: f64, max_iters: usize, tol: f64) -> (usize, f64) {
    let m = v.len() - 1;
    let mut change = f64::INFINITY;
    for it in 1..=max_iters {
        let new0 = segments[0].2.min(v[0] + omega * (v[1] - v[0]));
        change = (new0 - v[0]).abs();
        v[0] = new0;
        for parity in [0, 1] {
            for &(lo, hi, c) in segments {
                let mut i = lo.max(1);
                if i % 2 != parity {
                    i += 1;
                }
                let end = hi.min(m - 1);
                while i <= end {
                    let avg = 0.5 * (v[i - 1] + v[i + 1]);
                    let new = c.min(v[i] + omega * (avg - v[i]));
                    change = change.max((new - v[i]).abs());
                    v[i] = new;
                    i += 2;
                }
            }
        }
        if change < tol {
            return (it, change);
        }
    }
    (max_iters, change)
}
