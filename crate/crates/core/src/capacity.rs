//! Relative extremal profiles and Bedford–Taylor capacities of radial compacts.
//!
//! For a radial compact `K` in the ball of radius `e^{log_R}`, the relative
//! extremal function is `u_K* = ψ(log‖z‖)` where `ψ` is the largest convex,
//! nondecreasing profile with `ψ ≤ −1` on `K` and `ψ → 0` at `log_R`. It is
//! the lower convex hull of the obstacle (−1 on `K`, 0 at the boundary),
//! filled in to −1 on the left of the last contact with −1. The hull is
//! upper semicontinuous already, so the upper regularization is the identity.

use thiserror::Error;

use crate::compact::RadialCompact;
use crate::measure::ma_measure;
use crate::profile::{ConvexProfile, LeftEnd, ProfileError};
use crate::series::DiagnosticSeries;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CapacityError {
    #[error("compact is empty")]
    EmptyCompact,
    #[error("compact reaches the boundary: sup K = {sup} >= log R = {log_r}")]
    CompactTouchesBoundary { sup: f64, log_r: f64 },
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalResult {
    pub profile: ConvexProfile,
    pub capacity: f64,
    pub compact: RadialCompact,
    pub n: u32,
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Lower hull of points sorted by abscissa (monotone chain, lower half).
fn lower_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for &p in points {
        if hull.last() == Some(&p) {
            continue;
        }
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull
}

/// Profile of `u_K*` for a radial compact `K`.
pub fn extremal_profile(k: &RadialCompact, log_r: f64) -> Result<ConvexProfile, CapacityError> {
    let sup = k.sup().ok_or(CapacityError::EmptyCompact)?;
    if sup >= log_r {
        return Err(CapacityError::CompactTouchesBoundary { sup, log_r });
    }
    let mut obstacle = Vec::with_capacity(2 * k.intervals().len() + 1);
    for &(a, b) in k.intervals() {
        if a.is_finite() {
            obstacle.push((a, -1.0));
        }
        obstacle.push((b, -1.0));
    }
    obstacle.push((log_r, 0.0));
    let hull = lower_hull(&obstacle);

    // monotone fill-in: −1 to the left of the last hull vertex at −1
    let contact = hull.iter().rposition(|&(_, v)| v == -1.0).expect("hull touches -1 on K");
    let vertices = &hull[contact..];
    let (tb, vb) = vertices[vertices.len() - 1];
    debug_assert_eq!(tb, log_r);
    let (ta, va) = vertices[vertices.len() - 2];
    let final_slope = (vb - va) / (tb - ta);
    let knots = vertices[..vertices.len() - 1].to_vec();
    Ok(ConvexProfile::with_final_slope(knots, LeftEnd::FiniteValue(-1.0), final_slope, log_r)?)
}

/// `C_n(K) = ∫_K (dd^c u_K*)^n`; zero for the empty compact.
pub fn capacity(k: &RadialCompact, log_r: f64, n: u32) -> Result<f64, CapacityError> {
    Ok(extremal(k, log_r, n)?.capacity)
}

pub fn extremal(k: &RadialCompact, log_r: f64, n: u32) -> Result<ExtremalResult, CapacityError> {
    if k.is_empty() {
        // no admissible obstruction: the extremal function is 0
        return Ok(ExtremalResult {
            profile: ConvexProfile::constant(0.0, log_r)?,
            capacity: 0.0,
            compact: k.clone(),
            n,
        });
    }
    let profile = extremal_profile(k, log_r)?;
    let capacity = ma_measure(&profile, n).mass_on(k);
    Ok(ExtremalResult {
        profile,
        capacity,
        compact: k.clone(),
        n,
    })
}

/// `(2π / log(R/r))^n`, the capacity of the closed ball of radius `r`.
pub fn ball_capacity_closed_form(log_r_small: f64, log_r: f64, n: u32) -> f64 {
    (std::f64::consts::TAU / (log_r - log_r_small)).powi(n as i32)
}

/// Geometric schedule `1, 2, 4, …, 1024`.
pub fn default_j_schedule() -> Vec<f64> {
    crate::measure::doubling_schedule(10)
}

fn condition_series(
    profile: &ConvexProfile,
    n: u32,
    j_schedule: &[f64],
    set: impl Fn(&ConvexProfile, f64) -> RadialCompact,
) -> DiagnosticSeries {
    let entries = j_schedule
        .iter()
        .map(|&j| {
            let k = set(profile, -j);
            let c = match capacity(&k, profile.log_r(), n) {
                Ok(c) => c,
                // the set fills the ball; its capacity is infinite
                Err(_) => f64::INFINITY,
            };
            (j, if c == 0.0 { 0.0 } else { j.powi(n as i32) * c })
        })
        .collect();
    DiagnosticSeries::new("j", entries)
}

/// Series `j ↦ j^n C_n({u ≤ −j})`.
pub fn condition_sublevel(profile: &ConvexProfile, n: u32, j_schedule: &[f64]) -> DiagnosticSeries {
    condition_series(profile, n, j_schedule, |p, s| p.sublevel(s))
}

/// Series `j ↦ j^n C_n({u = −j})`.
pub fn condition_level(profile: &ConvexProfile, n: u32, j_schedule: &[f64]) -> DiagnosticSeries {
    condition_series(profile, n, j_schedule, |p, s| p.level_set(s))
}
