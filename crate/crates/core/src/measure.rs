//! Monge-Ampère measures of radial profiles as atomic measures on radii.
//!
//! Normalization: the mass of the closed ball `{‖z‖ ≤ e^t}` under
//! `(dd^c u)^n` is `(2π)^n · χ′₊(t)^n`. For `n = 1` this gives the Riesz
//! measure of `log|z|` total mass `2π`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compact::RadialCompact;
use crate::profile::{ConvexProfile, LeftEnd};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("nonpolar-part limit did not stabilize by j = {last_j}")]
    NonStabilized { last_j: f64 },
    #[error("nonpolar part from the truncation limit disagrees with the closed form")]
    ShortcutMismatch,
    #[error("invalid test function: {0}")]
    InvalidTestFunction(String),
}

/// Nonnegative measure on the ball carried by the origin and finitely many spheres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialMeasure {
    pub n: u32,
    pub origin_mass: f64,
    /// `(log-radius, mass)` with strictly increasing log-radius and positive mass.
    pub atoms: Vec<(f64, f64)>,
}

impl RadialMeasure {
    pub fn zero(n: u32) -> Self {
        Self {
            n,
            origin_mass: 0.0,
            atoms: Vec::new(),
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.mass_where(|_| true)
    }

    /// Sum over atoms (descending log-radius) satisfying `keep`, then the
    /// origin if `keep(−∞)`. The fixed order makes sums over disjoint
    /// pieces that split at a radius add up bit-exactly.
    pub(crate) fn mass_where(&self, keep: impl Fn(f64) -> bool) -> f64 {
        let mut total = 0.0;
        for &(t, m) in self.atoms.iter().rev() {
            if keep(t) {
                total += m;
            }
        }
        if keep(f64::NEG_INFINITY) {
            total += self.origin_mass;
        }
        total
    }

    /// Mass of a closed compact; spheres on interval endpoints count.
    pub fn mass_on(&self, compact: &RadialCompact) -> f64 {
        self.mass_where(|t| compact.contains(t))
    }

    /// Mass of the closed ball `{‖z‖ ≤ e^t}`.
    pub fn distribution(&self, t: f64) -> f64 {
        self.mass_where(|s| s <= t)
    }

    /// Distribution function at nondecreasing radii, in one pass.
    pub fn distribution_sorted(&self, ts: &[f64]) -> Vec<f64> {
        debug_assert!(ts.windows(2).all(|w| w[0] <= w[1]));
        let mut out = Vec::with_capacity(ts.len());
        let mut acc = self.origin_mass;
        let mut k = 0;
        for &t in ts {
            while k < self.atoms.len() && self.atoms[k].0 <= t {
                acc += self.atoms[k].1;
                k += 1;
            }
            out.push(acc);
        }
        out
    }

    pub fn restrict(&self, compact: &RadialCompact) -> Self {
        self.filter(|t| compact.contains(t))
    }

    /// Restriction to the open shell `a < log‖z‖ < b`.
    pub fn restrict_open(&self, a: f64, b: f64) -> Self {
        self.filter(|t| a < t && t < b)
    }

    fn filter(&self, keep: impl Fn(f64) -> bool) -> Self {
        Self {
            n: self.n,
            origin_mass: if keep(f64::NEG_INFINITY) { self.origin_mass } else { 0.0 },
            atoms: self.atoms.iter().copied().filter(|&(t, _)| keep(t)).collect(),
        }
    }

    pub fn integrate(&self, phi: &RadialTestFunction) -> f64 {
        let mut total = 0.0;
        for &(t, m) in self.atoms.iter().rev() {
            total += m * phi.eval(t);
        }
        total + self.origin_mass * phi.origin_value
    }
}

/// Continuous radial test function, piecewise linear in log-radius,
/// constant equal to `origin_value` left of the first node and zero from
/// the last node on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialTestFunction {
    pub name: String,
    pub origin_value: f64,
    pub nodes: Vec<(f64, f64)>,
}

impl RadialTestFunction {
    pub fn new(name: impl Into<String>, nodes: Vec<(f64, f64)>) -> Result<Self, MeasureError> {
        let bad = |m: &str| Err(MeasureError::InvalidTestFunction(m.to_string()));
        if nodes.len() < 2 {
            return bad("need at least two nodes");
        }
        if nodes.iter().any(|&(t, v)| !t.is_finite() || !v.is_finite()) {
            return bad("non-finite node");
        }
        if nodes.windows(2).any(|w| w[1].0 <= w[0].0) {
            return bad("nodes must be strictly increasing");
        }
        if nodes.last().unwrap().1 != 0.0 {
            return bad("last node must have value 0");
        }
        Ok(Self {
            name: name.into(),
            origin_value: nodes[0].1,
            nodes,
        })
    }

    /// 1 on the ball `t ≤ inner`, decaying linearly to 0 at `outer`.
    pub fn plateau(inner: f64, outer: f64) -> Result<Self, MeasureError> {
        Self::new(format!("plateau[{inner},{outer}]"), vec![(inner, 1.0), (outer, 0.0)])
    }

    /// Tent supported on `[a, b]` with peak 1 at the midpoint.
    pub fn hat(a: f64, b: f64) -> Result<Self, MeasureError> {
        let c = 0.5 * (a + b);
        Self::new(format!("hat[{a},{b}]"), vec![(a, 0.0), (c, 1.0), (b, 0.0)])
    }

    pub fn support_end(&self) -> f64 {
        self.nodes.last().unwrap().0
    }

    pub fn is_nonnegative(&self) -> bool {
        self.nodes.iter().all(|&(_, v)| v >= 0.0)
    }

    pub fn sup_norm(&self) -> f64 {
        self.nodes.iter().map(|&(_, v)| v.abs()).fold(0.0, f64::max)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let first = self.nodes[0];
        if t <= first.0 {
            return self.origin_value;
        }
        let idx = self.nodes.partition_point(|&(s, _)| s <= t);
        if idx >= self.nodes.len() {
            return 0.0;
        }
        let (t0, v0) = self.nodes[idx - 1];
        let (t1, v1) = self.nodes[idx];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }
}

fn jump_mass(n: u32, left: f64, right: f64) -> f64 {
    TAU.powi(n as i32) * (right.powi(n as i32) - left.powi(n as i32))
}

/// `(dd^c u)^n` for `u = χ(log‖z‖)`.
pub fn ma_measure(profile: &ConvexProfile, n: u32) -> RadialMeasure {
    assert!(n >= 1, "dimension must be positive");
    let origin_mass = match profile.left_end() {
        LeftEnd::FiniteValue(_) => 0.0,
        LeftEnd::MinusInfinity(s) => TAU.powi(n as i32) * s.powi(n as i32),
    };
    let slopes: Vec<f64> = profile.slopes().collect();
    let atoms = profile
        .breakpoints()
        .iter()
        .zip(slopes.windows(2))
        .filter_map(|(&(t, _), w)| {
            let m = jump_mass(n, w[0], w[1]);
            (m > 0.0).then_some((t, m))
        })
        .collect();
    RadialMeasure { n, origin_mass, atoms }
}

/// Doubling schedule `1, 2, 4, …, 2^max_exp`.
pub fn doubling_schedule(max_exp: u32) -> Vec<f64> {
    (0..=max_exp).map(|e| 2f64.powi(e as i32)).collect()
}

/// Closed form of the nonpolar part: drop the origin atom when `u(0) = −∞`.
pub fn np_part_closed_form(profile: &ConvexProfile, n: u32) -> RadialMeasure {
    let mut mu = ma_measure(profile, n);
    if !profile.is_bounded_below() {
        mu.origin_mass = 0.0;
    }
    mu
}

/// The nonpolar part `NP(dd^c u)^n` as the increasing limit of the
/// truncated measures restricted to `{u > −j}`, over `j = 1, 2, 4, …, 2^20`.
pub fn np_part(profile: &ConvexProfile, n: u32) -> Result<RadialMeasure, MeasureError> {
    np_part_with_schedule(profile, n, &doubling_schedule(20))
}

/// Stabilization is declared once two consecutive terms coincide and the
/// level `−j` is below every breakpoint value, after which the restricted
/// truncations can no longer change.
pub fn np_part_with_schedule(
    profile: &ConvexProfile,
    n: u32,
    schedule: &[f64],
) -> Result<RadialMeasure, MeasureError> {
    let floor = profile
        .breakpoints()
        .iter()
        .map(|&(_, v)| v)
        .fold(f64::INFINITY, f64::min);
    let mut prev: Option<RadialMeasure> = None;
    for &j in schedule {
        let truncated = profile.truncate(j).expect("schedule entries are positive");
        let above = profile.sublevel(-j);
        let term = ma_measure(&truncated, n).filter(|t| !above.contains(t));
        if let Some(p) = &prev {
            if *p == term && -j < floor {
                let shortcut = np_part_closed_form(profile, n);
                if shortcut != term {
                    return Err(MeasureError::ShortcutMismatch);
                }
                return Ok(term);
            }
        }
        prev = Some(term);
    }
    Err(MeasureError::NonStabilized {
        last_j: schedule.last().copied().unwrap_or(0.0),
    })
}
