//! Convex, nondecreasing, piecewise-linear profiles.
//!
//! A radial plurisubharmonic function on the ball `{‖z‖ < R}` is written
//! `u(z) = χ(log‖z‖)` with `χ` convex and nondecreasing. Profiles here are
//! piecewise linear, so every derived measure is a finite list of atoms.
//!
//! Each linear piece is stored as a line with its own anchor point. Operations
//! that cut a profile (truncation, clamping) keep the original line objects,
//! so a crossing computed twice from the same piece gives the same bits.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compact::RadialCompact;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("profile needs at least one breakpoint")]
    NoBreakpoints,
    #[error("breakpoints must have strictly increasing log-radius (index {index})")]
    UnorderedBreakpoints { index: usize },
    #[error("non-finite breakpoint at index {index}")]
    NonFinite { index: usize },
    #[error("slope sequence decreases at piece {index}: {left} > {right}")]
    ConvexityViolation { index: usize, left: f64, right: f64 },
    #[error("negative slope {slope} at piece {index}")]
    MonotonicityViolation { index: usize, slope: f64 },
    #[error("invalid left end: {0}")]
    InvalidLeftEnd(String),
    #[error("log-radius {t} outside the domain t < {log_r}")]
    OutOfDomain { t: f64, log_r: f64 },
    #[error("sampled values are not convex and nondecreasing on the grid at node {index}")]
    NotConvexOnGrid { index: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Behaviour of the profile to the left of its first breakpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LeftEnd {
    /// Constant, equal to the first breakpoint value.
    FiniteValue(f64),
    /// Linear with the given positive slope, so `χ(−∞) = −∞`.
    MinusInfinity(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Line {
    slope: f64,
    anchor_t: f64,
    anchor_v: f64,
}

impl Line {
    fn at(&self, t: f64) -> f64 {
        if t == self.anchor_t {
            return self.anchor_v;
        }
        self.anchor_v + self.slope * (t - self.anchor_t)
    }

    fn level_crossing(&self, level: f64) -> f64 {
        self.anchor_t + (level - self.anchor_v) / self.slope
    }
}

/// Where the sublevel set `{χ ≤ level}` ends.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Crossing {
    /// `χ > level` everywhere.
    Empty,
    /// `χ ≤ level` on the whole domain.
    Whole,
    /// `sup{χ ≤ level}` is the breakpoint with this index.
    Knot(usize),
    /// `sup{χ ≤ level}` lies strictly inside piece `piece`; `None` is the left tail.
    Inside { t: f64, piece: Option<usize> },
}

/// Profile `χ` of a radial psh function `u(z) = χ(log‖z‖)` on the ball of
/// radius `exp(log_r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexProfile {
    knots: Vec<(f64, f64)>,
    left_end: LeftEnd,
    left_line: Line,
    /// `lines[i]` is valid on `[t_i, t_{i+1}]`; the last one extends to `log_r`.
    lines: Vec<Line>,
    log_r: f64,
}

impl ConvexProfile {
    /// Builds a profile whose final slope is the last chord slope, or the
    /// left-end slope when there is a single breakpoint.
    pub fn new(
        breakpoints: Vec<(f64, f64)>,
        left_end: LeftEnd,
        log_r: f64,
    ) -> Result<Self, ProfileError> {
        let m = breakpoints.len();
        let final_slope = if m >= 2 {
            let (t0, v0) = breakpoints[m - 2];
            let (t1, v1) = breakpoints[m - 1];
            (v1 - v0) / (t1 - t0)
        } else {
            match left_end {
                LeftEnd::FiniteValue(_) => 0.0,
                LeftEnd::MinusInfinity(s) => s,
            }
        };
        Self::with_final_slope(breakpoints, left_end, final_slope, log_r)
    }

    /// Builds a profile with an explicit slope beyond the last breakpoint.
    pub fn with_final_slope(
        breakpoints: Vec<(f64, f64)>,
        left_end: LeftEnd,
        final_slope: f64,
        log_r: f64,
    ) -> Result<Self, ProfileError> {
        if breakpoints.is_empty() {
            return Err(ProfileError::NoBreakpoints);
        }
        if !log_r.is_finite() {
            return Err(ProfileError::InvalidParameter(format!("log_R = {log_r}")));
        }
        for (i, &(t, v)) in breakpoints.iter().enumerate() {
            if !t.is_finite() || !v.is_finite() {
                return Err(ProfileError::NonFinite { index: i });
            }
            if i > 0 && t <= breakpoints[i - 1].0 {
                return Err(ProfileError::UnorderedBreakpoints { index: i });
            }
        }
        for &(t, _) in &breakpoints {
            if t >= log_r {
                return Err(ProfileError::OutOfDomain { t, log_r });
            }
        }
        if !final_slope.is_finite() {
            return Err(ProfileError::InvalidParameter(format!("final slope {final_slope}")));
        }
        let (t0, v0) = breakpoints[0];
        let left_slope = match left_end {
            LeftEnd::FiniteValue(v) => {
                if v != v0 {
                    return Err(ProfileError::InvalidLeftEnd(format!(
                        "finite left value {v} differs from first breakpoint value {v0}"
                    )));
                }
                0.0
            }
            LeftEnd::MinusInfinity(s) => {
                if !(s.is_finite() && s > 0.0) {
                    return Err(ProfileError::InvalidLeftEnd(format!(
                        "asymptotic slope must be positive and finite, got {s}"
                    )));
                }
                s
            }
        };

        let mut lines = Vec::with_capacity(breakpoints.len());
        for w in breakpoints.windows(2) {
            let (ta, va) = w[0];
            let (tb, vb) = w[1];
            lines.push(Line {
                slope: (vb - va) / (tb - ta),
                anchor_t: tb,
                anchor_v: vb,
            });
        }
        let (tl, vl) = *breakpoints.last().unwrap();
        lines.push(Line {
            slope: final_slope,
            anchor_t: tl,
            anchor_v: vl,
        });

        let mut prev = left_slope;
        for (i, line) in lines.iter().enumerate() {
            if line.slope < 0.0 {
                return Err(ProfileError::MonotonicityViolation { index: i, slope: line.slope });
            }
            if line.slope < prev {
                return Err(ProfileError::ConvexityViolation { index: i, left: prev, right: line.slope });
            }
            prev = line.slope;
        }

        Ok(Self {
            knots: breakpoints,
            left_end,
            left_line: Line {
                slope: left_slope,
                anchor_t: t0,
                anchor_v: v0,
            },
            lines,
            log_r,
        })
    }

    /// The constant profile `χ ≡ value`.
    pub fn constant(value: f64, log_r: f64) -> Result<Self, ProfileError> {
        Self::with_final_slope(vec![(log_r - 1.0, value)], LeftEnd::FiniteValue(value), 0.0, log_r)
    }

    /// `u = log‖z‖ + c`, i.e. `χ(t) = t + c`.
    pub fn log(shift: f64, log_r: f64) -> Result<Self, ProfileError> {
        let t = log_r - 1.0;
        Self::with_final_slope(vec![(t, t + shift)], LeftEnd::MinusInfinity(1.0), 1.0, log_r)
    }

    /// `χ(t) = max(t, c)`.
    pub fn max_const(c: f64, log_r: f64) -> Result<Self, ProfileError> {
        Self::with_final_slope(vec![(c, c)], LeftEnd::FiniteValue(c), 1.0, log_r)
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn left_end(&self) -> LeftEnd {
        self.left_end
    }

    pub fn log_r(&self) -> f64 {
        self.log_r
    }

    /// Slope of the left tail: `s_∞`, or 0 for a finite left end.
    pub fn left_slope(&self) -> f64 {
        self.left_line.slope
    }

    pub fn final_slope(&self) -> f64 {
        self.lines.last().unwrap().slope
    }

    /// Slopes of every piece from left to right, starting with the left tail.
    pub fn slopes(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.left_slope()).chain(self.lines.iter().map(|l| l.slope))
    }

    /// `χ(−∞)`.
    pub fn infimum(&self) -> f64 {
        match self.left_end {
            LeftEnd::FiniteValue(v) => v,
            LeftEnd::MinusInfinity(_) => f64::NEG_INFINITY,
        }
    }

    pub fn is_bounded_below(&self) -> bool {
        matches!(self.left_end, LeftEnd::FiniteValue(_))
    }

    /// Limit of `χ(t)` as `t → log_r`.
    pub fn boundary_value(&self) -> f64 {
        self.lines.last().unwrap().at(self.log_r)
    }

    fn check_domain(&self, t: f64) -> Result<(), ProfileError> {
        if t.is_nan() || t >= self.log_r {
            return Err(ProfileError::OutOfDomain { t, log_r: self.log_r });
        }
        Ok(())
    }

    /// Index of the last breakpoint with `t_i ≤ t`, if any.
    fn piece_index(&self, t: f64) -> Option<usize> {
        let idx = self.knots.partition_point(|k| k.0 <= t);
        idx.checked_sub(1)
    }

    /// Exact value of `χ(t)`; `t = −∞` is allowed and denotes the origin.
    pub fn eval(&self, t: f64) -> Result<f64, ProfileError> {
        self.check_domain(t)?;
        if t == f64::NEG_INFINITY {
            return Ok(self.infimum());
        }
        Ok(match self.piece_index(t) {
            None => match self.left_end {
                LeftEnd::FiniteValue(v) => v,
                LeftEnd::MinusInfinity(_) => self.left_line.at(t),
            },
            Some(i) => {
                let (ti, vi) = self.knots[i];
                if t == ti {
                    vi
                } else {
                    self.lines[i].at(t)
                }
            }
        })
    }

    /// Right derivative `χ′₊(t)`.
    pub fn right_slope(&self, t: f64) -> Result<f64, ProfileError> {
        self.check_domain(t)?;
        Ok(match self.piece_index(t) {
            None => self.left_slope(),
            Some(i) => self.lines[i].slope,
        })
    }

    fn crossing(&self, level: f64) -> Crossing {
        let last_below = self.knots.iter().rposition(|&(_, v)| v <= level);
        match last_below {
            None => match self.left_end {
                LeftEnd::FiniteValue(_) => Crossing::Empty,
                LeftEnd::MinusInfinity(_) => {
                    let t0 = self.knots[0].0;
                    let t = self.left_line.level_crossing(level).min(t0.next_down());
                    Crossing::Inside { t, piece: None }
                }
            },
            Some(a) => {
                let (ta, va) = self.knots[a];
                let line = self.lines[a];
                let is_last = a + 1 == self.knots.len();
                if is_last && line.slope == 0.0 {
                    return Crossing::Whole;
                }
                if va == level {
                    return Crossing::Knot(a);
                }
                let mut t = line.level_crossing(level).max(ta.next_up());
                if !is_last {
                    t = t.min(self.knots[a + 1].0.next_down());
                } else if t >= self.log_r {
                    return Crossing::Whole;
                }
                Crossing::Inside { t, piece: Some(a) }
            }
        }
    }

    /// Profile of `max(χ, level)`.
    pub fn clamp_below(&self, level: f64) -> Result<Self, ProfileError> {
        if !level.is_finite() {
            return Err(ProfileError::InvalidParameter(format!("clamp level {level}")));
        }
        let cut = |knots: Vec<(f64, f64)>, lines: Vec<Line>| {
            let t0 = knots[0].0;
            Self {
                knots,
                left_end: LeftEnd::FiniteValue(level),
                left_line: Line {
                    slope: 0.0,
                    anchor_t: t0,
                    anchor_v: level,
                },
                lines,
                log_r: self.log_r,
            }
        };
        Ok(match self.crossing(level) {
            Crossing::Empty => self.clone(),
            Crossing::Whole => {
                let t = self.knots.last().unwrap().0;
                cut(
                    vec![(t, level)],
                    vec![Line {
                        slope: 0.0,
                        anchor_t: t,
                        anchor_v: level,
                    }],
                )
            }
            Crossing::Knot(a) => cut(self.knots[a..].to_vec(), self.lines[a..].to_vec()),
            Crossing::Inside { t, piece: Some(a) } => {
                let mut knots = Vec::with_capacity(self.knots.len() - a);
                knots.push((t, level));
                knots.extend_from_slice(&self.knots[a + 1..]);
                cut(knots, self.lines[a..].to_vec())
            }
            Crossing::Inside { t, piece: None } => {
                let mut knots = Vec::with_capacity(self.knots.len() + 1);
                knots.push((t, level));
                knots.extend_from_slice(&self.knots);
                let mut lines = Vec::with_capacity(self.lines.len() + 1);
                lines.push(self.left_line);
                lines.extend_from_slice(&self.lines);
                cut(knots, lines)
            }
        })
    }

    /// Profile of the truncation `max{u, −j}`.
    pub fn truncate(&self, j: f64) -> Result<Self, ProfileError> {
        if !(j > 0.0) {
            return Err(ProfileError::InvalidParameter(format!("truncation level j = {j} must be positive")));
        }
        self.clamp_below(-j)
    }

    /// Profile of `u + c`.
    pub fn shift(&self, c: f64) -> Self {
        let mv = |l: &Line| Line {
            anchor_v: l.anchor_v + c,
            ..*l
        };
        Self {
            knots: self.knots.iter().map(|&(t, v)| (t, v + c)).collect(),
            left_end: match self.left_end {
                LeftEnd::FiniteValue(v) => LeftEnd::FiniteValue(v + c),
                other => other,
            },
            left_line: mv(&self.left_line),
            lines: self.lines.iter().map(mv).collect(),
            log_r: self.log_r,
        }
    }

    /// The sublevel set `{u ≤ s}` as log-radius intervals.
    ///
    /// A sublevel that fills the whole ball is returned as `[−∞, log_r]`,
    /// which is not compact in the ball; capacity routines reject it.
    pub fn sublevel(&self, s: f64) -> RadialCompact {
        match self.crossing(s) {
            Crossing::Empty => RadialCompact::empty(),
            Crossing::Whole => RadialCompact::ball_unchecked(self.log_r),
            Crossing::Knot(a) => RadialCompact::ball_unchecked(self.knots[a].0),
            Crossing::Inside { t, .. } => RadialCompact::ball_unchecked(t),
        }
    }

    /// The level set `{u = s}`.
    pub fn level_set(&self, s: f64) -> RadialCompact {
        if let LeftEnd::FiniteValue(v) = self.left_end {
            if s == v {
                // flat left tail: the closed ball up to the end of the flat
                return self.sublevel(s);
            }
        }
        match self.crossing(s) {
            Crossing::Empty | Crossing::Whole => RadialCompact::empty(),
            Crossing::Knot(a) => RadialCompact::sphere_unchecked(self.knots[a].0),
            Crossing::Inside { t, .. } => RadialCompact::sphere_unchecked(t),
        }
    }

    pub fn to_json(&self) -> ProfileJson {
        ProfileJson::from(self)
    }
}

impl fmt::Display for ConvexProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.left_end {
            LeftEnd::FiniteValue(v) => write!(f, "[const {v}]")?,
            LeftEnd::MinusInfinity(s) => write!(f, "[-inf slope {s}]")?,
        }
        for (t, v) in &self.knots {
            write!(f, " ({t}, {v})")?;
        }
        write!(f, " -> slope {} up to {}", self.final_slope(), self.log_r)
    }
}

/// Analytic families that enter only through sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticFamily {
    /// `χ(t) = t`.
    Log,
    /// `χ(t) = max(t, c)`.
    MaxConst(f64),
    /// `χ(t) = −(−t)^α` for `t < 0`, `0 < α < 1`.
    PowerTail(f64),
    /// `χ(t) = a·t + b`, `a ≥ 0`.
    LinearCap(f64, f64),
}

impl AnalyticFamily {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Self::Log => t,
            Self::MaxConst(c) => t.max(c),
            Self::PowerTail(a) => -(-t).powf(a),
            Self::LinearCap(a, b) => a * t + b,
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            Self::Log => 1.0,
            Self::MaxConst(c) => {
                if t < c {
                    0.0
                } else {
                    1.0
                }
            }
            Self::PowerTail(a) => a * (-t).powf(a - 1.0),
            Self::LinearCap(a, _) => a,
        }
    }
}

/// Samples an analytic family at the grid nodes and interpolates linearly.
///
/// `PowerTail` is held constant left of the first node (a bounded
/// approximant); its slope beyond the last node is the analytic derivative
/// there. `MaxConst` always includes its kink as a node, and the linear
/// families are represented exactly.
pub fn sample_analytic(
    family: AnalyticFamily,
    grid: &[f64],
    log_r: f64,
) -> Result<ConvexProfile, ProfileError> {
    if grid.is_empty() {
        return Err(ProfileError::NoBreakpoints);
    }
    match family {
        AnalyticFamily::Log => {
            let knots = grid.iter().map(|&t| (t, t)).collect();
            ConvexProfile::with_final_slope(knots, LeftEnd::MinusInfinity(1.0), 1.0, log_r)
        }
        AnalyticFamily::MaxConst(c) => {
            let mut nodes: Vec<f64> = grid.iter().copied().filter(|&t| t > c).collect();
            nodes.insert(0, c);
            let knots = nodes.into_iter().map(|t| (t, family.value(t))).collect();
            ConvexProfile::with_final_slope(knots, LeftEnd::FiniteValue(c), 1.0, log_r)
        }
        AnalyticFamily::LinearCap(a, b) => {
            if !(a >= 0.0) {
                return Err(ProfileError::InvalidParameter(format!("LinearCap slope {a} must be >= 0")));
            }
            let knots: Vec<(f64, f64)> = grid.iter().map(|&t| (t, a * t + b)).collect();
            let left = if a == 0.0 {
                LeftEnd::FiniteValue(knots[0].1)
            } else {
                LeftEnd::MinusInfinity(a)
            };
            ConvexProfile::with_final_slope(knots, left, a, log_r)
        }
        AnalyticFamily::PowerTail(alpha) => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(ProfileError::InvalidParameter(format!("PowerTail exponent {alpha} not in (0,1)")));
            }
            if log_r > 0.0 || *grid.last().unwrap() >= 0.0 {
                return Err(ProfileError::InvalidParameter(
                    "PowerTail lives on t < 0: need log_R <= 0 and negative grid nodes".into(),
                ));
            }
            let knots: Vec<(f64, f64)> = grid.iter().map(|&t| (t, family.value(t))).collect();
            let mut prev = 0.0;
            for (i, w) in knots.windows(2).enumerate() {
                if w[1].0 <= w[0].0 {
                    return Err(ProfileError::UnorderedBreakpoints { index: i + 1 });
                }
                let s = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
                if s < prev {
                    return Err(ProfileError::NotConvexOnGrid { index: i + 1 });
                }
                prev = s;
            }
            let t_last = grid[grid.len() - 1];
            let final_slope = family.derivative(t_last).max(prev);
            ConvexProfile::with_final_slope(knots.clone(), LeftEnd::FiniteValue(knots[0].1), final_slope, log_r)
        }
    }
}

/// Grid for sampling `PowerTail(α)` whose nodes sit at the level crossings
/// `t = −x^{1/α}` for `x = 2^{m/8}`, `x` running from `level_min` to
/// `level_max`. Powers of two up to `level_max` are hit exactly, so
/// sublevels `{u ≤ −2^m}` are resolved at nodes.
pub fn power_tail_grid(alpha: f64, level_min: f64, level_max: f64) -> Vec<f64> {
    let lo = level_min.log2();
    let hi = level_max.log2();
    let steps = ((hi - lo) * 8.0).ceil() as i64;
    let mut xs: Vec<f64> = (0..=steps).map(|k| 2f64.powf(lo + k as f64 / 8.0)).collect();
    xs.dedup();
    let inv = 1.0 / alpha;
    let mut grid: Vec<f64> = xs.into_iter().rev().map(|x| -x.powf(inv)).collect();
    grid.dedup();
    grid
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LeftEndJson {
    pub kind: String,
    pub value_or_slope: f64,
}

/// Wire format of a profile.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProfileJson {
    pub left_end: LeftEndJson,
    pub breakpoints: Vec<[f64; 2]>,
    #[serde(rename = "log_R")]
    pub log_r: f64,
    /// Slope beyond the last breakpoint; defaults to the last chord slope.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_slope: Option<f64>,
}

impl From<&ConvexProfile> for ProfileJson {
    fn from(p: &ConvexProfile) -> Self {
        let (kind, x) = match p.left_end {
            LeftEnd::FiniteValue(v) => ("finite", v),
            LeftEnd::MinusInfinity(s) => ("minus_infinity", s),
        };
        Self {
            left_end: LeftEndJson {
                kind: kind.into(),
                value_or_slope: x,
            },
            breakpoints: p.knots.iter().map(|&(t, v)| [t, v]).collect(),
            log_r: p.log_r,
            final_slope: Some(p.final_slope()),
        }
    }
}

impl TryFrom<ProfileJson> for ConvexProfile {
    type Error = ProfileError;

    fn try_from(j: ProfileJson) -> Result<Self, Self::Error> {
        let left = match j.left_end.kind.as_str() {
            "finite" => LeftEnd::FiniteValue(j.left_end.value_or_slope),
            "minus_infinity" => LeftEnd::MinusInfinity(j.left_end.value_or_slope),
            other => return Err(ProfileError::InvalidLeftEnd(format!("unknown kind {other:?}"))),
        };
        let bps: Vec<(f64, f64)> = j.breakpoints.iter().map(|b| (b[0], b[1])).collect();
        match j.final_slope {
            Some(s) => ConvexProfile::with_final_slope(bps, left, s, j.log_r),
            None => ConvexProfile::new(bps, left, j.log_r),
        }
    }
}

impl Serialize for ConvexProfile {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ProfileJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for ConvexProfile {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = ProfileJson::deserialize(d)?;
        ConvexProfile::try_from(j).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_profile() -> ConvexProfile {
        ConvexProfile::new(vec![(0.0, 0.0)], LeftEnd::MinusInfinity(1.0), 1.0).unwrap()
    }

    fn max0() -> ConvexProfile {
        ConvexProfile::with_final_slope(vec![(0.0, 0.0)], LeftEnd::FiniteValue(0.0), 1.0, 1.0).unwrap()
    }

    fn power_half() -> ConvexProfile {
        let grid = power_tail_grid(0.5, 0.5, 64.0);
        sample_analytic(AnalyticFamily::PowerTail(0.5), &grid, 0.0).unwrap()
    }

    #[test]
    fn make_profile_examples() {
        let p = log_profile();
        assert_eq!(p.eval(-3.0).unwrap(), -3.0);
        assert_eq!(p.eval(0.5).unwrap(), 0.5);
        assert_eq!(p.eval(f64::NEG_INFINITY).unwrap(), f64::NEG_INFINITY);
        let m = max0();
        assert_eq!(m.eval(-5.0).unwrap(), 0.0);
        assert_eq!(m.eval(0.25).unwrap(), 0.25);
        let err = ConvexProfile::new(vec![(1.0, 0.0), (0.0, 1.0)], LeftEnd::FiniteValue(0.0), 2.0);
        assert!(matches!(err, Err(ProfileError::UnorderedBreakpoints { index: 1 })));
    }

    #[test]
    fn invariant_violations() {
        let e = ConvexProfile::new(vec![(-2.0, 0.0), (-1.0, 2.0), (-0.5, 2.5)], LeftEnd::FiniteValue(0.0), 0.0);
        assert!(matches!(e, Err(ProfileError::ConvexityViolation { .. })));
        let e = ConvexProfile::new(vec![(-2.0, 0.0), (-1.0, -1.0)], LeftEnd::FiniteValue(0.0), 0.0);
        assert!(matches!(e, Err(ProfileError::MonotonicityViolation { .. })));
        let e = ConvexProfile::new(vec![(-2.0, 0.0), (-1.0, 0.5)], LeftEnd::MinusInfinity(1.0), 0.0);
        assert!(matches!(e, Err(ProfileError::ConvexityViolation { index: 0, .. })));
        let e = ConvexProfile::new(vec![(-2.0, 0.0)], LeftEnd::MinusInfinity(0.0), 0.0);
        assert!(matches!(e, Err(ProfileError::InvalidLeftEnd(_))));
        let e = ConvexProfile::new(vec![(-2.0, 0.0)], LeftEnd::FiniteValue(1.0), 0.0);
        assert!(matches!(e, Err(ProfileError::InvalidLeftEnd(_))));
        let e = ConvexProfile::new(vec![(0.0, 0.0)], LeftEnd::MinusInfinity(1.0), 0.0);
        assert!(matches!(e, Err(ProfileError::OutOfDomain { .. })));
    }

    #[test]
    fn eval_out_of_domain() {
        let p = log_profile();
        assert!(matches!(p.eval(1.0), Err(ProfileError::OutOfDomain { .. })));
        assert!(matches!(p.right_slope(2.0), Err(ProfileError::OutOfDomain { .. })));
        assert!(p.eval(f64::NAN).is_err());
    }

    #[test]
    fn power_tail_eval_at_node() {
        let p = power_half();
        // -4 = -(2^1)^2 is a node
        assert_eq!(p.eval(-4.0).unwrap(), -2.0);
            let t = -5.0;
        let exact = -(5.0f64).sqrt();
        let v = p.eval(t).unwrap();
        // convex function: the chord lies above, within the sampling error
        assert!(v >= exact - 1e-12 && v - exact < 0.05, "{v} vs {exact}");
    }

    #[test]
    fn truncate_examples() {
        let t = log_profile().truncate(2.0).unwrap();
        assert_eq!(t.left_end(), LeftEnd::FiniteValue(-2.0));
        assert_eq!(t.breakpoints()[0], (-2.0, -2.0));
        assert_eq!(t.eval(-7.0).unwrap(), -2.0);
        assert_eq!(t.eval(-1.0).unwrap(), -1.0);
        assert_eq!(t.right_slope(-2.0).unwrap(), 1.0);

        let m = max0();
        assert_eq!(m.truncate(5.0).unwrap(), m);

        let p = power_half();
        let t3 = p.truncate(3.0).unwrap();
        assert_eq!(t3.breakpoints()[0].1, -3.0);
        // the sampled chord crosses −3 near the analytic crossing t = −9
        assert!((t3.breakpoints()[0].0 + 9.0).abs() < 0.5);
        assert_eq!(t3.left_end(), LeftEnd::FiniteValue(-3.0));
        assert!(p.truncate(0.0).is_err());
    }

    #[test]
    fn truncate_whole_domain_gives_constant() {
        let p = log_profile();
        // log ≤ 1 on the ball of radius e, so max(log, 2) is constant
        let c = p.clamp_below(2.0).unwrap();
        assert_eq!(c.final_slope(), 0.0);
        assert_eq!(c.eval(-10.0).unwrap(), 2.0);
        assert_eq!(c.eval(0.9).unwrap(), 2.0);
    }

    #[test]
    fn sublevel_examples() {
        let p = ConvexProfile::log(0.0, 0.0).unwrap();
        for j in [1.0, 3.0, 10.0] {
            let s = p.sublevel(-j);
            assert_eq!(s.intervals(), &[(f64::NEG_INFINITY, -j)]);
        }
        assert!(max0().sublevel(-1.0).is_empty());
        let pt = power_half();
        let s = pt.sublevel(-4.0);
        assert_eq!(s.intervals(), &[(f64::NEG_INFINITY, -16.0)]);
    }

    #[test]
    fn level_set_examples() {
        let p = ConvexProfile::log(0.0, 0.0).unwrap();
        assert_eq!(p.level_set(-3.0).intervals(), &[(-3.0, -3.0)]);
        let t = p.truncate(2.0).unwrap();
        assert_eq!(t.level_set(-2.0).intervals(), &[(f64::NEG_INFINITY, -2.0)]);
        assert!(max0().level_set(-1.0).is_empty());
    }

    #[test]
    fn right_slope_examples() {
        let m = max0();
        assert_eq!(m.right_slope(-0.5).unwrap(), 0.0);
        assert_eq!(m.right_slope(0.0).unwrap(), 1.0);
        assert_eq!(m.right_slope(f64::NEG_INFINITY).unwrap(), 0.0);
        let l = log_profile();
        for t in [f64::NEG_INFINITY, -100.0, 0.0, 0.5] {
            assert_eq!(l.right_slope(t).unwrap(), 1.0);
        }
    }

    #[test]
    fn sample_families() {
        let j = 4.0;
        let p = sample_analytic(AnalyticFamily::MaxConst(1.0 / j), &[-1.0, 0.0, 0.5], 1.0).unwrap();
        assert_eq!(p, ConvexProfile::max_const(0.25, 1.0).unwrap().clone_with_knots(&[0.25, 0.5]));
        let c = sample_analytic(AnalyticFamily::LinearCap(0.0, -5.0), &[-1.0], 0.0).unwrap();
        assert_eq!(c.final_slope(), 0.0);
        assert_eq!(c.eval(-0.5).unwrap(), -5.0);

        let grid: Vec<f64> = (0..=400).map(|i| -100.0 + i as f64 * (99.75 / 400.0)).collect();
        let pt = sample_analytic(AnalyticFamily::PowerTail(0.5), &grid, 0.0).unwrap();
        for jj in 1..=9 {
            let t = -((jj * jj) as f64);
            if let Ok(k) = grid.binary_search_by(|x| x.total_cmp(&t)) {
                assert_eq!(pt.eval(grid[k]).unwrap(), -(jj as f64));
            }
        }
        // non-convex sampling is rejected
        let bad = sample_analytic(AnalyticFamily::PowerTail(0.5), &[-4.0, -4.0], 0.0);
        assert!(bad.is_err());
    }

    impl ConvexProfile {
        fn clone_with_knots(&self, ts: &[f64]) -> Self {
            let knots = ts.iter().map(|&t| (t, self.eval(t).unwrap())).collect();
            ConvexProfile::with_final_slope(knots, self.left_end, self.final_slope(), self.log_r).unwrap()
        }
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let p = power_half().truncate(3.0).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        let back: ConvexProfile = serde_json::from_str(&s).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), s);
        assert_eq!(back.breakpoints(), p.breakpoints());

        let raw = r#"{"left_end":{"kind":"minus_infinity","value_or_slope":1.0},"breakpoints":[[-1.0,-1.0]],"log_R":0.0}"#;
        let q: ConvexProfile = serde_json::from_str(raw).unwrap();
        assert_eq!(q.final_slope(), 1.0);
        assert!(serde_json::from_str::<ConvexProfile>(r#"{"left_end":{"kind":"x","value_or_slope":1.0},"breakpoints":[[0.0,0.0]],"log_R":1.0}"#).is_err());
    }
}
