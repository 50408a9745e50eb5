//! Executable harnesses for the truncation, weak-convergence, maximality and
//! domain-membership statements about radial psh functions.
//!
//! Every pairing is atom bookkeeping, so the test-function battery is the only
//! approximation of weak convergence. Nothing here asserts a converse.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::capacity::{condition_level, condition_sublevel};
use crate::compact::RadialCompact;
use crate::measure::{ma_measure, np_part, MeasureError, RadialMeasure, RadialTestFunction};
use crate::profile::{ConvexProfile, ProfileError};
use crate::series::{DiagnosticSeries, LimitFlag};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConvergenceError {
    #[error("sequence declared decreasing but u_{k_next}({t}) = {next} > u_{k}({t}) = {prev}")]
    NonMonotoneSequence {
        k: f64,
        k_next: f64,
        t: f64,
        prev: f64,
        next: f64,
    },
    #[error("limit profile exceeds member {k} at t = {t}")]
    LimitAboveMember { k: f64, t: f64 },
    #[error("not admissible: {0}")]
    NotAdmissible(String),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

pub type Generator = Arc<dyn Fn(f64) -> Result<ConvexProfile, ProfileError> + Send + Sync>;

/// Lazily generated profiles `k ↦ u_k` with a declared limit.
#[derive(Clone)]
pub struct ProfileSequence {
    pub name: String,
    pub declared_monotone: bool,
    pub limit: ConvexProfile,
    generator: Generator,
}

impl fmt::Debug for ProfileSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProfileSequence")
            .field("name", &self.name)
            .field("declared_monotone", &self.declared_monotone)
            .field("limit", &self.limit)
            .finish_non_exhaustive()
    }
}

impl ProfileSequence {
    pub fn new(
        name: impl Into<String>,
        limit: ConvexProfile,
        declared_monotone: bool,
        generator: impl Fn(f64) -> Result<ConvexProfile, ProfileError> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            declared_monotone,
            limit,
            generator: Arc::new(generator),
        }
    }

    /// `u_k = max{u, −k}`.
    pub fn truncations(profile: &ConvexProfile) -> Self {
        let p = profile.clone();
        Self::new("truncations", profile.clone(), true, move |k| p.truncate(k))
    }

    pub fn at(&self, k: f64) -> Result<ConvexProfile, ProfileError> {
        (self.generator)(k)
    }

    /// Checks `u_{k'} ≤ u_k` for consecutive schedule entries and
    /// `limit ≤ u_k`, at every breakpoint involved and between them.
    pub fn spot_check(&self, ks: &[f64]) -> Result<(), ConvergenceError> {
        let members: Vec<ConvexProfile> = ks.iter().map(|&k| self.at(k)).collect::<Result<_, _>>()?;
        let log_r = self.limit.log_r();
        let mut ts: Vec<f64> = self.limit.breakpoints().iter().map(|b| b.0).collect();
        for m in &members {
            ts.extend(m.breakpoints().iter().map(|b| b.0));
        }
        ts.retain(|&t| t < log_r);
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        let mut samples = vec![ts[0] - 1.0];
        for w in ts.windows(2) {
            samples.push(0.5 * (w[0] + w[1]));
        }
        samples.extend_from_slice(&ts);
        samples.push(0.5 * (ts[ts.len() - 1] + log_r));
        let tol = |v: f64| 1e-12 * (1.0 + v.abs());

        for t in samples {
            let lim = self.limit.eval(t)?;
            let mut prev: Option<(f64, f64)> = None;
            for (&k, m) in ks.iter().zip(&members) {
                let v = m.eval(t)?;
                if lim > v + tol(v) {
                    return Err(ConvergenceError::LimitAboveMember { k, t });
                }
                if let Some((pk, pv)) = prev {
                    if self.declared_monotone && v > pv + tol(pv) {
                        return Err(ConvergenceError::NonMonotoneSequence {
                            k: pk,
                            k_next: k,
                            t,
                            prev: pv,
                            next: v,
                        });
                    }
                }
                prev = Some((k, v));
            }
        }
        Ok(())
    }
}

/// Named finite family of test functions standing in for `C_c`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Battery {
    pub name: String,
    pub functions: Vec<RadialTestFunction>,
}

impl Battery {
    /// Eight plateaus and eight hats at scales `s = 2^{i−3}`.
    pub fn standard(log_r: f64) -> Self {
        let mut functions = Vec::with_capacity(16);
        for i in 0..8 {
            let s = 2f64.powi(i - 3);
            functions.push(RadialTestFunction::plateau(log_r - 2.0 * s, log_r - s).unwrap());
        }
        for i in 0..8 {
            let s = 2f64.powi(i - 3);
            functions.push(RadialTestFunction::hat(log_r - 4.0 * s, log_r - 2.0 * s).unwrap());
        }
        Self {
            name: "standard-16".into(),
            functions,
        }
    }

    /// Sixteen hats supported in annuli bounded away from the origin.
    pub fn annular(log_r: f64) -> Self {
        let functions = (0..16)
            .map(|i| {
                let s = 2f64.powf((i as f64 - 8.0) / 2.0);
                RadialTestFunction::hat(log_r - 4.0 * s, log_r - s).unwrap()
            })
            .collect();
        Self {
            name: "annular-16".into(),
            functions,
        }
    }
}

/// Serializable harness output; CSV projections per series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub hypothesis_series: BTreeMap<String, DiagnosticSeries>,
    pub conclusion_series: BTreeMap<String, DiagnosticSeries>,
    pub flags: BTreeMap<String, String>,
    pub verdict: String,
    pub battery: Option<String>,
}

impl ScenarioReport {
    fn new(scenario: &str) -> Self {
        Self {
            scenario: scenario.into(),
            hypothesis_series: BTreeMap::new(),
            conclusion_series: BTreeMap::new(),
            flags: BTreeMap::new(),
            verdict: String::new(),
            battery: None,
        }
    }

    fn flag(&mut self, key: &str, value: impl ToString) {
        self.flags.insert(key.into(), value.to_string());
    }
}

/// Above this boundary slope the profile is steep near the boundary sphere
/// and the report says so.
const STEEP_BOUNDARY_SLOPE: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationRow {
    pub j: f64,
    pub total_on_k: f64,
    pub interior_part: f64,
    pub level_part: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationReport {
    pub rows: Vec<TruncationRow>,
    pub np_mass: f64,
    /// `j ↦ |total_on_K − np_mass|`.
    pub series_a: DiagnosticSeries,
    /// `j ↦ level_part`.
    pub series_b: DiagnosticSeries,
    /// `total = interior + level` held bit-exactly at every j.
    pub decomposition_exact: bool,
    /// The truncated measure charged no point of `{u < −j}`.
    pub no_mass_below_level: bool,
    pub interior_monotone: bool,
    /// Zero flags of (a) and (b) agree; `None` when `np_mass` is infinite.
    pub equivalence_holds: Option<bool>,
    /// A zero flag on (b) forces one on (a).
    pub b_implies_a: bool,
}

fn is_zero(s: &DiagnosticSeries) -> bool {
    s.flag == LimitFlag::ConvergingToZero
}

/// Splits the truncated masses on `K` at the level `−j`.
pub fn truncation_analysis(
    profile: &ConvexProfile,
    k: &RadialCompact,
    n: u32,
    j_schedule: &[f64],
) -> Result<TruncationReport, ConvergenceError> {
    let np_mass = np_part(profile, n)?.mass_on(k);
    let mut rows = Vec::with_capacity(j_schedule.len());
    let mut decomposition_exact = true;
    let mut no_mass_below_level = true;
    for &j in j_schedule {
        let mu = ma_measure(&profile.truncate(j)?, n);
        let below = profile.sublevel(-j);
        let edge = below.sup();
        // Atoms in {u ≤ −j} may only sit on its outer sphere, where u = −j.
        let stray = mu.mass_where(|t| below.contains(t) && Some(t) != edge);
        no_mass_below_level &= stray == 0.0;
        let on_level = |t: f64| below.contains(t) && Some(t) == edge;
        let total = mu.mass_on(k);
        let interior = mu.mass_where(|t| k.contains(t) && !below.contains(t));
        let level = mu.mass_where(|t| k.contains(t) && on_level(t));
        decomposition_exact &= total == interior + level;
        rows.push(TruncationRow {
            j,
            total_on_k: total,
            interior_part: interior,
            level_part: level,
        });
    }
    let interior_monotone = rows.windows(2).all(|w| w[1].interior_part >= w[0].interior_part);
    let series_a = DiagnosticSeries::new("j", rows.iter().map(|r| (r.j, (r.total_on_k - np_mass).abs())).collect());
    let series_b = DiagnosticSeries::new("j", rows.iter().map(|r| (r.j, r.level_part)).collect());
    let equivalence_holds = np_mass.is_finite().then(|| is_zero(&series_a) == is_zero(&series_b));
    let b_implies_a = !is_zero(&series_b) || is_zero(&series_a);
    Ok(TruncationReport {
        rows,
        np_mass,
        series_a,
        series_b,
        decomposition_exact,
        no_mass_below_level,
        interior_monotone,
        equivalence_holds,
        b_implies_a,
    })
}

impl TruncationReport {
    pub fn scenario(&self, name: &str) -> ScenarioReport {
        let mut r = ScenarioReport::new(name);
        r.hypothesis_series.insert("level_part".into(), self.series_b.clone());
        r.conclusion_series.insert("total_minus_np".into(), self.series_a.clone());
        r.flag("np_mass", self.np_mass);
        r.flag("decomposition_exact", self.decomposition_exact);
        r.flag("no_mass_below_level", self.no_mass_below_level);
        r.flag("interior_monotone", self.interior_monotone);
        r.flag("b_implies_a", self.b_implies_a);
        r.verdict = match self.equivalence_holds {
            Some(true) => "equivalence holds".into(),
            Some(false) => "equivalence violated".into(),
            None => "np mass infinite: only (b) implies (a) is checked".into(),
        };
        r
    }
}

/// Relative tolerance for matching a pairing with its target.
pub const TARGET_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakReport {
    pub test_function: String,
    /// `k ↦ ∫φ (dd^c u_k)^n`.
    pub series: DiagnosticSeries,
    /// `∫φ NP(dd^c u)^n`.
    pub target: f64,
    /// `k ↦ |∫φ (dd^c u_k)^n − target|`.
    pub gap: DiagnosticSeries,
    pub converged: bool,
    /// Every tail value is at least `target − 10⁻⁹(1 + |target|)`.
    pub liminf_ok: bool,
}

fn pairing_report(
    members: &[(f64, RadialMeasure)],
    np: &RadialMeasure,
    phi: &RadialTestFunction,
) -> WeakReport {
    let target = np.integrate(phi);
    let entries: Vec<(f64, f64)> = members.iter().map(|(k, mu)| (*k, mu.integrate(phi))).collect();
    let last = entries.last().map_or(f64::NAN, |e| e.1);
    let gap = DiagnosticSeries::new("k", entries.iter().map(|&(k, v)| (k, (v - target).abs())).collect());
    let series = DiagnosticSeries::new("k", entries);
    let floor = target - TARGET_RTOL * (1.0 + target.abs());
    let liminf_ok = series.tail_min().is_some_and(|m| m >= floor);
    WeakReport {
        test_function: phi.name.clone(),
        converged: (last - target).abs() <= TARGET_RTOL * target.abs(),
        series,
        target,
        gap,
        liminf_ok,
    }
}

fn members(seq: &ProfileSequence, n: u32, k_schedule: &[f64]) -> Result<Vec<(f64, RadialMeasure)>, ConvergenceError> {
    k_schedule
        .iter()
        .map(|&k| Ok((k, ma_measure(&seq.at(k)?, n))))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakBatteryReport {
    pub sequence: String,
    pub battery: String,
    pub hypothesis: DiagnosticSeries,
    pub np_finite: bool,
    pub limit_final_slope: f64,
    pub pairings: Vec<WeakReport>,
    /// Hypothesis read as zero, NP finite, and some pairing missed its target.
    pub implication_violated: bool,
}

impl WeakBatteryReport {
    pub fn all_converged(&self) -> bool {
        self.pairings.iter().all(|p| p.converged)
    }

    pub fn liminf_ok(&self) -> bool {
        self.pairings.iter().all(|p| p.liminf_ok)
    }

    pub fn scenario(&self) -> ScenarioReport {
        let mut r = ScenarioReport::new("weak-converge");
        r.hypothesis_series.insert("condition_sublevel".into(), self.hypothesis.clone());
        for p in &self.pairings {
            r.conclusion_series.insert(p.test_function.clone(), p.gap.clone());
        }
        r.flag("hypothesis", self.hypothesis.flag);
        r.flag("conclusion", if self.all_converged() { "converging" } else { "not-converging" });
        r.flag("np_finite", self.np_finite);
        r.flag("implication_violated", self.implication_violated);
        r.flag("liminf_ok", self.liminf_ok());
        if self.limit_final_slope > STEEP_BOUNDARY_SLOPE {
            r.flag("steep_boundary", self.limit_final_slope);
        }
        r.verdict = if self.implication_violated {
            "implication violated".into()
        } else if self.hypothesis.flag == LimitFlag::ConvergingToZero {
            "hypothesis holds and the measures converge".into()
        } else {
            "hypothesis not met; convergence reported without a claim".into()
        };
        r.battery = Some(self.battery.clone());
        r
    }
}

/// Pairs `(dd^c u_k)^n` with one test function.
pub fn weak_convergence_test(
    seq: &ProfileSequence,
    phi: &RadialTestFunction,
    n: u32,
    k_schedule: &[f64],
) -> Result<WeakReport, ConvergenceError> {
    Ok(weak_convergence_battery(
        seq,
        &Battery {
            name: phi.name.clone(),
            functions: vec![phi.clone()],
        },
        n,
        k_schedule,
        &crate::capacity::default_j_schedule(),
    )?
    .pairings
    .remove(0))
}

/// Pairs `(dd^c u_k)^n` with every battery function and evaluates the
/// capacity-decay hypothesis on the limit.
pub fn weak_convergence_battery(
    seq: &ProfileSequence,
    battery: &Battery,
    n: u32,
    k_schedule: &[f64],
    j_schedule: &[f64],
) -> Result<WeakBatteryReport, ConvergenceError> {
    if seq.declared_monotone {
        seq.spot_check(k_schedule)?;
    }
    let np = np_part(&seq.limit, n)?;
    let np_finite = np.total_mass().is_finite();
    let ms = members(seq, n, k_schedule)?;
    let pairings: Vec<WeakReport> = battery.functions.iter().map(|phi| pairing_report(&ms, &np, phi)).collect();
    let hypothesis = condition_sublevel(&seq.limit, n, j_schedule);
    let implication_violated =
        is_zero(&hypothesis) && np_finite && pairings.iter().any(|p| !p.converged);
    Ok(WeakBatteryReport {
        sequence: seq.name.clone(),
        battery: battery.name.clone(),
        hypothesis,
        np_finite,
        limit_final_slope: seq.limit.final_slope(),
        pairings,
        implication_violated,
    })
}

/// `j ↦ sup_k mass of (dd^c u_k)^n on {u_k ≤ −j}` over the k schedule.
pub fn generalized_condition(
    seq: &ProfileSequence,
    n: u32,
    j_schedule: &[f64],
    k_schedule: &[f64],
) -> Result<DiagnosticSeries, ConvergenceError> {
    let profiles: Vec<ConvexProfile> = k_schedule.iter().map(|&k| seq.at(k)).collect::<Result<_, _>>()?;
    let measures: Vec<RadialMeasure> = profiles.iter().map(|p| ma_measure(p, n)).collect();
    let entries = j_schedule
        .iter()
        .map(|&j| {
            let sup = profiles
                .iter()
                .zip(&measures)
                .map(|(p, mu)| mu.mass_on(&p.sublevel(-j)))
                .fold(0.0, f64::max);
            (j, sup)
        })
        .collect();
    Ok(DiagnosticSeries::new("j", entries))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    /// `k ↦ mass of (dd^c u_k)^n on K`.
    pub series: DiagnosticSeries,
    /// NP mass of the limit on K.
    pub target: f64,
    /// `target − last value`.
    pub gap: f64,
    /// Every value in the tail stays below the target by at least `gap / 2`.
    pub persistent: bool,
}

/// Compact-set masses along a sequence against the NP mass of its limit.
pub fn setwise_gap_demo(
    seq: &ProfileSequence,
    k: &RadialCompact,
    n: u32,
    k_schedule: &[f64],
) -> Result<GapReport, ConvergenceError> {
    let target = np_part(&seq.limit, n)?.mass_on(k);
    let entries: Vec<(f64, f64)> = members(seq, n, k_schedule)?
        .into_iter()
        .map(|(i, mu)| (i, mu.mass_on(k)))
        .collect();
    let last = entries.last().map_or(f64::NAN, |e| e.1);
    let gap = target - last;
    let series = DiagnosticSeries::new("k", entries);
    let persistent = gap > 0.0 && series.entries[tail_index(&series)..].iter().all(|e| e.1 <= target - gap / 2.0);
    Ok(GapReport {
        series,
        target,
        gap,
        persistent,
    })
}

fn tail_index(s: &DiagnosticSeries) -> usize {
    let len = s.entries.len();
    len - ((len as f64 * s.metadata.rule.tail_fraction).ceil() as usize).max(3).min(len)
}

/// Closed balls `log_R − 2^{−m}`, `m = 0..=10`.
pub fn default_exhaustion(log_r: f64) -> Vec<RadialCompact> {
    (0..=10)
        .map(|m| RadialCompact::ball(log_r - 2f64.powi(-m)).unwrap())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaximalityReport {
    pub np_masses: Vec<f64>,
    pub np_vanishes: bool,
    pub level_condition: DiagnosticSeries,
    /// `j ↦ ∫φ (dd^c max{u, −j})^n` per test function.
    pub pairings: Vec<(String, DiagnosticSeries)>,
    pub verdict: String,
    /// The substituted criterion, stated in the report.
    pub criterion: String,
}

pub const MAXIMALITY_CRITERION: &str = "radial criterion: NP(dd^c u)^n vanishes on the exhaustion and the truncated measures tend to 0 against every battery function; this stands in for local maximality";

/// Radial reading of maximality: NP ≡ 0 and the truncated measures tend
/// weakly to 0.
pub fn maximality_check(
    profile: &ConvexProfile,
    n: u32,
    j_schedule: &[f64],
    battery: &Battery,
) -> Result<MaximalityReport, ConvergenceError> {
    let np = np_part(profile, n)?;
    let np_masses: Vec<f64> = default_exhaustion(profile.log_r()).iter().map(|k| np.mass_on(k)).collect();
    let np_vanishes = np_masses.iter().all(|&m| m == 0.0);
    let truncs: Vec<(f64, RadialMeasure)> = j_schedule
        .iter()
        .map(|&j| Ok((j, ma_measure(&profile.truncate(j)?, n))))
        .collect::<Result<_, ConvergenceError>>()?;
    let pairings: Vec<(String, DiagnosticSeries)> = battery
        .functions
        .iter()
        .map(|phi| {
            let e = truncs.iter().map(|(j, mu)| (*j, mu.integrate(phi))).collect();
            (phi.name.clone(), DiagnosticSeries::new("j", e))
        })
        .collect();
    let weak_zero = pairings.iter().all(|(_, s)| is_zero(s));
    let verdict = if np_vanishes && weak_zero {
        "maximal (radial criterion)"
    } else {
        "not maximal (radial criterion)"
    };
    Ok(MaximalityReport {
        np_masses,
        np_vanishes,
        level_condition: condition_level(profile, n, j_schedule),
        pairings,
        verdict: verdict.into(),
        criterion: MAXIMALITY_CRITERION.into(),
    })
}

impl MaximalityReport {
    pub fn scenario(&self, battery: &str) -> ScenarioReport {
        let mut r = ScenarioReport::new("maximality");
        r.hypothesis_series.insert("condition_level".into(), self.level_condition.clone());
        for (name, s) in &self.pairings {
            r.conclusion_series.insert(name.clone(), s.clone());
        }
        r.flag("np_vanishes", self.np_vanishes);
        r.flag("criterion", &self.criterion);
        r.verdict = self.verdict.clone();
        r.battery = Some(battery.into());
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Membership {
    InD,
    NotInD,
    NoVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembershipReport {
    pub np_masses: Vec<f64>,
    pub all_finite: bool,
    pub condition: DiagnosticSeries,
    pub verdict: Membership,
    pub note: String,
}

/// Domain membership under the capacity-decay hypothesis.
pub fn membership_in_d(
    profile: &ConvexProfile,
    n: u32,
    exhaustion: &[RadialCompact],
    j_schedule: &[f64],
) -> Result<MembershipReport, ConvergenceError> {
    let np = np_part(profile, n)?;
    let np_masses: Vec<f64> = exhaustion.iter().map(|k| np.mass_on(k)).collect();
    let all_finite = np_masses.iter().all(|m| m.is_finite());
    let condition = condition_sublevel(profile, n, j_schedule);
    let (verdict, note) = if !is_zero(&condition) {
        (Membership::NoVerdict, "hypothesis fails, no verdict")
    } else if all_finite {
        (Membership::InD, "in D; (dd^c u)^n = NP(dd^c u)^n")
    } else {
        (Membership::NotInD, "NP mass infinite on some compact")
    };
    Ok(MembershipReport {
        np_masses,
        all_finite,
        condition,
        verdict,
        note: note.into(),
    })
}

impl MembershipReport {
    pub fn scenario(&self) -> ScenarioReport {
        let mut r = ScenarioReport::new("membership");
        r.hypothesis_series.insert("condition_sublevel".into(), self.condition.clone());
        let masses = self.np_masses.iter().enumerate().map(|(m, &v)| (m as f64, v)).collect();
        r.conclusion_series.insert("np_mass_on_exhaustion".into(), DiagnosticSeries::new("m", masses));
        r.flag("all_finite", self.all_finite);
        r.verdict = self.note.clone();
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CegrellReport {
    /// `j ↦ total mass of (dd^c max{u, −j})^n`.
    pub masses: DiagnosticSeries,
    pub sup_mass: f64,
    pub finite: bool,
}

/// Total truncated masses as the approximating sequence of the class F.
pub fn cegrell_f_diagnostic(
    profile: &ConvexProfile,
    n: u32,
    j_schedule: &[f64],
) -> Result<CegrellReport, ConvergenceError> {
    let b = profile.boundary_value();
    if b.abs() > 1e-12 {
        return Err(ConvergenceError::NotAdmissible(format!("boundary value {b} is not 0")));
    }
    let entries: Vec<(f64, f64)> = j_schedule
        .iter()
        .map(|&j| Ok((j, ma_measure(&profile.truncate(j)?, n).total_mass())))
        .collect::<Result<_, ConvergenceError>>()?;
    let sup_mass = entries.iter().map(|e| e.1).fold(0.0, f64::max);
    Ok(CegrellReport {
        masses: DiagnosticSeries::new("j", entries),
        sup_mass,
        finite: sup_mass.is_finite(),
    })
}
