//! Scenario runner: each command evaluates one harness, writes
//! `<scenario>.<csv|json>` and a `<scenario>.meta.json` sidecar, and maps
//! failed assertions to exit status 2.

use std::ffi::OsString;
use std::fmt::Display;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::capacity::{ball_capacity_closed_form, capacity, condition_level, condition_sublevel, extremal_profile};
use crate::compact::RadialCompact;
use crate::convergence::{
    maximality_check, membership_in_d, setwise_gap_demo, truncation_analysis, weak_convergence_battery,
    default_exhaustion, Battery, ProfileSequence,
};
use crate::measure::{doubling_schedule, ma_measure};
use crate::oracle::{fd_riesz_measure, relaxation_envelope, Grid1D};
use crate::profile::{power_tail_grid, sample_analytic, AnalyticFamily, ConvexProfile};
use crate::series::LimitFlag;

/// Sweep tolerance of the relaxation oracle, above the SOR rounding floor.
const RELAX_TOL: f64 = 1e-11;

/// Output directory used when `--output` is absent.
pub const OUT_DIR_ENV: &str = "RADIAL_MA_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    /// `log‖z‖` on the unit ball.
    Log,
    /// `max(log‖z‖, 0)` on the ball of radius `e`.
    MaxConst,
    /// `−(−log‖z‖)^α` on the unit ball, sampled.
    PowerTail,
    /// A constant on the unit ball.
    Constant,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Masses of max(log‖z‖, 1/j) on the closed unit ball against the NP
    /// mass of the limit (`--variant sphere` uses the unit sphere).
    Counterexample,
    /// Capacities of the balls e^{−j} in the unit ball, j = 1..=j_max, with a
    /// relaxation-oracle column at spacing h.
    CapacityTable,
    /// The series j^n C_n({u ≤ −j}) and j^n C_n({u = −j}).
    Condition,
    /// Truncated masses on a set of compacts split at the level −j.
    TruncateAnalyze,
    /// Truncation sequence paired with a 16-function battery.
    WeakConverge,
    /// Radial maximality criterion.
    Maximality,
    /// Domain membership under the capacity-decay hypothesis.
    Membership,
    /// Cross-validation against the finite-difference and relaxation oracles.
    OracleCheck,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Self::Counterexample => "counterexample",
            Self::CapacityTable => "capacity-table",
            Self::Condition => "condition",
            Self::TruncateAnalyze => "truncate-analyze",
            Self::WeakConverge => "weak-converge",
            Self::Maximality => "maximality",
            Self::Membership => "membership",
            Self::OracleCheck => "oracle-check",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Parser, Serialize)]
#[command(name = "radial-ma", version, about = "Monge–Ampère measures and capacities of radial psh functions")]
pub struct ScenarioConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Complex dimension.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=16))]
    pub n: u32,
    /// Largest j; schedules double from 1 (capacity-table uses every integer).
    #[arg(long, global = true, default_value_t = 1024, value_parser = clap::value_parser!(u64).range(1..=1 << 20))]
    pub j_max: u64,
    /// Largest k of sequence schedules (doubling from 1).
    #[arg(long, global = true, default_value_t = 1 << 20, value_parser = clap::value_parser!(u64).range(1..=1 << 30))]
    pub k_max: u64,
    /// Oracle grid spacing.
    #[arg(long, global = true, default_value_t = 1e-3, value_parser = positive_f64)]
    pub h: f64,
    #[arg(long, global = true)]
    pub variant: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = ProfileKind::PowerTail)]
    pub profile: ProfileKind,
    /// Exponent of the power-tail profile.
    #[arg(long, global = true, default_value_t = 0.5, value_parser = positive_f64)]
    pub alpha: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output directory; falls back to $RADIAL_MA_OUT_DIR, then `out`.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{s} must be positive and finite"))
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("computation failed: {0}")]
    Compute(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

fn compute<E: Display>(e: E) -> CliError {
    CliError::Compute(e.to_string())
}

/// Rows of one CSV table, every cell already formatted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(csv_cell).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => "inf".into(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn num(x: f64) -> Value {
    // serde_json maps non-finite values to null
    json!(x)
}

/// Schedule indices are integers; print them as such.
fn idx(x: f64) -> Value {
    if x.fract() == 0.0 && x.abs() < 9e15 {
        json!(x as i64)
    } else {
        json!(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub scenario: String,
    pub table: Table,
    pub report: Value,
    /// Names of violated invariants; empty on success.
    pub failures: Vec<String>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "scenario": self.scenario,
            "columns": self.table.columns,
            "rows": self.table.rows,
            "report": self.report,
            "failures": self.failures,
        })
    }
}

fn power_tail(alpha: f64, level_max: f64) -> Result<ConvexProfile, CliError> {
    if !(alpha < 1.0) {
        return Err(CliError::Usage(format!("--alpha {alpha} must lie in (0, 1)")));
    }
    let grid = power_tail_grid(alpha, 0.5, level_max);
    sample_analytic(AnalyticFamily::PowerTail(alpha), &grid, 0.0).map_err(compute)
}

fn chosen_profile(cfg: &ScenarioConfig) -> Result<ConvexProfile, CliError> {
    match cfg.profile {
        ProfileKind::Log => ConvexProfile::log(0.0, 0.0).map_err(compute),
        ProfileKind::MaxConst => ConvexProfile::max_const(0.0, 1.0).map_err(compute),
        ProfileKind::PowerTail => power_tail(cfg.alpha, 2.0 * cfg.j_max as f64),
        ProfileKind::Constant => ConvexProfile::constant(-0.5, 0.0).map_err(compute),
    }
}

fn doubling_up_to(max: u64) -> Vec<f64> {
    doubling_schedule(max.ilog2())
}

/// Evaluates the configured scenario without touching the file system.
pub fn execute(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let n = cfg.n;
    let js = doubling_up_to(cfg.j_max);
    let ks = doubling_up_to(cfg.k_max);
    let mut failures = Vec::new();
    let mut check = |ok: bool, name: &str| {
        if !ok {
            failures.push(name.to_string());
        }
    };
    let base = cfg.command.name();
    let scenario = match &cfg.variant {
        Some(v) => format!("{base}-{v}"),
        None => base.to_string(),
    };

    let (table, report) = match cfg.command {
        Command::Counterexample => {
            let compact = match cfg.variant.as_deref() {
                None | Some("ball") => RadialCompact::ball(0.0).unwrap(),
                Some("sphere") | Some("remark311") => RadialCompact::sphere(0.0).unwrap(),
                Some(v) => return Err(CliError::Usage(format!("--variant {v}: expected ball or sphere"))),
            };
            // log R = 2 keeps the kink 1/j inside the domain for every j ≥ 1
            let limit = ConvexProfile::max_const(0.0, 2.0).map_err(compute)?;
            let seq = ProfileSequence::new("max(log|z|, 1/j)", limit.clone(), true, |j| {
                ConvexProfile::max_const(1.0 / j, 2.0)
            });
            let demo = setwise_gap_demo(&seq, &compact, n, &js).map_err(compute)?;
            let mut t = Table::new(&["j", "mass_on_K", "np_target", "gap"]);
            for &(j, m) in &demo.series.entries {
                t.push(vec![idx(j), num(m), num(demo.target), num(demo.target - m)]);
            }
            check(demo.series.values().all(|v| v == 0.0), "mass_on_K is not identically 0");
            check(demo.target == std::f64::consts::TAU.powi(n as i32), "np_target differs from (2π)^n");
            check(demo.persistent, "gap does not persist");
            let mut report = json!({ "gap": demo });
            if n == 1 {
                // n = 1: Riesz mass of the closed unit ball from second differences
                let g = Grid1D::spanning(-1.0, 1.0, (2.0 / cfg.h).round().max(8.0) as usize).map_err(compute)?;
                let fd = fd_riesz_measure(&limit, &g).map_err(compute)?;
                let fd_mass = fd.distribution(0.0);
                let err = (fd_mass - demo.target).abs() / demo.target;
                check(err <= 10.0 * g.h(), "finite-difference NP target outside 10·h");
                report["oracle"] = json!({ "h": g.h(), "fd_mass": fd_mass, "rel_err": err });
            }
            (t, report)
        }
        Command::CapacityTable => {
            let mut t = Table::new(&[
                "j",
                "capacity",
                "j_capacity",
                "closed_form",
                "rel_err",
                "oracle_capacity",
                "oracle_rel_err",
            ]);
            let mut entries = Vec::new();
            let (mut max_err, mut max_oracle_err) = (0.0f64, 0.0f64);
            for j in 1..=cfg.j_max {
                let j = j as f64;
                let k = RadialCompact::ball(-j).unwrap();
                let c = capacity(&k, 0.0, n).map_err(compute)?;
                let exact = ball_capacity_closed_form(-j, 0.0, n);
                let err = ((c - exact) / exact).abs();
                let g = Grid1D::fitted(-j, -j, 0.0, cfg.h).map_err(compute)?;
                let env = relaxation_envelope(&k, 0.0, &g, 200_000, RELAX_TOL).map_err(compute)?;
                let oc = env.capacity(n);
                let oerr = ((oc - exact) / exact).abs();
                max_err = max_err.max(err);
                max_oracle_err = max_oracle_err.max(oerr);
                let jc = j.powi(n as i32) * c;
                entries.push((j, jc));
                t.push(vec![idx(j), num(c), num(jc), num(exact), num(err), num(oc), num(oerr)]);
            }
            let series = crate::series::DiagnosticSeries::new("j", entries);
            check(max_err <= 1e-12, "closed-form capacity relative error above 1e-12");
            check(max_oracle_err <= 10.0 * cfg.h, "oracle capacity relative error above 10·h");
            check(series.flag == LimitFlag::ConvergingToPositive, "j^n·C_n is not flagged converging-to-positive");
            let report = json!({
                "max_rel_err": max_err,
                "max_oracle_rel_err": max_oracle_err,
                "h": cfg.h,
                "j_capacity_flag": series.flag,
                "j_capacity_fit": series.metadata,
            });
            (t, report)
        }
        Command::Condition => {
            let p = chosen_profile(cfg)?;
            let sub = condition_sublevel(&p, n, &js);
            let lev = condition_level(&p, n, &js);
            let mut t = Table::new(&["j", "sublevel", "level", "sublevel_flag", "level_flag"]);
            for (a, b) in sub.entries.iter().zip(&lev.entries) {
                t.push(vec![idx(a.0), num(a.1), num(b.1), json!(sub.flag), json!(lev.flag)]);
            }
            (t, json!({ "profile": p, "sublevel": sub, "level": lev }))
        }
        Command::TruncateAnalyze => {
            let p = chosen_profile(cfg)?;
            let lr = p.log_r();
            let compacts = [
                RadialCompact::ball(lr - 1.0).unwrap(),
                RadialCompact::annulus(lr - 3.0, lr - 0.5).unwrap(),
                RadialCompact::sphere(lr - 2.0).unwrap(),
            ];
            let mut t = Table::new(&["compact", "j", "total_on_K", "interior_part", "level_part", "np_mass"]);
            let mut reports = Vec::new();
            for (ci, k) in compacts.iter().enumerate() {
                let r = truncation_analysis(&p, k, n, &js).map_err(compute)?;
                for row in &r.rows {
                    t.push(vec![
                        json!(ci),
                        idx(row.j),
                        num(row.total_on_k),
                        num(row.interior_part),
                        num(row.level_part),
                        num(r.np_mass),
                    ]);
                }
                check(r.decomposition_exact, "total = interior + level failed");
                check(r.no_mass_below_level, "truncated measure charges {u < -j}");
                check(r.interior_monotone, "interior part decreased in j");
                check(r.equivalence_holds != Some(false), "flags of (a) and (b) disagree");
                check(r.b_implies_a, "(b) holds without (a)");
                reports.push(json!({ "compact": k, "analysis": r.scenario("truncate-analyze") }));
            }
            (t, json!({ "profile": p, "compacts": reports }))
        }
        Command::WeakConverge => {
            let p = chosen_profile(cfg)?;
            let battery = battery_for(cfg.profile, p.log_r());
            let seq = ProfileSequence::truncations(&p);
            let r = weak_convergence_battery(&seq, &battery, n, &ks, &js).map_err(compute)?;
            let mut t = Table::new(&["test_function", "k", "pairing", "target", "gap"]);
            for w in &r.pairings {
                for &(k, v) in &w.series.entries {
                    t.push(vec![json!(w.test_function), idx(k), num(v), num(w.target), num((v - w.target).abs())]);
                }
            }
            check(!r.implication_violated, "hypothesis holds but some pairing missed its target");
            (t, serde_json::to_value(r.scenario()).map_err(compute)?)
        }
        Command::Maximality => {
            let p = chosen_profile(cfg)?;
            let battery = battery_for(cfg.profile, p.log_r());
            let r = maximality_check(&p, n, &js, &battery).map_err(compute)?;
            let mut t = Table::new(&["test_function", "j", "pairing", "flag"]);
            for (name, s) in &r.pairings {
                for &(j, v) in &s.entries {
                    t.push(vec![json!(name), idx(j), num(v), json!(s.flag)]);
                }
            }
            (t, serde_json::to_value(r.scenario(&battery.name)).map_err(compute)?)
        }
        Command::Membership => {
            let p = chosen_profile(cfg)?;
            let r = membership_in_d(&p, n, &default_exhaustion(p.log_r()), &js).map_err(compute)?;
            let mut t = Table::new(&["m", "np_mass", "verdict"]);
            for (m, &v) in r.np_masses.iter().enumerate() {
                t.push(vec![json!(m), num(v), json!(r.verdict)]);
            }
            (t, serde_json::to_value(r.scenario()).map_err(compute)?)
        }
        Command::OracleCheck => {
            let (t, report, ok) = oracle_check(cfg.h)?;
            check(ok, "oracle disagreement above 10·h");
            (t, report)
        }
    };
    Ok(Outcome {
        scenario,
        table,
        report,
        failures,
    })
}

fn battery_for(kind: ProfileKind, log_r: f64) -> Battery {
    match kind {
        // the origin is polar for log; test functions avoid it
        ProfileKind::Log => Battery::annular(log_r),
        _ => Battery::standard(log_r),
    }
}

fn oracle_check(h: f64) -> Result<(Table, Value, bool), CliError> {
    let mut t = Table::new(&["check", "max_abs_err", "bound", "pass"]);
    let bound = 10.0 * h;
    let mut all = true;
    let mut add = |t: &mut Table, name: &str, err: f64, bound: f64| {
        let ok = err <= bound;
        all &= ok;
        t.push(vec![json!(name), num(err), num(bound), json!(ok)]);
    };

    // truncated log: telescoping second differences give 2π exactly
    let p = ConvexProfile::log(0.0, 0.0).map_err(compute)?.truncate(3.0).map_err(compute)?;
    let g = Grid1D::spanning(-5.0, -1.0, (4.0 / h).round().max(8.0) as usize).map_err(compute)?;
    let fd = fd_riesz_measure(&p, &g).map_err(compute)?;
    add(&mut t, "fd_total_mass_truncated_log", (fd.total_mass() - std::f64::consts::TAU).abs(), 1e-9);

    // power tail: distribution function against 2π·χ′
    let hs = h / 4.0;
    let steps = (9.0 / hs).round() as usize;
    let fine: Vec<f64> = (0..=steps).map(|i| -10.0 + i as f64 * hs).collect();
    let pt = sample_analytic(AnalyticFamily::PowerTail(0.5), &fine, 0.0).map_err(compute)?;
    let g = Grid1D::spanning(-10.0, -1.0, (9.0 / h).round() as usize).map_err(compute)?;
    let fd = fd_riesz_measure(&pt, &g).map_err(compute)?;
    let exact = ma_measure(&pt, 1);
    let ts: Vec<f64> = (0..g.intervals()).map(|i| g.node(i)).collect();
    let err = fd
        .distribution_sorted(&ts)
        .iter()
        .zip(exact.distribution_sorted(&ts))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    add(&mut t, "fd_distribution_power_tail", err, bound);

    // envelopes and capacities on balls, annuli and a two-component compact
    let compacts = [
        RadialCompact::ball(-1.0).unwrap(),
        RadialCompact::ball(-16.0).unwrap(),
        RadialCompact::annulus(-3.0, -0.75).unwrap(),
        RadialCompact::new(vec![(-6.0, -5.0), (-2.5, -2.0)]).unwrap(),
        RadialCompact::annulus(-0.5, -0.01).unwrap(),
    ];
    let (mut env_err, mut cap_err) = (0.0f64, 0.0f64);
    for k in &compacts {
        let hull = extremal_profile(k, 0.0).map_err(compute)?;
        let lo = match k.inf().unwrap() {
            a if a.is_finite() => a,
            _ => k.sup().unwrap() - 1.0,
        };
        let g = Grid1D::fitted(lo, k.sup().unwrap(), 0.0, h).map_err(compute)?;
        let env = relaxation_envelope(k, 0.0, &g, 200_000, RELAX_TOL).map_err(compute)?;
        for i in 0..g.intervals() {
            env_err = env_err.max((env.values[i] - hull.eval(g.node(i)).map_err(compute)?).abs());
        }
        let c = capacity(k, 0.0, 1).map_err(compute)?;
        cap_err = cap_err.max((env.capacity(1) - c).abs() / c);
    }
    add(&mut t, "envelope_sup_err", env_err, bound);
    add(&mut t, "capacity_rel_err", cap_err, bound);
    Ok((t, json!({ "h": h, "bound": bound }), all))
}

fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

fn out_dir(cfg: &ScenarioConfig) -> PathBuf {
    cfg.output
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Writes the scenario artifacts and returns the data file path.
pub fn write_outcome(cfg: &ScenarioConfig, outcome: &Outcome) -> Result<PathBuf, CliError> {
    let dir = out_dir(cfg);
    fs::create_dir_all(&dir)?;
    let (ext, body) = match cfg.format {
        Format::Csv => ("csv", outcome.table.to_csv()),
        Format::Json => ("json", serde_json::to_string_pretty(&outcome.to_json()).map_err(compute)? + "\n"),
    };
    let data = dir.join(format!("{}.{ext}", outcome.scenario));
    write_atomic(&data, body.as_bytes())?;
    let meta = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "passed": outcome.passed(),
        "failures": outcome.failures,
    });
    let meta_path = dir.join(format!("{}.meta.json", outcome.scenario));
    write_atomic(&meta_path, (serde_json::to_string_pretty(&meta).map_err(compute)? + "\n").as_bytes())?;
    Ok(data)
}

/// Parses arguments, runs, writes artifacts; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match ScenarioConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let started = Instant::now();
    let outcome = match execute(&cfg) {
        Ok(o) => o,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            return 1;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let path = match write_outcome(&cfg, &outcome) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    if outcome.passed() {
        eprintln!("{}: ok ({:.2}s) -> {}", outcome.scenario, started.elapsed().as_secs_f64(), path.display());
        0
    } else {
        for f in &outcome.failures {
            eprintln!("{}: assertion failed: {f}", outcome.scenario);
        }
        eprintln!("{}", outcome.table.to_csv());
        2
    }
}
