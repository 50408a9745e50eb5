//! Acceptance criteria, run sequentially so that timings are meaningful.
//! Prints one PASS/FAIL line per criterion and exits nonzero on any FAIL.

mod common;

use std::f64::consts::TAU;
use std::time::Instant;

use clap::Parser;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use radial_ma::capacity::default_j_schedule;
use radial_ma::cli::{execute, ScenarioConfig};
use radial_ma::convergence::{truncation_analysis, weak_convergence_battery, Battery, ProfileSequence};
use radial_ma::measure::doubling_schedule;
use radial_ma::oracle::{fd_riesz_measure, relaxation_envelope, Grid1D};
use radial_ma::profile::{power_tail_grid, sample_analytic, AnalyticFamily};
use radial_ma::{capacity::condition_sublevel, extremal_profile, ma_measure};
use radial_ma::{ConvexProfile, LimitFlag, RadialCompact};

use common::{random_compact, random_grid_profile, random_profile, Competitor};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn run_cli(args: &[&str]) -> Result<radial_ma::cli::Outcome, String> {
    let cfg = ScenarioConfig::try_parse_from(std::iter::once("radial-ma").chain(args.iter().copied()))
        .map_err(|e| e.to_string())?;
    execute(&cfg).map_err(|e| e.to_string())
}

fn c1_capacity_table() -> Check {
    let started = Instant::now();
    let o = run_cli(&["capacity-table", "--j-max", "1024", "--h", "1e-3"])?;
    let secs = started.elapsed().as_secs_f64();
    ensure(o.passed(), format!("{:?}", o.failures))?;
    ensure(secs < 10.0, format!("took {secs:.2}s, limit 10s"))?;
    Ok(format!(
        "j=1..1024 max rel err {:.1e}, oracle rel err {:.1e} (bound 1e-2), flag {}",
        o.report["max_rel_err"].as_f64().unwrap_or(f64::NAN),
        o.report["max_oracle_rel_err"].as_f64().unwrap_or(f64::NAN),
        o.report["j_capacity_flag"]
    ))
}

fn c2_counterexample() -> Check {
    let mut notes = Vec::new();
    for n in 1..=3u32 {
        for variant in ["ball", "sphere"] {
            let ns = n.to_string();
            let o = run_cli(&["counterexample", "--n", &ns, "--variant", variant])?;
            ensure(o.passed(), format!("n={n} {variant}: {:?}", o.failures))?;
            let target = o.report["gap"]["target"].as_f64().unwrap();
            ensure(target == TAU.powi(n as i32), format!("n={n}: target {target}"))?;
            if n == 1 && variant == "ball" {
                notes.push(format!("fd rel err {:.1e}", o.report["oracle"]["rel_err"].as_f64().unwrap()));
            }
        }
    }
    Ok(format!("n=1..3 masses 0, target (2π)^n, gap persists, {}", notes.join(", ")))
}

/// Profiles of the battery with their domain.
fn battery_profiles() -> Vec<(String, ConvexProfile)> {
    let mut out = vec![
        ("log".to_string(), ConvexProfile::log(0.0, 0.0).unwrap()),
        ("max-const".to_string(), ConvexProfile::max_const(0.0, 1.0).unwrap()),
    ];
    for alpha in [0.25, 0.5, 0.75] {
        let grid = power_tail_grid(alpha, 0.5, 2048.0);
        let p = sample_analytic(AnalyticFamily::PowerTail(alpha), &grid, 0.0).unwrap();
        out.push((format!("power-tail-{alpha}"), p));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    for i in 0..2 {
        out.push((format!("random-{i}"), random_profile(&mut rng, 0.0)));
    }
    out
}

fn c3_truncation_equivalence() -> Check {
    let js = default_j_schedule();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0033);
    let mut cases = 0;
    for (name, p) in battery_profiles() {
        let lr = p.log_r();
        let compacts = [
            RadialCompact::ball(lr - 1.0).unwrap(),
            RadialCompact::annulus(lr - 3.0, lr - 0.5).unwrap(),
            RadialCompact::sphere(lr - 2.0).unwrap(),
            random_compact(&mut rng, lr),
        ];
        for n in 1..=3 {
            for k in &compacts {
                let r = truncation_analysis(&p, k, n, &js).map_err(|e| format!("{name}: {e}"))?;
                ensure(r.decomposition_exact, format!("{name} n={n}: decomposition not exact"))?;
                ensure(r.no_mass_below_level, format!("{name} n={n}: mass below level"))?;
                ensure(r.equivalence_holds != Some(false), format!("{name} n={n} {k:?}: flags disagree"))?;
                ensure(r.b_implies_a, format!("{name} n={n}: (b) without (a)"))?;
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} profile/compact/n cases, flags agree, decomposition exact"))
}

fn c4_weak_convergence() -> Check {
    let ks = doubling_schedule(20);
    let js = default_j_schedule();
    let mut checked = Vec::new();
    for (name, p) in battery_profiles() {
        for n in 1..=2 {
            let hyp = condition_sublevel(&p, n, &js);
            let seq = ProfileSequence::truncations(&p);
            if name == "log" {
                let r = weak_convergence_battery(&seq, &Battery::annular(0.0), n, &ks, &js).map_err(|e| e.to_string())?;
                ensure(r.hypothesis.flag == LimitFlag::ConvergingToPositive, "log: hypothesis not positive")?;
                ensure(r.all_converged(), "log: pairings did not converge")?;
                ensure(r.pairings.len() == 16, "log: battery size")?;
                continue;
            }
            if hyp.flag != LimitFlag::ConvergingToZero {
                continue;
            }
            let battery = Battery::standard(p.log_r());
            let r = weak_convergence_battery(&seq, &battery, n, &ks, &js).map_err(|e| e.to_string())?;
            ensure(r.pairings.len() == 16, "battery size")?;
            ensure(!r.implication_violated && r.all_converged(), format!("{name} n={n}: not converged"))?;
            checked.push(format!("{name}/n{n}"));
        }
    }
    Ok(format!("hypothesis-zero cases converge within 1e-9: {}; log positive and converging", checked.join(" ")))
}

fn c5_liminf() -> Check {
    let ks = doubling_schedule(20);
    let js = default_j_schedule();
    let battery = Battery::standard(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    let mut pairings = 0;
    for i in 0..100 {
        let n = rng.gen_range(1..=3);
        let p = random_profile(&mut rng, 0.0);
        let q = p.clone();
        let seq = match i % 4 {
            0 => ProfileSequence::truncations(&p),
            1 => ProfileSequence::new("u + 1/k", p.clone(), true, move |k| Ok(q.shift(1.0 / k))),
            2 => ProfileSequence::new("max(u + 1/k, -k)", p.clone(), true, move |k| q.shift(1.0 / k).truncate(k)),
            _ => {
                let c0 = (p.boundary_value() - 1.5).min(rng.gen_range(-6.0..-1.0));
                let delta = rng.gen_range(0.1..1.0);
                let limit = p.clamp_below(c0).unwrap();
                ProfileSequence::new("max(u, c + δ2^-k)", limit, true, move |k| {
                    q.clamp_below(c0 + delta * 2f64.powf(-k))
                })
            }
        };
        let r = weak_convergence_battery(&seq, &battery, n, &ks, &js).map_err(|e| format!("sequence {i}: {e}"))?;
        for w in &r.pairings {
            ensure(w.liminf_ok, format!("sequence {i} ({}) {}: tail below target {}", seq.name, w.test_function, w.target))?;
            pairings += 1;
        }
    }
    Ok(format!("100 decreasing sequences, {pairings} pairings at or above target - 1e-9(1+target)"))
}

fn c6_fd_oracle() -> Check {
    let (t0, h, m) = (-8.0, 1.0 / 64.0, 512);
    let grid = Grid1D::new(t0, h, m).map_err(|e| e.to_string())?;
    let nodes: Vec<f64> = (0..m).map(|i| grid.node(i)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let p = random_grid_profile(&mut rng, t0, h, m, 0.5);
        let fd = fd_riesz_measure(&p, &grid).map_err(|e| e.to_string())?;
        let exact = ma_measure(&p, 1);
        let err = fd
            .distribution_sorted(&nodes)
            .iter()
            .zip(exact.distribution_sorted(&nodes))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(err);
    }
    ensure(worst <= 1e-9, format!("grid-aligned PL distribution error {worst:.2e}"))?;

    // power tail: first-order refinement against the exact measure of a fine sample
    let hs = 2.5e-3f64 / 4.0;
    let steps = (9.0 / hs).round() as usize;
    let fine: Vec<f64> = (0..=steps).map(|i| -10.0 + i as f64 * hs).collect();
    let pt = sample_analytic(AnalyticFamily::PowerTail(0.5), &fine, 0.0).map_err(|e| e.to_string())?;
    let exact = ma_measure(&pt, 1);
    let mut errs = Vec::new();
    for h in [1e-2f64, 5e-3, 2.5e-3] {
        let g = Grid1D::spanning(-10.0, -1.0, (9.0 / h).round() as usize).map_err(|e| e.to_string())?;
        let ts: Vec<f64> = (0..g.intervals()).map(|i| g.node(i)).collect();
        let fd = fd_riesz_measure(&pt, &g).map_err(|e| e.to_string())?;
        let err = fd
            .distribution_sorted(&ts)
            .iter()
            .zip(exact.distribution_sorted(&ts))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        ensure(err <= 10.0 * h, format!("power tail h={h}: error {err:.2e} above 10h"))?;
        errs.push(err);
    }
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[1] / w[0]).collect();
    ensure(ratios.iter().all(|&r| r <= 0.55), format!("decay ratios {ratios:?}"))?;
    Ok(format!(
        "PL max err {worst:.1e}; power tail errs {:.2e} {:.2e} {:.2e}, ratios {:.2} {:.2}",
        errs[0], errs[1], errs[2], ratios[0], ratios[1]
    ))
}

fn c7_extremality() -> Check {
    let h = 1e-3;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0007);
    let (mut fitted_err, mut plain_err) = (0.0f64, 0.0f64);
    let mut unfitted = 0;
    let probes: Vec<f64> = (0..=400).map(|i| -10.0 + 10.0 * i as f64 / 401.0).collect();
    for c in 0..50 {
        let k = random_compact(&mut rng, 0.0);
        let hull = extremal_profile(&k, 0.0).map_err(|e| e.to_string())?;
        let sup = k.sup().unwrap();
        for _ in 0..200 {
            let comp = Competitor::random(&mut rng, sup, 0.0);
            for &t in &probes {
                let (u, v) = (comp.eval(t), hull.eval(t).unwrap());
                ensure(u <= v + 1e-12, format!("compact {c}: competitor {u} above hull {v} at t={t}"))?;
            }
        }
        let lo = match k.inf().unwrap() {
            a if a.is_finite() => a,
            _ => sup - 1.0,
        };
        let g = Grid1D::fitted(lo, sup, 0.0, h).map_err(|e| e.to_string())?;
        let env = relaxation_envelope(&k, 0.0, &g, 200_000, 1e-11).map_err(|e| format!("compact {c}: {e}"))?;
        for i in 0..g.intervals() {
            fitted_err = fitted_err.max((env.values[i] - hull.eval(g.node(i)).unwrap()).abs());
        }
        // a grid that ignores the compact converges at first order once every
        // piece holds a node; thinner pieces can fall between nodes
        let hp = 1e-2;
        if k.intervals().iter().any(|&(a, b)| b - a <= hp) {
            continue;
        }
        unfitted += 1;
        let start = lo - 0.5 * hp;
        let gp = Grid1D::spanning(start, 0.0, (-start / hp).ceil() as usize).map_err(|e| e.to_string())?;
        let envp = relaxation_envelope(&k, 0.0, &gp, 2_000_000, 1e-11).map_err(|e| format!("compact {c}: {e}"))?;
        // the error constant grows with the boundary slope
        let scale = hull.final_slope().max(1.0);
        for i in 0..gp.intervals() {
            plain_err = plain_err.max((envp.values[i] - hull.eval(gp.node(i)).unwrap()).abs() / scale);
        }
        ensure(plain_err <= 10.0 * hp, format!("compact {c}: unfitted error {plain_err:.2e}"))?;
    }
    ensure(fitted_err <= 10.0 * h, format!("fitted envelope error {fitted_err:.2e}"))?;
    Ok(format!(
        "50 compacts x 200 competitors dominated; envelope err {fitted_err:.1e} at h=1e-3 (fitted), {plain_err:.1e} slope-relative at h=1e-2 unfitted ({unfitted} compacts with no piece thinner than h)"
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 7] = [
        ("1 ball capacities and relaxation oracle", c1_capacity_table),
        ("2 set-wise counterexample", c2_counterexample),
        ("3 truncation equivalence", c3_truncation_equivalence),
        ("4 weak convergence under the hypothesis", c4_weak_convergence),
        ("5 liminf along decreasing sequences", c5_liminf),
        ("6 finite-difference Riesz oracle", c6_fd_oracle),
        ("7 extremality against competitors", c7_extremality),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let started = Instant::now();
        let result = f();
        let secs = started.elapsed().as_secs_f64();
        match result {
            Ok(msg) => println!("PASS criterion {name} [{secs:.2}s]: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {name} [{secs:.2}s]: {msg}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
