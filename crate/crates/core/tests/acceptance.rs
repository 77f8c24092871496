//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always reach stdout.

mod common;

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use thinflow::experiments::*;
use thinflow::inequalities::{run_suite, SuiteConfig};
use thinflow::energetics::quadratic_equivalence_bounds;
use thinflow::physics::relent_integrand;
use thinflow::{build_channel, Law, Solver3D, State3, Visc};

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn within(elapsed: Duration, minutes: u64) -> bool {
    elapsed <= Duration::from_secs(60 * minutes)
}

fn equilibrium() -> Verdict {
    let t0 = Instant::now();
    let law = Law::default();
    let visc = Visc::default();
    let d = build_channel(0.5, 16, 16, 64).unwrap();
    let solver = Solver3D::new(law, visc, d);
    let mut s = State3::uniform(&d, 1.0, [0.0; 3]);
    let dt = solver.stable_dt(&s, 0.4).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let next = solver.step(&s, dt).unwrap();
        let dr = next.rho.sub(&s.rho).unwrap().max_abs();
        let du = next.u.sub(&s.u).unwrap().max_abs();
        worst = worst.max(dr).max(du);
        s = next;
    }

    let setup = RunSetup { nx: 8, ny: 8, nz: 32, t_end: 0.05, ..RunSetup::default() };
    let dom = setup.domain(0.5).unwrap();
    let smooth = setup.solver(dom);
    let base = setup.lifted_initial(&dom).unwrap();
    let p = make_perturbation(0.05, 3, &dom, &base.rho, DENSITY_SHARE).unwrap();
    let mut a = State3::new(base.rho.add(&p.sigma).unwrap(), base.u.add(&p.w).unwrap(), 0.0).unwrap();
    let m0 = a.mass(&dom);
    let (dt, steps) = smooth.run_dt(&a, setup.t_end, setup.cfl).unwrap();
    let mut drift: f64 = 0.0;
    for _ in 0..steps {
        a = smooth.step(&a, dt).unwrap();
        drift = drift.max(((a.mass(&dom) - m0) / m0).abs());
    }
    let el = t0.elapsed();
    verdict(
        worst <= 1e-13 && drift <= 1e-10 && within(el, 1),
        format!("max per-step change {worst:.2e} (<= 1e-13), relative mass drift {drift:.2e} (<= 1e-10) over {steps} steps, {el:.1?}"),
    )
}

fn solver_order() -> Verdict {
    let t0 = Instant::now();
    let e1 = common::study_1d(&[32, 64, 128, 256], 0.1);
    let e3 = common::study_3d(&[4, 8, 16, 32], 0.05);
    let (o1, o3) = (common::orders(&e1), common::orders(&e3));
    let min = o1.iter().chain(&o3).copied().fold(f64::INFINITY, f64::min);
    let el = t0.elapsed();
    let fmt = |o: &[f64]| o.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(", ");
    verdict(min >= 1.9 && within(el, 10), format!("1D orders [{}], 3D orders [{}] (>= 1.9), {el:.1?}", fmt(&o1), fmt(&o3)))
}

fn lifted() -> Verdict {
    let setup = RunSetup { t_end: 0.1, ..RunSetup::default() };
    let rows = lifted_exactness(&setup, 0.5, &[16, 32, 64], 512, 10).unwrap();
    let h2 = |nz: usize| 1.0 / (nz * nz) as f64;
    let c_rho: Vec<f64> = rows.iter().map(|r| r.rho_err / h2(r.nz)).collect();
    let c_u: Vec<f64> = rows.iter().map(|r| r.u_err / h2(r.nz)).collect();
    let spread = |c: &[f64]| c.iter().copied().fold(0.0, f64::max) / c.iter().copied().fold(f64::INFINITY, f64::min);
    let c_max = c_rho.iter().chain(&c_u).copied().fold(0.0, f64::max);
    let horiz_ok = rows.iter().all(|r| r.horizontal_linf <= c_max * h2(r.nz));
    let horiz = rows.iter().map(|r| r.horizontal_linf).fold(0.0, f64::max);
    verdict(
        horiz_ok && spread(&c_rho) <= 1.5 && spread(&c_u) <= 1.5,
        format!(
            "err/h^2 density {:?}, velocity {:?} (spread <= 1.5), horizontal speed {horiz:.1e}",
            c_rho.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>(),
            c_u.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>()
        ),
    )
}

/// Calibrated constant and the three-point ladders at `ε = ½, ¼`.
struct Ladders {
    c: f64,
    c_min: f64,
    runs: Vec<RobustnessVerdict>,
    elapsed: Duration,
}

fn ladders() -> Ladders {
    let t0 = Instant::now();
    let pilot = RobustnessConfig { epsilon: 1.0, delta: 1e-4, ..RobustnessConfig::default() };
    let cal = calibrate(&pilot).unwrap();
    let mut runs = Vec::new();
    for eps in [0.5, 0.25] {
        let omega = omega_threshold(eps, eps * eps, pilot.setup.t_end, cal.c).unwrap();
        for delta in [omega / 4.0, omega / 2.0, omega] {
            let cfg = RobustnessConfig { epsilon: eps, delta, c_gronwall: cal.c, ..pilot };
            runs.push(robustness_run(&cfg).unwrap());
        }
    }
    Ladders { c: cal.c, c_min: cal.c_min, runs, elapsed: t0.elapsed() }
}

fn relent_structure(l: &Ladders) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut negative = 0usize;
    let mut worst = f64::INFINITY;
    for k in 0..1_000_000 {
        let gamma = [1.1, 1.4, 5.0 / 3.0, 2.0, 3.0][k % 5];
        let law = Law::new([0.5, 1.0, 2.0][k % 3], gamma).unwrap();
        let rho = 10f64.powf(rng.gen_range(-3.0..3.0));
        let r = 10f64.powf(rng.gen_range(-3.0..3.0));
        let v = relent_integrand(rho, r, &law).unwrap();
        worst = worst.min(v);
        negative += (v < 0.0) as usize;
    }

    let law = Law::default();
    let (mut checked, mut outside) = (0usize, 0usize);
    for run in l.runs.iter().filter(|r| r.smallness_ok) {
        let (lo, hi) = quadratic_equivalence_bounds(&law, run.rho_min, run.rho_max, 200).unwrap();
        for q in run.estar_series.iter().filter_map(|s| s.relent_quotient) {
            checked += 1;
            outside += (q < lo * (1.0 - 1e-12) || q > hi * (1.0 + 1e-12)) as usize;
        }
    }
    verdict(
        negative == 0 && outside == 0 && checked > 0,
        format!("{negative} negative of 1e6 samples (min {worst:.2e}); {outside} of {checked} quotients outside scanned bounds"),
    )
}

fn energy_identity() -> Verdict {
    let run = |n: usize, samples: usize| {
        let setup = RunSetup { nx: n, ny: n, nz: 4 * n, t_end: 0.02, ..RunSetup::default() };
        energy_identity_run(&RobustnessConfig { setup, delta: 1e-2, ..RobustnessConfig::default() }, samples).unwrap()
    };
    let coarse = run(16, 16);
    let fine = run(32, 32);
    let ratio = coarse.residual.max_abs / fine.residual.max_abs;
    let rel = fine.residual.max_abs / fine.max_dissipation;
    verdict(
        ratio >= 1.8 && rel <= 0.01,
        format!(
            "max residual {:.3e} -> {:.3e} (factor {ratio:.2} >= 1.8); at 32x32x128 {:.2}% of max D (<= 1%)",
            coarse.residual.max_abs,
            fine.residual.max_abs,
            100.0 * rel
        ),
    )
}

fn inequality_suite() -> Verdict {
    let t0 = Instant::now();
    let report = run_suite(&SuiteConfig::default()).unwrap();
    let el = t0.elapsed();
    let fits: Vec<String> = report
        .summaries
        .iter()
        .filter_map(|s| Some(format!("{} {:.3}/{:.3}", s.inequality.name(), s.fitted_exponent?, s.predicted_exponent?)))
        .collect();
    let bad: Vec<&str> =
        report.summaries.iter().filter(|s| !(s.uniform_ok && s.fit_ok.unwrap_or(true))).map(|s| s.inequality.name()).collect();
    verdict(
        report.passed() && within(el, 5),
        format!("{} inequalities, failing {:?}; fitted/predicted exponents: {}; {el:.1?}", report.summaries.len(), bad, fits.join(", ")),
    )
}

fn threshold_formula() -> Verdict {
    let text = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/omega_reference.csv")).unwrap();
    let mut worst: f64 = 0.0;
    let mut count = 0usize;
    for line in text.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        let got = omega_threshold(v[0], v[1], v[2], v[3]).unwrap();
        worst = worst.max(((got - v[4]) / v[4]).abs());
        count += 1;
    }

    // channel volume ε²: the ceiling is ε⁵ and the exponent gains −Cε^{−3/2}T
    let (c, t) = (0.5, 0.01);
    let mut spec_err: f64 = 0.0;
    let mut shares = Vec::new();
    for eps in [0.5, 0.3, 0.2, 0.1, 0.05] {
        let ln_w = omega_threshold(eps, eps * eps, t, c).unwrap().ln();
        let ln_z = 5.0 * eps.ln() - c * eps.powf(-3.2) * t;
        let extra = -c * eps.powf(-1.5) * t;
        spec_err = spec_err.max(((ln_w - ln_z) - extra).abs() / ln_w.abs());
        // lower-order exponent against the leading one
        shares.push((ln_w - ln_z) / (ln_z - 5.0 * eps.ln()));
    }
    let shrinking = shares.windows(2).all(|w| w[1] < w[0]);
    verdict(
        count == 125 && worst <= 1e-12 && spec_err <= 1e-12 && shrinking,
        format!(
            "max relative error {worst:.2e} on {count} points (<= 1e-12); channel form log error {spec_err:.1e}, lower-order share {:.1e} -> {:.1e}",
            shares[0],
            shares[shares.len() - 1]
        ),
    )
}

fn robustness(l: &Ladders) -> Verdict {
    let t0 = Instant::now();
    let base = RobustnessConfig { epsilon: 0.5, c_gronwall: l.c, ..RobustnessConfig::default() };
    let omega = omega_threshold(0.5, 0.25, base.setup.t_end, l.c).unwrap();
    let star = critical_amplitude_run(&base, omega, 10.0, 12).unwrap();
    let el = l.elapsed + t0.elapsed();
    let failing: Vec<String> = l.runs.iter().filter(|r| !r.passed()).map(|r| format!("eps {} delta {:.3e}", r.epsilon, r.delta)).collect();
    verdict(
        failing.is_empty() && star >= omega && within(el, 30),
        format!(
            "C = {:.3} (c_min {:.3}); {} ladder runs, failing {failing:?}; delta* = {star:.4} >= omega = {omega:.3e}; {el:.1?}",
            l.c,
            l.c_min,
            l.runs.len()
        ),
    )
}

fn thin_limit() -> Verdict {
    let t0 = Instant::now();
    let rows = thinlimit_run(&ThinLimitConfig::default()).unwrap();
    let el = t0.elapsed();
    let dec = |f: fn(&ThinLimitRow) -> f64| rows.windows(2).all(|w| f(&w[1]) < f(&w[0]));
    let ok = dec(|r| r.density_error) && dec(|r| r.momentum_error);
    let show = rows.iter().map(|r| format!("eps {}: {:.2e}/{:.2e}", r.epsilon, r.density_error, r.momentum_error)).collect::<Vec<_>>();
    verdict(ok && within(el, 20), format!("density/momentum errors {} (strictly decreasing), {el:.1?}", show.join(", ")))
}

const DETERMINISM_CONFIG: &str = r#"
[geometry]
nx = 4
ny = 4
nz = 16
[time]
t_end = 0.05
[perturbation]
delta = 0.001
[constants]
c_gronwall = 1.0
[inequalities]
samples = 5
lame_samples = 2
"#;

fn determinism() -> Verdict {
    let work = tempfile::tempdir().unwrap();
    let cfg = work.path().join("run.toml");
    fs::write(&cfg, DETERMINISM_CONFIG).unwrap();
    let subcommands = ["simulate3d", "simulate1d", "energetics", "robustness", "inequalities"];
    let mut compared = 0usize;
    let mut differing = Vec::new();
    for sub in subcommands {
        let dirs = [work.path().join(format!("{sub}-a")), work.path().join(format!("{sub}-b"))];
        for d in &dirs {
            let status = Command::new(env!("CARGO_BIN_EXE_thinflow"))
                .args(["--quiet", "--config"])
                .arg(&cfg)
                .arg("--out")
                .arg(d)
                .arg(sub)
                .status()
                .unwrap();
            assert!(status.code().is_some_and(|c| c <= 1), "{sub} exited with {status}");
        }
        let mut names: Vec<_> = fs::read_dir(&dirs[0])
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .filter(|n| n.to_string_lossy().ends_with(".csv"))
            .collect();
        names.sort();
        for n in names {
            compared += 1;
            let a = fs::read(dirs[0].join(&n)).unwrap();
            match fs::read(dirs[1].join(&n)) {
                Ok(b) if a == b => {}
                _ => differing.push(n.to_string_lossy().into_owned()),
            }
        }
    }
    verdict(
        differing.is_empty() && compared >= subcommands.len(),
        format!("{compared} CSVs from {} subcommands compared, differing {differing:?}", subcommands.len()),
    )
}

fn main() {
    let t0 = Instant::now();
    // one criterion at a time so each runtime budget measures that criterion alone
    let guarded = |f: &dyn Fn() -> Verdict| {
        std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)).unwrap_or_else(|_| verdict(false, "panicked".into()))
    };
    let mut results: Vec<(usize, &str, Verdict)> = vec![
        (1, "equilibrium and conservation", guarded(&equilibrium)),
        (2, "solver order", guarded(&solver_order)),
        (3, "lifted-solution exactness", guarded(&lifted)),
    ];
    match std::panic::catch_unwind(ladders) {
        Ok(l) => {
            results.push((4, "relative-entropy structure", guarded(&|| relent_structure(&l))));
            results.push((8, "Gronwall robustness", guarded(&|| robustness(&l))));
        }
        Err(_) => {
            results.push((4, "relative-entropy structure", verdict(false, "panicked".into())));
            results.push((8, "Gronwall robustness", verdict(false, "panicked".into())));
        }
    }
    results.push((5, "energy identity", guarded(&energy_identity)));
    results.push((6, "inequality suite", guarded(&inequality_suite)));
    results.push((7, "threshold formula", guarded(&threshold_formula)));
    results.push((9, "thin limit", guarded(&thin_limit)));
    results.push((10, "determinism", guarded(&determinism)));
    results.sort_by_key(|r| r.0);
    let mut failed = 0;
    for (k, name, v) in &results {
        println!("{} criterion {k:>2} ({name}): {}", if v.passed { "PASS" } else { "FAIL" }, v.detail);
        failed += (!v.passed) as usize;
    }
    println!("acceptance: {} passed, {failed} failed in {:.1?}", results.len() - failed, t0.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
}
