//! Command line orchestration. Exit codes: 0 pass, 1 verdict failure,
//! 2 configuration error, 3 numerical failure.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::config::{parse_config, ExperimentConfig};
use crate::error::{Error, Result};
use crate::experiments::{
    calibrate, critical_amplitude_run, energy_identity_run, make_perturbation, omega_threshold, robustness_run, thinlimit_run,
    RobustnessConfig,
};
use crate::inequalities::run_suite;
use crate::output::{config_hash, fmt_f64, write_atomic, ArtifactSet, Csv};
use crate::solver1d::{solve1d, Profile1D, Solver1D};
use crate::solver3d::{dump, summarize, FluidState3D};

pub const ENV_OUT: &str = "THINFLOW_OUT";
pub const DEFAULT_OUT: &str = "thinflow-out";

#[derive(Debug, Parser)]
#[command(name = "thinflow", version, about = "Thin-channel compressible flow experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML configuration; defaults apply to every missing key.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (otherwise the config, then $THINFLOW_OUT, then ./thinflow-out).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides `perturbation.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Evolve perturbed lifted data in 3D; summary CSV and binary trajectory.
    Simulate3d,
    /// Evolve the 1D limit system; profile CSV.
    Simulate1d,
    /// Energy balance of a reference/perturbed pair.
    Energetics,
    /// Sampled constants of the scaled inequalities.
    Inequalities,
    /// Gronwall envelope and ceiling check for one delta.
    Robustness,
    /// Bisection for the largest passing delta.
    Critical,
    /// Cross-sectional errors against the 1D limit for a list of epsilons.
    Thinlimit,
    /// Evaluate the stability threshold.
    Omega,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate3d => "simulate3d",
            Command::Simulate1d => "simulate1d",
            Command::Energetics => "energetics",
            Command::Inequalities => "inequalities",
            Command::Robustness => "robustness",
            Command::Critical => "critical",
            Command::Thinlimit => "thinlimit",
            Command::Omega => "omega",
        }
    }
}

struct Outcome {
    passed: bool,
    summary: String,
    details: Value,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 2,
        _ => 3,
    }
}

/// Parses the process arguments and runs; returns the exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    run(&cli)
}

pub fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::config(format!("cannot read {}: {e}", p.display())))?;
            parse_config(&text).map_err(|e| match e {
                Error::Config(m) => Error::config(format!("{}: {m}", p.display())),
                other => other,
            })
        }
        None => Ok(ExperimentConfig::default()),
    }
}

fn output_dir(cli: &Cli, cfg: &ExperimentConfig) -> PathBuf {
    if let Some(o) = &cli.out {
        return o.clone();
    }
    if let Some(d) = &cfg.output.dir {
        return PathBuf::from(d);
    }
    match std::env::var_os(ENV_OUT) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(DEFAULT_OUT),
    }
}

pub fn run(cli: &Cli) -> i32 {
    match run_inner(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("thinflow {}: {e}", cli.command.name());
            exit_code(&e)
        }
    }
}

fn run_inner(cli: &Cli) -> Result<i32> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::config("--threads must be at least 1"));
        }
        // a second initialization in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let mut cfg = load_config(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.perturbation.seed = seed;
    }
    cfg.validate()?;
    let name = cli.command.name();
    let canonical = cfg.canonical_json();
    let hash = config_hash(name, &canonical);
    let dir = output_dir(cli, &cfg);
    let mut set = ArtifactSet::new(&dir, name, &hash);
    let outcome = match cli.command {
        Command::Simulate3d => simulate3d(&cfg, &mut set)?,
        Command::Simulate1d => simulate1d(&cfg, &mut set)?,
        Command::Energetics => energetics(&cfg, &mut set)?,
        Command::Inequalities => inequalities(&cfg, &mut set)?,
        Command::Robustness => robustness(&cfg, &mut set)?,
        Command::Critical => critical(&cfg, &mut set)?,
        Command::Thinlimit => thinlimit(&cfg, &mut set)?,
        Command::Omega => omega(&cfg, &mut set)?,
    };
    let code = if outcome.passed { 0 } else { 1 };
    let manifest = json!({
        "subcommand": name,
        "config_hash": hash,
        "config": serde_json::from_str::<Value>(&canonical).expect("canonical json"),
        "files": set.files,
        "passed": outcome.passed,
        "exit_code": code,
        "result": outcome.details,
    });
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    write_atomic(&set.path(".manifest.json"), text.as_bytes())?;
    if !cli.quiet {
        println!("{}", outcome.summary);
    }
    Ok(code)
}

fn perturbed_initial(cfg: &RobustnessConfig) -> Result<(crate::geometry::ThinDomain<f64>, FluidState3D<f64>)> {
    let domain = cfg.setup.domain(cfg.epsilon)?;
    let base = cfg.setup.lifted_initial(&domain)?;
    let p = make_perturbation(cfg.delta, cfg.seed, &domain, &base.rho, cfg.density_share)?;
    Ok((domain, FluidState3D::new(base.rho.add(&p.sigma)?, base.u.add(&p.w)?, 0.0)?))
}

fn simulate3d(cfg: &ExperimentConfig, set: &mut ArtifactSet) -> Result<Outcome> {
    let rc = cfg.robustness();
    let (domain, init) = perturbed_initial(&rc)?;
    let solver = rc.setup.solver(domain);
    let (dt, steps) = solver.run_dt(&init, rc.setup.t_end, rc.setup.cfl)?;
    let mut csv = Csv::new(&["t", "mass", "energy", "min_rho", "max_speed"]);
    let mut traj = Vec::new();
    dump::write_header(&mut traj, domain.dims())?;
    let last = solver.evolve(&init, dt, steps, rc.setup.sample_every, None, |_, s| {
        let m = summarize(s, &solver.law, &domain);
        csv.push_f64(&[m.t, m.mass, m.energy, m.min_rho, m.max_speed]);
        dump::write_record(&mut traj, s)?;
        Ok(())
    })?;
    set.write_csv(".csv", &csv)?;
    set.write_bytes(".traj", &traj)?;
    let drift = (last.mass(&domain) - init.mass(&domain)).abs() / init.mass(&domain);
    Ok(Outcome {
        passed: true,
        summary: format!("simulate3d: {steps} steps of {dt:.3e}, relative mass drift {drift:.3e}"),
        details: json!({ "steps": steps, "dt": dt, "samples": csv.rows.len(), "mass_drift": drift }),
    })
}

fn simulate1d(cfg: &ExperimentConfig, set: &mut ArtifactSet) -> Result<Outcome> {
    let s = cfg.run_setup();
    let nz = s.nz;
    let solver = Solver1D::new(s.law, s.visc).with_scheme(s.scheme);
    let (_, steps) = crate::solver3d::fixed_steps(solver.stable_dt(&Profile1D::sample(&s.data, nz), s.cfl)?, s.t_end)?;
    let samples = steps.div_ceil(s.sample_every).max(1);
    let traj = solve1d(&s.data, s.t_end, &s.law, &s.visc, nz, s.cfl, samples)?;
    let mut csv = Csv::new(&["t", "z", "rho", "u"]);
    let h = 1.0 / nz as f64;
    for p in &traj.profiles {
        for k in 0..nz {
            csv.push_f64(&[p.t, (k as f64 + 0.5) * h, p.rho[k], p.u[k]]);
        }
    }
    set.write_csv(".csv", &csv)?;
    let (m0, m1) = (traj.profiles[0].mass(), traj.profiles.last().unwrap().mass());
    Ok(Outcome {
        passed: true,
        summary: format!("simulate1d: {} profiles on {nz} cells, mass {m0:.12} -> {m1:.12}", traj.profiles.len()),
        details: json!({ "profiles": traj.profiles.len(), "dt": traj.dt, "mass_start": m0, "mass_end": m1 }),
    })
}

fn energetics(cfg: &ExperimentConfig, set: &mut ArtifactSet) -> Result<Outcome> {
    let run = energy_identity_run(&cfg.robustness(), cfg.tolerances.identity_samples)?;
    let mut csv = Csv::new(&[
        "t", "E", "D", "Estar", "I1", "I2", "I3", "I4", "I5", "I6", "I7", "sigma_linf", "w_linf", "residual",
    ]);
    for (n, r) in run.reports.iter().enumerate() {
        let mut cells: Vec<String> = [r.t, r.e, r.d_diss, r.estar].iter().chain(&r.i).chain(&[r.sigma_linf, r.w_linf]).map(|&v| fmt_f64(v)).collect();
        cells.push(if n == 0 { String::new() } else { fmt_f64(run.residual.residuals[n - 1]) });
        csv.push(cells);
    }
    set.write_csv(".csv", &csv)?;
    let limit = cfg.tolerances.identity_relative * run.max_dissipation;
    let passed = run.residual.max_abs <= limit;
    Ok(Outcome {
        passed,
        summary: format!(
            "energetics: max residual {:.3e}, max dissipation {:.3e} ({})",
            run.residual.max_abs,
            run.max_dissipation,
            if passed { "pass" } else { "FAIL" }
        ),
        details: json!({ "max_residual": run.residual.max_abs, "max_dissipation": run.max_dissipation, "limit": limit, "dt": run.dt }),
    })
}

fn inequalities(cfg: &ExperimentConfig, set: &mut ArtifactSet) -> Result<Outcome> {
    let report = run_suite(&cfg.suite())?;
    let mut samples = Csv::new(&["inequality", "epsilon", "field_id", "lhs", "rhs", "ratio", "degenerate"]);
    for (i, s) in &report.samples {
        samples.push(vec![
            i.name().to_string(),
            fmt_f64(s.epsilon),
            s.field_id.to_string(),
            fmt_f64(s.lhs),
            fmt_f64(s.rhs),
            fmt_f64(s.ratio),
            s.degenerate.to_string(),
        ]);
    }
    let eps = cfg.inequalities.epsilons;
    let mut header = vec!["inequality".to_string(), "calibration_max".into(), "bound".into()];
    header.extend(eps.iter().map(|e| format!("max_ratio_eps_{e}")));
    header.extend(["uniform_ok", "fitted_exponent", "predicted_exponent", "fit_ok", "channel_exponent"].map(String::from));
    let mut summary = Csv { header, rows: Vec::new() };
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    for s in &report.summaries {
        let mut row = vec![s.inequality.name().to_string(), fmt_f64(s.calibration_max), fmt_f64(s.bound)];
        row.extend(s.max_ratio.iter().map(|&v| fmt_f64(v)));
        row.push(s.uniform_ok.to_string());
        row.push(opt(s.fitted_exponent));
        row.push(opt(s.predicted_exponent));
        row.push(s.fit_ok.map(|b| b.to_string()).unwrap_or_default());
        row.push(opt(s.channel_exponent));
        summary.push(row);
    }
    set.write_csv("-samples.csv", &samples)?;
    set.write_csv("-summary.csv", &summary)?;
    let passed = report.passed();
    Ok(Outcome {
        passed,
        summary: format!("inequalities: {} samples, {}", report.samples.len(), if passed { "all bounds hold" } else { "FAIL" }),
        details: serde_json::to_value(&report.summaries).expect("summaries serialize"),
    })
}

/// The configured Gronwall constant, or one calibrated on the pilot run.
fn gronwall_constant(cfg: &ExperimentConfig) -> Result<(f64, Value)> {
    if let Some(c) = cfg.constants.c_gronwall {
        return Ok((c, json!({ "source": "config", "c": c })));
    }
    let pilot = RobustnessConfig { epsilon: 1.0, delta: cfg.constants.pilot_delta, ..cfg.robustness() };
    let cal = calibrate(&pilot)?;
    Ok((cal.c, json!({ "source": "pilot", "c": cal.c, "c_min": cal.c_min, "pilot_delta": pilot.delta })))
}

fn robustness(cfg: &ExperimentConfig, set: &mut ArtifactSet) -> Result<Outcome> {
    let (c, cal) = gronwall_constant(cfg)?;
    let v = robustness_run(&RobustnessConfig { c_gronwall: c, ..cfg.robustness() })?;
    let mut csv = Csv::new(&["t", "E", "D", "Estar", "sigma_linf", "w_linf", "relent_quotient", "envelope", "ceiling"]);
    for s in &v.estar_series {
        let mut cells: Vec<String> = [s.t, s.e, s.d, s.estar, s.sigma_linf, s.w_linf].iter().map(|&x| fmt_f64(x)).collect();
        cells.push(s.relent_quotient.map(fmt_f64).unwrap_or_default());
        cells.push(fmt_f64(s.envelope));
        cells.push(fmt_f64(s.ceiling));
        csv.push(cells);
    }
    set.write_csv(".csv", &csv)?;
    let passed = v.passed();
    let summary = format!(
        "robustness: eps {} delta {:.3e} omega {:.3e} C {c:.3e}: {}",
        v.epsilon,
        v.delta,
        v.omega,
        match v.first_violation_t {
            None => "pass".to_string(),
            Some(t) => format!("FAIL, first violation at t = {t:.4e}"),
        }
    );
    let mut details = serde_json::to_value(&v).expect("verdict serializes");
    if let Value::Object(m) = &mut details {
        m.remove("estar_series");
        m.insert("calibration".into(), cal);
    }
    Ok(Outcome { passed, summary, details })
}

/// Upper bracket of `critical` when none is configured.
pub const DEFAULT_DELTA_HI: f64 = 10.0;

fn critical(cfg: &ExperimentConfig, set: &mut ArtifactSet) -> Result<Outcome> {
    let (c, cal) = gronwall_constant(cfg)?;
    let rc = RobustnessConfig { c_gronwall: c, ..cfg.robustness() };
    let v = rc.setup.domain(rc.epsilon)?.v;
    let omega = omega_threshold(rc.epsilon, v, rc.setup.t_end, c)?;
    let [lo, hi] = cfg.perturbation.bracket.unwrap_or([omega, DEFAULT_DELTA_HI]);
    let iters = cfg.perturbation.bisection_iters;
    let star = critical_amplitude_run(&rc, lo, hi, iters)?;
    let mut csv = Csv::new(&["epsilon", "omega", "delta_lo", "delta_hi", "delta_star"]);
    csv.push_f64(&[rc.epsilon, omega, lo, hi, star]);
    set.write_csv(".csv", &csv)?;
    let passed = star >= omega;
    Ok(Outcome {
        passed,
        summary: format!("critical: delta* = {star:.6e}, omega = {omega:.6e} ({})", if passed { "pass" } else { "FAIL" }),
        details: json!({ "delta_star": star, "omega": omega, "bracket": [lo, hi], "iterations": iters, "tolerance": (hi - lo) / 2f64.powi(iters as i32), "calibration": cal }),
    })
}

fn thinlimit(cfg: &ExperimentConfig, set: &mut ArtifactSet) -> Result<Outcome> {
    let rows = thinlimit_run(&cfg.thinlimit())?;
    let mut csv = Csv::new(&["epsilon", "density_error", "momentum_error", "samples"]);
    for r in &rows {
        csv.push(vec![fmt_f64(r.epsilon), fmt_f64(r.density_error), fmt_f64(r.momentum_error), r.samples.to_string()]);
    }
    set.write_csv(".csv", &csv)?;
    let passed = rows.windows(2).all(|w| w[1].density_error < w[0].density_error && w[1].momentum_error < w[0].momentum_error);
    Ok(Outcome {
        passed,
        summary: format!("thinlimit: {} channels, errors {}", rows.len(), if passed { "strictly decreasing" } else { "NOT decreasing" }),
        details: serde_json::to_value(&rows).expect("rows serialize"),
    })
}

fn omega(cfg: &ExperimentConfig, set: &mut ArtifactSet) -> Result<Outcome> {
    let eps = cfg.geometry.epsilon;
    let v = cfg.constants.volume.unwrap_or(eps * eps);
    let c = cfg.constants.c_gronwall.unwrap_or(1.0);
    let t = cfg.time.t_end;
    let w = omega_threshold(eps, v, t, c)?;
    let mut csv = Csv::new(&["epsilon", "volume", "t_horizon", "c", "omega"]);
    csv.push_f64(&[eps, v, t, c, w]);
    set.write_csv(".csv", &csv)?;
    Ok(Outcome { passed: true, summary: format!("{w:?}"), details: json!({ "omega": w, "epsilon": eps, "volume": v, "t_horizon": t, "c": c }) })
}
