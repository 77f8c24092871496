//! Stability threshold, Gronwall envelope, robustness sweeps and the
//! thin-limit study. Everything here runs in `f64`.

use serde::Serialize;

use crate::energetics::{
    energy_report, identity_residual_from_reports, relent_quotient, smallness_from_norms, snapshot, EnergyReport, IdentityResidual,
};
use crate::error::{Error, Result};
use crate::fieldcalc::{lift1d, w14_norm, w22_norm};
use crate::geometry::{build_channel, GridFunction, ThinDomain};
use crate::physics::{PressureLaw, Viscosity};
use crate::solver1d::{check_compatibility, CanonicalData, Profile1D, Solver1D};
use crate::solver3d::{fixed_steps, FluidState3D, Scheme, Solver3D};
use crate::trig::{self, TrigSpec};

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::config(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

/// `ε^{−16/5} + V^{−1/4}ε^{−1}`, the growth rate multiplying `C`.
pub fn growth_rate(epsilon: f64, v: f64) -> Result<f64> {
    positive("epsilon", epsilon)?;
    positive("volume", v)?;
    Ok(epsilon.powf(-3.2) + v.powf(-0.25) / epsilon)
}

/// `min(ε⁵, ε^{3/2}V^{1/2})`.
fn ceiling_factor(epsilon: f64, v: f64) -> f64 {
    epsilon.powi(5).min(epsilon.powf(1.5) * v.sqrt())
}

/// `exp[−c(ε^{−16/5} + V^{−1/4}ε^{−1})T] · min(ε⁵, ε^{3/2}V^{1/2})`.
pub fn omega_threshold(epsilon: f64, v: f64, t_horizon: f64, c: f64) -> Result<f64> {
    let rate = growth_rate(epsilon, v)?;
    positive("c", c)?;
    if !(t_horizon >= 0.0 && t_horizon.is_finite()) {
        return Err(Error::config(format!("time horizon must be finite and >= 0, got {t_horizon}")));
    }
    Ok((-c * rate * t_horizon).exp() * ceiling_factor(epsilon, v))
}

/// `E*(0) · exp[c(ε^{−16/5} + V^{−1/4}ε^{−1})t]`.
pub fn gronwall_envelope(estar0: f64, t: f64, epsilon: f64, v: f64, c: f64) -> Result<f64> {
    let rate = growth_rate(epsilon, v)?;
    positive("c", c)?;
    if !(estar0 >= 0.0) || !(t >= 0.0) {
        return Err(Error::config(format!("need estar0 >= 0 and t >= 0, got {estar0}, {t}")));
    }
    if estar0 == 0.0 {
        return Ok(0.0);
    }
    Ok(estar0 * (c * rate * t).exp())
}

pub fn smallness_ceiling(epsilon: f64, v: f64, c_geom: f64) -> Result<f64> {
    positive("epsilon", epsilon)?;
    positive("volume", v)?;
    positive("c_geom", c_geom)?;
    Ok(c_geom * ceiling_factor(epsilon, v))
}

/// Physics, reference data and discretization shared by the experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSetup {
    pub law: PressureLaw<f64>,
    pub visc: Viscosity<f64>,
    pub scheme: Scheme<f64>,
    pub data: CanonicalData<f64>,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub t_end: f64,
    pub cfl: f64,
    /// Solver steps between recorded samples.
    pub sample_every: usize,
}

impl Default for RunSetup {
    fn default() -> Self {
        Self {
            law: PressureLaw::default(),
            visc: Viscosity::default(),
            scheme: Scheme::default(),
            data: CanonicalData { rho_bar: 1.0, b: 0.1, s: 0.1 },
            nx: 4,
            ny: 4,
            nz: 16,
            t_end: 0.25,
            cfl: 0.4,
            sample_every: 10,
        }
    }
}

impl RunSetup {
    pub fn domain(&self, epsilon: f64) -> Result<ThinDomain<f64>> {
        build_channel(epsilon, self.nx, self.ny, self.nz)
    }

    pub fn solver(&self, domain: ThinDomain<f64>) -> Solver3D<f64> {
        Solver3D::new(self.law, self.visc, domain).with_scheme(self.scheme)
    }

    /// The compatible 1D data sampled on `nz` cells and lifted.
    pub fn lifted_initial(&self, domain: &ThinDomain<f64>) -> Result<FluidState3D<f64>> {
        check_compatibility(&self.data)?;
        lift1d(&Profile1D::sample(&self.data, domain.nz), domain)
    }
}

/// A lifted 1D trajectory with its lifted time derivatives.
#[derive(Debug, Clone)]
pub struct LiftedReference {
    pub states: Vec<FluidState3D<f64>>,
    pub drho: Vec<GridFunction<f64>>,
    pub du: Vec<GridFunction<f64>>,
}

/// Solves the 1D limit at `nz_ref` cells, averages each of the `samples + 1`
/// profiles and its rates down to the grid of `domain` and lifts them.
pub fn make_reference(
    setup: &RunSetup,
    domain: &ThinDomain<f64>,
    nz_ref: usize,
    samples: usize,
) -> Result<LiftedReference> {
    if nz_ref < domain.nz || nz_ref % domain.nz != 0 {
        return Err(Error::config(format!("reference resolution {nz_ref} must be a multiple of nz = {}", domain.nz)));
    }
    check_compatibility(&setup.data)?;
    let solver = Solver1D::new(setup.law, setup.visc).with_scheme(setup.scheme);
    let traj = solver.evolve(&Profile1D::sample(&setup.data, nz_ref), setup.t_end, samples, setup.cfl)?;
    let mut out = LiftedReference { states: Vec::new(), drho: Vec::new(), du: Vec::new() };
    for p in &traj.profiles {
        let r = solver.rhs(p)?;
        let rates = Profile1D { rho: r.drho, u: r.du, t: p.t }.coarsen(domain.nz)?;
        let lifted_rates = lift1d(&rates, domain)?;
        out.states.push(lift1d(&p.coarsen(domain.nz)?, domain)?);
        out.drho.push(lifted_rates.rho);
        out.du.push(lifted_rates.u);
    }
    Ok(out)
}

/// Initial bumps `(σ₀, w₀)` and their norms.
#[derive(Debug, Clone)]
pub struct Perturbation {
    pub sigma: GridFunction<f64>,
    pub w: GridFunction<f64>,
    pub sigma_w14: f64,
    pub w_w22: f64,
}

impl Perturbation {
    pub fn data_norm(&self) -> f64 {
        self.sigma_w14 + self.w_w22
    }
}

/// Part of the data norm carried by the density bump.
pub const DENSITY_SHARE: f64 = 0.1;

fn mode_seed(mode: u64) -> u64 {
    mode.wrapping_mul(0xD134_2543_DE82_EF95).wrapping_add(0x5851_F42D_4C95_7F2D)
}

/// Slip-compatible trigonometric bumps with
/// `‖σ₀‖_{W^{1,4}} + ‖w₀‖_{W^{2,2}} = delta`, a `density_share` of which sits
/// in the density. Fails when `base_rho + σ₀` drops below half the minimum of
/// `base_rho`.
pub fn make_perturbation(
    delta: f64,
    mode: u64,
    domain: &ThinDomain<f64>,
    base_rho: &GridFunction<f64>,
    density_share: f64,
) -> Result<Perturbation> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::config(format!("delta must be finite and >= 0, got {delta}")));
    }
    if !(0.0..=1.0).contains(&density_share) {
        return Err(Error::config(format!("density share must lie in [0, 1], got {density_share}")));
    }
    base_rho.check_on(domain)?;
    let n = domain.dims();
    if delta == 0.0 {
        return Ok(Perturbation { sigma: GridFunction::zeros(n, 1), w: GridFunction::zeros(n, 3), sigma_w14: 0.0, w_w22: 0.0 });
    }
    let mut rng = trig::rng(mode_seed(mode));
    let spec = TrigSpec { max_mode: 2, constant: false };
    let s_hat = trig::random_scalar(&mut rng, spec).sample(domain);
    let w_hat = trig::random_slip_vector(&mut rng, spec).sample(domain);
    let normalize = |f: GridFunction<f64>, norm: f64, target: f64| {
        if target == 0.0 {
            f.scale(0.0)
        } else {
            f.scale(target / norm)
        }
    };
    let sigma = normalize(s_hat.clone(), w14_norm(&s_hat, domain), density_share * delta);
    let w = normalize(w_hat.clone(), w22_norm(&w_hat, domain), (1.0 - density_share) * delta);
    let floor = 0.5 * base_rho.min_value();
    let low = base_rho.add(&sigma)?.min_value();
    if !(low >= floor) {
        return Err(Error::config(format!("delta = {delta} drives the initial density to {low}, below {floor}")));
    }
    Ok(Perturbation { sigma_w14: w14_norm(&sigma, domain), w_w22: w22_norm(&w, domain), sigma, w })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustnessConfig {
    pub setup: RunSetup,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
    pub c_gronwall: f64,
    pub c_geom: f64,
    pub density_share: f64,
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        Self { setup: RunSetup::default(), epsilon: 0.5, delta: 0.0, seed: 1, c_gronwall: 1.0, c_geom: 1.0, density_share: DENSITY_SHARE }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SamplePoint {
    pub t: f64,
    pub e: f64,
    pub d: f64,
    pub estar: f64,
    pub sigma_linf: f64,
    pub w_linf: f64,
    /// `∫ relent / ∫ σ²`, absent when the densities agree.
    pub relent_quotient: Option<f64>,
    pub envelope: f64,
    pub ceiling: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RobustnessVerdict {
    pub epsilon: f64,
    pub delta: f64,
    pub omega: f64,
    pub c_gronwall: f64,
    pub data_norm: f64,
    /// Infimum of the reference density over the samples.
    pub c1: f64,
    /// Smallest and largest density of either state over the samples.
    pub rho_min: f64,
    pub rho_max: f64,
    pub envelope_ok: bool,
    pub ceiling_ok: bool,
    pub smallness_ok: bool,
    pub first_violation_t: Option<f64>,
    /// Why the run stopped early, if it did.
    pub failure: Option<String>,
    pub estar_series: Vec<SamplePoint>,
}

impl RobustnessVerdict {
    pub fn passed(&self) -> bool {
        self.envelope_ok && self.ceiling_ok && self.smallness_ok && self.failure.is_none()
    }
}

/// Lockstep run of reference and perturbed states with an energy report at
/// every sample. A blow-up ends the run and is returned alongside the reports
/// collected so far.
struct PairRun {
    reports: Vec<EnergyReport<f64>>,
    quotients: Vec<Option<f64>>,
    c1: f64,
    rho_range: (f64, f64),
    failure: Option<(f64, String)>,
}

fn run_pair(
    setup: &RunSetup,
    solver: &Solver3D<f64>,
    reference: FluidState3D<f64>,
    perturbed: FluidState3D<f64>,
) -> Result<PairRun> {
    let dt_max = solver.stable_dt(&reference, setup.cfl)?.min(solver.stable_dt(&perturbed, setup.cfl)?);
    let (dt, steps) = fixed_steps(dt_max, setup.t_end)?;
    let every = setup.sample_every.max(1);
    let domain = solver.domain;
    let mut out = PairRun { reports: Vec::new(), quotients: Vec::new(), c1: f64::INFINITY, rho_range: (f64::INFINITY, 0.0), failure: None };
    let (mut a, mut b) = (reference, perturbed);
    let record = |a: &FluidState3D<f64>, b: &FluidState3D<f64>, out: &mut PairRun| -> Result<()> {
        out.c1 = out.c1.min(a.rho.min_value());
        let lo = a.rho.min_value().min(b.rho.min_value());
        let hi = a.rho.max_abs().max(b.rho.max_abs());
        out.rho_range = (out.rho_range.0.min(lo), out.rho_range.1.max(hi));
        let snap = snapshot(solver, a, b, false)?;
        out.quotients.push(relent_quotient(&snap, &solver.law, &domain)?);
        out.reports.push(energy_report(&snap, &solver.law, &solver.visc, &domain, false)?);
        Ok(())
    };
    record(&a, &b, &mut out)?;
    for step in 1..=steps {
        let t = dt * step as f64;
        let next = solver.step(&a, dt).and_then(|na| Ok((na, solver.step(&b, dt)?)));
        match next {
            Ok((na, nb)) => {
                a = na;
                b = nb;
            }
            Err(Error::BlowUp { t, reason }) => {
                out.failure = Some((t, reason));
                return Ok(out);
            }
            Err(e) => return Err(e),
        }
        // pin the clock so both sample grids agree exactly
        a.t = t;
        b.t = t;
        if step % every == 0 || step == steps {
            match record(&a, &b, &mut out) {
                Ok(()) => {}
                Err(Error::BlowUp { t, reason }) => {
                    out.failure = Some((t, reason));
                    return Ok(out);
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}

/// Evolves the reference and the perturbed data on the same grid and checks
/// smallness, the Gronwall envelope and the ceiling at every sample.
pub fn robustness_run(cfg: &RobustnessConfig) -> Result<RobustnessVerdict> {
    let setup = &cfg.setup;
    let domain = setup.domain(cfg.epsilon)?;
    let solver = setup.solver(domain);
    let reference = setup.lifted_initial(&domain)?;
    let pert = make_perturbation(cfg.delta, cfg.seed, &domain, &reference.rho, cfg.density_share)?;
    let perturbed = FluidState3D::new(reference.rho.add(&pert.sigma)?, reference.u.add(&pert.w)?, 0.0)?;
    let omega = omega_threshold(cfg.epsilon, domain.v, setup.t_end, cfg.c_gronwall)?;
    let ceiling = smallness_ceiling(cfg.epsilon, domain.v, cfg.c_geom)?;
    let run = run_pair(setup, &solver, reference, perturbed)?;
    let estar0 = run.reports[0].estar;
    let mut verdict = RobustnessVerdict {
        epsilon: cfg.epsilon,
        delta: cfg.delta,
        omega,
        c_gronwall: cfg.c_gronwall,
        data_norm: pert.data_norm(),
        c1: run.c1,
        rho_min: run.rho_range.0,
        rho_max: run.rho_range.1,
        envelope_ok: true,
        ceiling_ok: true,
        smallness_ok: true,
        first_violation_t: None,
        failure: None,
        estar_series: Vec::with_capacity(run.reports.len()),
    };
    let violate = |t: f64, v: &mut Option<f64>| {
        if v.is_none() {
            *v = Some(t);
        }
    };
    let mut first = None;
    for (r, q) in run.reports.iter().zip(&run.quotients) {
        let envelope = gronwall_envelope(estar0, r.t, cfg.epsilon, domain.v, cfg.c_gronwall)?;
        let flags = smallness_from_norms(r.sigma_linf, r.w_linf, run.c1);
        let env_ok = r.estar <= envelope;
        let ceil_ok = r.estar <= ceiling;
        verdict.envelope_ok &= env_ok;
        verdict.ceiling_ok &= ceil_ok;
        verdict.smallness_ok &= flags.ok();
        if !(env_ok && ceil_ok && flags.ok()) {
            violate(r.t, &mut first);
        }
        verdict.estar_series.push(SamplePoint {
            t: r.t,
            e: r.e,
            d: r.d_diss,
            estar: r.estar,
            sigma_linf: r.sigma_linf,
            w_linf: r.w_linf,
            relent_quotient: *q,
            envelope,
            ceiling,
        });
    }
    if let Some((t, reason)) = run.failure {
        violate(t, &mut first);
        verdict.failure = Some(reason);
    }
    verdict.first_violation_t = first;
    Ok(verdict)
}

/// Reference and perturbed run sampled at `samples + 1` uniform times with
/// the full set of source integrals.
#[derive(Debug, Clone)]
pub struct IdentityRun {
    pub reports: Vec<EnergyReport<f64>>,
    pub residual: IdentityResidual<f64>,
    pub max_dissipation: f64,
    pub dt: f64,
    pub steps_per_sample: usize,
}

/// Checks the discrete energy balance on the robustness initial data.
pub fn energy_identity_run(cfg: &RobustnessConfig, samples: usize) -> Result<IdentityRun> {
    if samples == 0 {
        return Err(Error::config("identity run needs at least one sample interval"));
    }
    let setup = &cfg.setup;
    let domain = setup.domain(cfg.epsilon)?;
    let solver = setup.solver(domain);
    let mut a = setup.lifted_initial(&domain)?;
    let pert = make_perturbation(cfg.delta, cfg.seed, &domain, &a.rho, cfg.density_share)?;
    let mut b = FluidState3D::new(a.rho.add(&pert.sigma)?, a.u.add(&pert.w)?, 0.0)?;
    let interval = setup.t_end / samples as f64;
    let dt_max = solver.stable_dt(&a, setup.cfl)?.min(solver.stable_dt(&b, setup.cfl)?);
    let (dt, per) = fixed_steps(dt_max, interval)?;
    let report = |a: &FluidState3D<f64>, b: &FluidState3D<f64>| -> Result<EnergyReport<f64>> {
        energy_report(&snapshot(&solver, a, b, true)?, &solver.law, &solver.visc, &domain, true)
    };
    let mut reports = vec![report(&a, &b)?];
    for k in 1..=samples {
        for _ in 0..per {
            a = solver.step(&a, dt)?;
            b = solver.step(&b, dt)?;
        }
        a.t = interval * k as f64;
        b.t = a.t;
        reports.push(report(&a, &b)?);
    }
    let residual = identity_residual_from_reports(&reports)?;
    let max_dissipation = reports.iter().map(|r| r.d_diss).fold(0.0, f64::max);
    Ok(IdentityRun { reports, residual, max_dissipation, dt, steps_per_sample: per })
}

/// Smallest admissible Gronwall constant.
pub const C_FLOOR: f64 = 0.1;

#[derive(Debug, Clone, Serialize)]
pub struct Calibration {
    /// Smallest `C` for which the envelope holds on the pilot run.
    pub c_min: f64,
    /// `max(2 c_min, C_FLOOR)`.
    pub c: f64,
    pub pilot: RobustnessVerdict,
}

/// Fits the Gronwall constant on a pilot run (normally `ε = 1`, small delta).
pub fn calibrate(pilot: &RobustnessConfig) -> Result<Calibration> {
    if !(pilot.delta > 0.0) {
        return Err(Error::config("calibration needs a nonzero pilot delta"));
    }
    let v = pilot.setup.domain(pilot.epsilon)?.v;
    let rate = growth_rate(pilot.epsilon, v)?;
    let verdict = robustness_run(&RobustnessConfig { c_gronwall: 1.0, ..*pilot })?;
    if let Some(reason) = &verdict.failure {
        return Err(Error::Numerical(format!("pilot run failed: {reason}")));
    }
    let e0 = verdict.estar_series[0].estar;
    if !(e0 > 0.0) {
        return Err(Error::Numerical("pilot run has zero initial energy".into()));
    }
    let c_min = verdict
        .estar_series
        .iter()
        .filter(|s| s.t > 0.0)
        .map(|s| (s.estar / e0).ln() / (rate * s.t))
        .fold(f64::NEG_INFINITY, f64::max);
    let c = (2.0 * c_min).max(C_FLOOR);
    Ok(Calibration { c_min, c, pilot: verdict })
}

/// Largest passing delta in `[lo, hi]` by bisection on a monotone verdict,
/// to within `(hi − lo)/2^iters`.
pub fn critical_amplitude(mut verdict: impl FnMut(f64) -> Result<bool>, lo: f64, hi: f64, iters: usize) -> Result<f64> {
    if !(lo >= 0.0 && hi > lo) {
        return Err(Error::config(format!("invalid bracket [{lo}, {hi}]")));
    }
    if !verdict(lo)? {
        return Err(Error::config(format!("lower bracket {lo} does not pass")));
    }
    if verdict(hi)? {
        return Err(Error::config(format!("upper bracket {hi} does not fail")));
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..iters {
        let m = 0.5 * (a + b);
        if verdict(m)? {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(a)
}

/// Bisection over `robustness_run` with inadmissible initial data counted as
/// failure.
pub fn critical_amplitude_run(cfg: &RobustnessConfig, lo: f64, hi: f64, iters: usize) -> Result<f64> {
    critical_amplitude(
        |delta| match robustness_run(&RobustnessConfig { delta, ..*cfg }) {
            Ok(v) => Ok(v.passed()),
            Err(Error::Config(msg)) if msg.contains("drives the initial density") => Ok(false),
            Err(e) => Err(e),
        },
        lo,
        hi,
        iters,
    )
}

/// 3D solution from lifted data against the lifted fine 1D solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LiftRow {
    pub nz: usize,
    /// Max over samples of the horizontal speed.
    pub horizontal_linf: f64,
    pub rho_err: f64,
    pub u_err: f64,
}

/// Evolves `initial` to `t_end` through `samples` equal intervals, splitting
/// each into equal steps no larger than the initial stable step.
fn evolve_sampled(
    solver: &Solver3D<f64>,
    initial: &FluidState3D<f64>,
    t_end: f64,
    samples: usize,
    cfl: f64,
    mut observe: impl FnMut(usize, &FluidState3D<f64>) -> Result<()>,
) -> Result<()> {
    let interval = t_end / samples as f64;
    let (dt, per) = fixed_steps(solver.stable_dt(initial, cfl)?, interval)?;
    let mut s = initial.clone();
    observe(0, &s)?;
    for k in 1..=samples {
        for _ in 0..per {
            s = solver.step(&s, dt)?;
        }
        s.t = interval * k as f64;
        observe(k, &s)?;
    }
    Ok(())
}

/// Runs the 3D solver from lifted data at each `nz` and measures the
/// horizontal velocity and the sup-in-time distance to the lifted 1D solution
/// computed at `nz_ref` cells.
pub fn lifted_exactness(setup: &RunSetup, epsilon: f64, nzs: &[usize], nz_ref: usize, samples: usize) -> Result<Vec<LiftRow>> {
    let solver1 = Solver1D::new(setup.law, setup.visc).with_scheme(setup.scheme);
    check_compatibility(&setup.data)?;
    let fine = solver1.evolve(&Profile1D::sample(&setup.data, nz_ref), setup.t_end, samples, setup.cfl)?;
    nzs.iter()
        .map(|&nz| {
            let domain = build_channel(epsilon, setup.nx, setup.ny, nz)?;
            let solver = setup.solver(domain);
            let init = lift1d(&Profile1D::sample(&setup.data, nz), &domain)?;
            let mut row = LiftRow { nz, horizontal_linf: 0.0, rho_err: 0.0, u_err: 0.0 };
            evolve_sampled(&solver, &init, setup.t_end, samples, setup.cfl, |k, s| {
                let r = lift1d(&fine.profiles[k].coarsen(nz)?, &domain)?;
                let n = domain.ncells();
                let u = s.u.as_slice();
                for idx in 0..n {
                    row.horizontal_linf = row.horizontal_linf.max(u[idx].hypot(u[n + idx]));
                }
                row.rho_err = row.rho_err.max(s.rho.sub(&r.rho)?.max_abs());
                row.u_err = row.u_err.max(s.u.sub(&r.u)?.max_abs());
                Ok(())
            })?;
            Ok(row)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThinLimitConfig {
    pub setup: RunSetup,
    /// Strictly decreasing.
    pub epsilons: Vec<f64>,
    /// Relative perturbation amplitude; the bumps scale with `ε`.
    pub delta: f64,
    pub seed: u64,
    /// 1D reference cells, a multiple of `setup.nz`.
    pub nz_ref: usize,
}

impl Default for ThinLimitConfig {
    fn default() -> Self {
        Self {
            setup: RunSetup { t_end: 0.1, nz: 32, ..RunSetup::default() },
            epsilons: vec![0.4, 0.2, 0.1],
            delta: 0.1,
            seed: 1,
            nz_ref: 512,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThinLimitRow {
    pub epsilon: f64,
    /// `sup_t (1/|Q_ε|)∫|ρ_ε − ρ|^γ`.
    pub density_error: f64,
    /// `sup_t (1/|Q_ε|)∫|ρ_ε u_ε − ρ u|^{2γ/(γ+1)}`.
    pub momentum_error: f64,
    pub samples: usize,
}

pub fn momentum_exponent(gamma: f64) -> f64 {
    2.0 * gamma / (gamma + 1.0)
}

/// Starts each channel from the lifted 1D data plus `ε·delta` times a fixed
/// trigonometric bump and records the sup-in-time distance to the lifted
/// limit solution.
pub fn thinlimit_run(cfg: &ThinLimitConfig) -> Result<Vec<ThinLimitRow>> {
    if cfg.epsilons.is_empty() {
        return Err(Error::config("thin-limit run needs at least one epsilon"));
    }
    if cfg.epsilons.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::config(format!("epsilon list must be strictly decreasing, got {:?}", cfg.epsilons)));
    }
    if !(cfg.delta >= 0.0) {
        return Err(Error::config("delta must be >= 0"));
    }
    let setup = &cfg.setup;
    let gamma = setup.law.gamma;
    let q = momentum_exponent(gamma);
    let mut rng = trig::rng(mode_seed(cfg.seed));
    let spec = TrigSpec { max_mode: 1, constant: false };
    let bump_rho = trig::random_scalar(&mut rng, spec);
    let bump_u = trig::random_slip_vector(&mut rng, spec);
    let solver1 = Solver1D::new(setup.law, setup.visc).with_scheme(setup.scheme);
    check_compatibility(&setup.data)?;
    let fine0 = Profile1D::sample(&setup.data, cfg.nz_ref);
    cfg.epsilons
        .iter()
        .map(|&eps| {
            let domain = setup.domain(eps)?;
            let solver = setup.solver(domain);
            let base = setup.lifted_initial(&domain)?;
            let amp = eps * cfg.delta;
            let rho = base.rho.add(&bump_rho.sample(&domain).scale(amp * setup.data.rho_bar))?;
            let u = base.u.add(&bump_u.sample(&domain).scale(amp))?;
            if !(rho.min_value() > 0.5 * base.rho.min_value()) {
                return Err(Error::config(format!("thin-limit perturbation too large at eps = {eps}")));
            }
            let init = FluidState3D::new(rho, u, 0.0)?;
            let (_, steps) = fixed_steps(solver.stable_dt(&init, setup.cfl)?, setup.t_end)?;
            let samples = steps.div_ceil(setup.sample_every.max(1)).max(1);
            let fine = solver1.evolve(&fine0, setup.t_end, samples, setup.cfl)?;
            let mut row = ThinLimitRow { epsilon: eps, density_error: 0.0, momentum_error: 0.0, samples: samples + 1 };
            let n = domain.ncells();
            evolve_sampled(&solver, &init, setup.t_end, samples, setup.cfl, |k, s| {
                let r = fine.profiles[k].coarsen(domain.nz)?;
                let (mut de, mut me) = (0.0, 0.0);
                let u = s.u.as_slice();
                for idx in 0..n {
                    let kz = idx / (domain.nx * domain.ny);
                    let rho = s.rho.as_slice()[idx];
                    de += (rho - r.rho[kz]).abs().powf(gamma);
                    let m = [rho * u[idx], rho * u[n + idx], rho * u[2 * n + idx] - r.rho[kz] * r.u[kz]];
                    me += (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt().powf(q);
                }
                let norm = 1.0 / n as f64;
                row.density_error = row.density_error.max(de * norm);
                row.momentum_error = row.momentum_error.max(me * norm);
                Ok(())
            })?;
            Ok(row)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_examples() {
        assert_eq!(omega_threshold(1.0, 1.0, 0.0, 1.0).unwrap(), 1.0);
        let expect = (-(2f64.powf(3.2) + 2.0)).exp() / 32.0;
        let got = omega_threshold(0.5, 1.0, 1.0, 1.0).unwrap();
        assert!((got - expect).abs() <= 1e-14 * expect);
        assert!(omega_threshold(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(omega_threshold(0.5, -1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn envelope_and_ceiling_examples() {
        assert_eq!(gronwall_envelope(0.0, 3.0, 0.5, 0.25, 1.0).unwrap(), 0.0);
        assert_eq!(gronwall_envelope(0.7, 0.0, 0.5, 0.25, 1.0).unwrap(), 0.7);
        let e2 = gronwall_envelope(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!((e2 - 2f64.exp()).abs() < 1e-14 * e2);
        assert_eq!(smallness_ceiling(1.0, 1.0, 2.5).unwrap(), 2.5);
        assert!((smallness_ceiling(0.5, 0.25, 1.0).unwrap() - 1.0 / 32.0).abs() < 1e-16);
        assert!((smallness_ceiling(0.9, 10.0, 1.0).unwrap() - 0.59049).abs() < 1e-14);
        assert!(smallness_ceiling(0.5, 0.25, 0.0).is_err());
    }

    #[test]
    fn bisection_on_step() {
        let mut calls = 0;
        let got = critical_amplitude(
            |d| {
                calls += 1;
                Ok(d <= 0.3)
            },
            0.0,
            1.0,
            30,
        )
        .unwrap();
        assert!((got - 0.3).abs() <= 1.0 / 2f64.powi(30));
        assert!(got <= 0.3);
        assert_eq!(calls, 32);
        assert!(critical_amplitude(|d| Ok(d < 0.5), 0.6, 1.0, 5).is_err());
        assert!(critical_amplitude(|_| Ok(true), 0.0, 1.0, 5).is_err());
        assert!(critical_amplitude(|_| Ok(true), 1.0, 0.5, 5).is_err());
    }

    #[test]
    fn perturbation_norms() {
        let d = build_channel(0.5, 6, 6, 12).unwrap();
        let base = GridFunction::constant(d.dims(), 1, 1.0);
        let z = make_perturbation(0.0, 1, &d, &base, DENSITY_SHARE).unwrap();
        assert_eq!(z.sigma.max_abs(), 0.0);
        assert_eq!(z.w.max_abs(), 0.0);
        let a = make_perturbation(1e-3, 1, &d, &base, DENSITY_SHARE).unwrap();
        let check = w14_norm(&a.sigma, &d) + w22_norm(&a.w, &d);
        assert!((check - 1e-3).abs() <= 1e-9, "{check}");
        let b = make_perturbation(1e-3, 2, &d, &base, DENSITY_SHARE).unwrap();
        assert!((b.data_norm() - a.data_norm()).abs() <= 1e-12);
        assert!(a.sigma.sub(&b.sigma).unwrap().max_abs() > 1e-6);
        assert!(make_perturbation(1e3, 1, &d, &base, 1.0).is_err());
        assert!(make_perturbation(-1.0, 1, &d, &base, 0.1).is_err());
    }

    #[test]
    fn reference_examples() {
        let setup = RunSetup { t_end: 0.02, ..RunSetup::default() };
        let d = setup.domain(0.5).unwrap();
        let eq = RunSetup { data: CanonicalData { rho_bar: 1.3, b: 0.0, s: 0.0 }, ..setup };
        let r = make_reference(&eq, &d, 64, 2).unwrap();
        for s in &r.states {
            assert!(s.rho.as_slice().iter().all(|&v| v == 1.3));
            assert_eq!(s.u.max_abs(), 0.0);
        }
        let r = make_reference(&setup, &d, 64, 2).unwrap();
        assert_eq!(r.states.len(), 3);
        for s in &r.states {
            let g = crate::solver3d::apply_slip_bc(s, &d).unwrap();
            assert!(g.normal_trace_residual() <= 1e-12);
        }
        assert!(r.drho[0].max_abs() > 0.0);
        // a density that crosses zero is not admissible data
        let bad = RunSetup { data: CanonicalData { rho_bar: 0.05, b: 0.1, s: 0.0 }, ..setup };
        assert!(matches!(make_reference(&bad, &d, 64, 2), Err(Error::Config(_))));
        assert!(make_reference(&setup, &d, 40, 2).is_err());
    }

    #[test]
    fn zero_delta_verdict_passes() {
        let cfg = RobustnessConfig { setup: RunSetup { t_end: 0.05, ..RunSetup::default() }, ..RobustnessConfig::default() };
        let v = robustness_run(&cfg).unwrap();
        assert!(v.passed());
        assert!(v.estar_series.iter().all(|s| s.estar <= 1e-10));
        assert!(v.first_violation_t.is_none());
    }

    #[test]
    fn gross_delta_fails_early() {
        let cfg = RobustnessConfig { delta: 10.0, setup: RunSetup { t_end: 0.05, ..RunSetup::default() }, ..RobustnessConfig::default() };
        let v = robustness_run(&cfg).unwrap();
        assert!(!v.passed());
        assert_eq!(v.first_violation_t, Some(0.0));
    }

    #[test]
    fn identity_run_identical_pair_is_exact() {
        let cfg = RobustnessConfig { setup: RunSetup { t_end: 0.01, ..RunSetup::default() }, ..RobustnessConfig::default() };
        let run = energy_identity_run(&cfg, 2).unwrap();
        assert_eq!(run.reports.len(), 3);
        assert_eq!(run.residual.max_abs, 0.0);
        let run = energy_identity_run(&RobustnessConfig { delta: 1e-2, ..cfg }, 2).unwrap();
        assert!(run.max_dissipation > 0.0);
        assert!(run.residual.max_abs < 0.2 * run.max_dissipation);
    }

    #[test]
    fn thinlimit_validation() {
        let cfg = ThinLimitConfig { epsilons: vec![0.1, 0.2], ..ThinLimitConfig::default() };
        assert!(thinlimit_run(&cfg).is_err());
        assert_eq!(momentum_exponent(2.0), 4.0 / 3.0);
    }
}
