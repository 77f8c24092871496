//! Measured constants of the scaled functional inequalities on thin boxes
//! and the discrete Lamé problem `−div S(∇w) = g` under slip conditions.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fieldcalc::{gradient, integrate, lp_norm, Exponent};
use crate::geometry::{build_channel, build_scaled_cube, GridFunction, ThinDomain};
use crate::physics::{stress_contraction, Tensor3, Viscosity};
use crate::scalar::Real;
use crate::solver3d::Padded;
use crate::trig::{self, TrigSpec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioSample<T> {
    pub epsilon: T,
    pub field_id: u64,
    pub lhs: T,
    pub rhs: T,
    pub ratio: T,
    /// Set when `rhs = 0`; `ratio` is then zero and carries no information.
    pub degenerate: bool,
}

impl<T: Real> RatioSample<T> {
    pub fn new(epsilon: T, field_id: u64, lhs: T, rhs: T) -> Self {
        let degenerate = !(rhs > T::zero());
        let ratio = if degenerate { T::zero() } else { lhs / rhs };
        Self { epsilon, field_id, lhs, rhs, ratio, degenerate }
    }
}

fn eps_pow<T: Real>(domain: &ThinDomain<T>, e: f64) -> T {
    domain.epsilon.powf(T::lit(e))
}

fn sq_integral<T: Real>(f: &GridFunction<T>, domain: &ThinDomain<T>) -> T {
    let n = lp_norm(f, Exponent::TWO, domain);
    n * n
}

fn grad_tensor<T: Real>(g: &GridFunction<T>, idx: usize) -> Tensor3<T> {
    let n = g.ncells();
    let d = g.as_slice();
    let mut t = [[T::zero(); 3]; 3];
    for (a, row) in t.iter_mut().enumerate() {
        for (b, v) in row.iter_mut().enumerate() {
            *v = d[(3 * a + b) * n + idx];
        }
    }
    t
}

/// `ε²∫|∇v|²` against `∫|v|² + ε²∫S(∇v):∇v`.
pub fn korn_ratio<T: Real>(v: &GridFunction<T>, visc: &Viscosity<T>, domain: &ThinDomain<T>) -> Result<RatioSample<T>> {
    v.check_on(domain)?;
    if v.ncomp() != 3 {
        return Err(Error::config("Korn ratio needs a vector field"));
    }
    let eps2 = domain.epsilon * domain.epsilon;
    let g = gradient(v, domain);
    let contraction: T = (0..domain.ncells()).map(|i| stress_contraction(&grad_tensor(&g, i), visc)).sum::<T>() * domain.cell_volume();
    let lhs = eps2 * sq_integral(&g, domain);
    let rhs = sq_integral(v, domain) + eps2 * contraction;
    Ok(RatioSample::new(domain.epsilon, 0, lhs, rhs))
}

/// `‖v − v̄‖_p` against `d‖∇v‖_p`.
pub fn poincare_ratio<T: Real>(v: &GridFunction<T>, p: Exponent, domain: &ThinDomain<T>) -> Result<RatioSample<T>> {
    let (lhs, rhs) = poincare_parts(v, p, domain)?;
    Ok(RatioSample::new(domain.epsilon, 0, lhs, domain.d * rhs))
}

fn poincare_parts<T: Real>(v: &GridFunction<T>, p: Exponent, domain: &ThinDomain<T>) -> Result<(T, T)> {
    v.check_on(domain)?;
    p.validate()?;
    let mean = integrate(v.as_slice(), domain) / domain.v;
    let centred = v.map(|x| x - mean);
    Ok((lp_norm(&centred, p, domain), lp_norm(&gradient(v, domain), p, domain)))
}

pub fn check_sobolev_pair(p: Exponent, q: Exponent) -> Result<()> {
    match (p.validate()?, q.validate()?) {
        (Exponent::Finite(p), Exponent::Finite(q)) if p < 3.0 => {
            let top = 3.0 * p / (3.0 - p);
            if q < p || q > top * (1.0 + 1e-12) {
                return Err(Error::config(format!("Sobolev pair (p, q) = ({p}, {q}) needs {p} <= q <= {top}")));
            }
            Ok(())
        }
        (Exponent::Finite(p), Exponent::Infinity) if p > 3.0 => Ok(()),
        (p, q) => Err(Error::config(format!("inadmissible Sobolev pair (p, q) = ({p}, {q})"))),
    }
}

fn sobolev_prefactor(p: Exponent, q: Exponent) -> f64 {
    3.0 * (q.reciprocal() - p.reciprocal())
}

fn sobolev_parts<T: Real>(v: &GridFunction<T>, p: Exponent, q: Exponent, domain: &ThinDomain<T>) -> Result<(T, T)> {
    v.check_on(domain)?;
    check_sobolev_pair(p, q)?;
    let g = lp_norm(&gradient(v, domain), p, domain);
    Ok((lp_norm(v, q, domain), lp_norm(v, p, domain) + domain.epsilon * g))
}

/// `‖v‖_q` against `ε^{3(1/q − 1/p)}(‖v‖_p + ε‖∇v‖_p)`; `q = ∞` needs `p > 3`.
pub fn sobolev_ratio<T: Real>(v: &GridFunction<T>, p: Exponent, q: Exponent, domain: &ThinDomain<T>) -> Result<RatioSample<T>> {
    let (lhs, rhs) = sobolev_parts(v, p, q, domain)?;
    Ok(RatioSample::new(domain.epsilon, 0, lhs, eps_pow(domain, sobolev_prefactor(p, q)) * rhs))
}

fn gn_parts<T: Real>(v: &GridFunction<T>, domain: &ThinDomain<T>) -> Result<(T, T)> {
    v.check_on(domain)?;
    let l2 = sq_integral(v, domain);
    let g2 = sq_integral(&gradient(v, domain), domain);
    let eps2 = domain.epsilon * domain.epsilon;
    let rhs = l2.powf(T::lit(0.125)) * (eps2 * g2 + l2).powf(T::lit(0.375));
    Ok((lp_norm(v, Exponent::FOUR, domain), rhs))
}

/// `‖v‖_{L⁴}` against `ε^{−3/4}(∫|v|²)^{1/8}(ε²∫|∇v|² + ∫|v|²)^{3/8}`.
pub fn gn_ratio<T: Real>(v: &GridFunction<T>, domain: &ThinDomain<T>) -> Result<RatioSample<T>> {
    let (lhs, rhs) = gn_parts(v, domain)?;
    Ok(RatioSample::new(domain.epsilon, 0, lhs, eps_pow(domain, -0.75) * rhs))
}

/// `ε²‖∇²w‖_p` against `ε²‖g‖_p + ‖w‖_p`.
pub fn lame_estimate_ratio<T: Real>(w: &GridFunction<T>, g: &GridFunction<T>, domain: &ThinDomain<T>, p: Exponent) -> Result<RatioSample<T>> {
    w.check_on(domain)?;
    g.check_on(domain)?;
    p.validate()?;
    let eps2 = domain.epsilon * domain.epsilon;
    let hess = gradient(&gradient(w, domain), domain);
    let lhs = eps2 * lp_norm(&hess, p, domain);
    let rhs = eps2 * lp_norm(g, p, domain) + lp_norm(w, p, domain);
    Ok(RatioSample::new(domain.epsilon, 0, lhs, rhs))
}

/// Discrete `−div S(∇w) = −μΔw − (μ/3 + η)∇div w`, with the same stencils
/// as the momentum equation of the 3D solver and slip ghost cells.
pub fn lame_apply<T: Real>(w: &GridFunction<T>, visc: &Viscosity<T>, domain: &ThinDomain<T>) -> Result<GridFunction<T>> {
    w.check_on(domain)?;
    if w.ncomp() != 3 {
        return Err(Error::config("Lamé operator acts on vector fields"));
    }
    let n = domain.dims();
    let h = domain.spacing();
    let pads: Vec<Padded<T>> = (0..3)
        .map(|a| {
            let mut odd = [false; 3];
            odd[a] = true;
            Padded::reflect(w.component(a), n, odd)
        })
        .collect();
    let st = pads[0].stride;
    let two = T::lit(2.0);
    let mu = visc.mu;
    let lam = visc.lame_second();
    let ncells = domain.ncells();
    let mut out = GridFunction::zeros(n, 3);
    let data = out.as_mut_slice();
    for k in 0..n[2] {
        for j in 0..n[1] {
            for i in 0..n[0] {
                let o = pads[0].at(i, j, k);
                let c = (k * n[1] + j) * n[0] + i;
                for a in 0..3 {
                    let f = &pads[a].data;
                    let mut acc = T::zero();
                    for b in 0..3 {
                        let s = st[b];
                        acc = acc + mu * (f[o + s] - two * f[o] + f[o - s]) / (h[b] * h[b]);
                        acc = acc
                            + lam * if a == b {
                                (f[o + s] - two * f[o] + f[o - s]) / (h[a] * h[a])
                            } else {
                                let g = &pads[b].data;
                                let sa = st[a];
                                (g[o + sa + s] - g[o + sa - s] - g[o - sa + s] + g[o - sa - s]) / (T::lit(4.0) * h[a] * h[b])
                            };
                    }
                    data[a * ncells + c] = -acc;
                }
            }
        }
    }
    Ok(out)
}

fn lame_diagonal<T: Real>(visc: &Viscosity<T>, domain: &ThinDomain<T>) -> GridFunction<T> {
    let n = domain.dims();
    let h = domain.spacing();
    let lam = visc.lame_second();
    let mut out = GridFunction::zeros(n, 3);
    for a in 0..3 {
        for k in 0..n[2] {
            for j in 0..n[1] {
                for i in 0..n[0] {
                    let idx = [i, j, k];
                    let mut diag = T::zero();
                    for b in 0..3 {
                        // reflected ghosts fold into the centre at the walls
                        let wall = idx[b] == 0 || idx[b] == n[b] - 1;
                        let both = n[b] == 1;
                        let coef = match (wall && !both, a == b) {
                            (true, true) => T::lit(3.0),
                            (true, false) => T::one(),
                            _ => T::lit(2.0),
                        };
                        let c = coef / (h[b] * h[b]);
                        diag = diag + visc.mu * c + if a == b { lam * c } else { T::zero() };
                    }
                    out.set(a, i, j, k, diag);
                }
            }
        }
    }
    out
}

fn dot_l2<T: Real>(a: &[T], b: &[T], dv: T) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum::<T>() * dv
}

#[derive(Debug, Clone)]
pub struct LameSolution<T> {
    pub w: GridFunction<T>,
    pub iterations: usize,
    pub residual: T,
}

pub const LAME_MAX_ITERATIONS: usize = 20_000;

/// Solves `−div S(∇w) = g` with slip conditions by Jacobi-preconditioned
/// conjugate gradients, to an L² residual below `tol`.
///
/// The discrete operator is symmetric positive definite on a closed box,
/// since no rigid motion satisfies `u·n = 0` on all six faces, so no kernel
/// has to be removed.
pub fn lame_solve<T: Real>(g: &GridFunction<T>, visc: &Viscosity<T>, domain: &ThinDomain<T>, tol: T) -> Result<GridFunction<T>> {
    Ok(lame_solve_with(g, visc, domain, tol, LAME_MAX_ITERATIONS)?.w)
}

pub fn lame_solve_with<T: Real>(
    g: &GridFunction<T>,
    visc: &Viscosity<T>,
    domain: &ThinDomain<T>,
    tol: T,
    max_iterations: usize,
) -> Result<LameSolution<T>> {
    g.check_on(domain)?;
    if g.ncomp() != 3 || !g.is_finite() {
        return Err(Error::config("Lamé right-hand side must be a finite vector field"));
    }
    let dv = domain.cell_volume();
    let diag = lame_diagonal(visc, domain);
    let mut w = GridFunction::zeros(domain.dims(), 3);
    let mut r = g.clone();
    let mut res = dot_l2(r.as_slice(), r.as_slice(), dv).sqrt();
    if res <= tol {
        return Ok(LameSolution { w, iterations: 0, residual: res });
    }
    let precondition = |r: &GridFunction<T>| r.zip_map(&diag, |x, d| x / d);
    let mut zv = precondition(&r)?;
    let mut p = zv.clone();
    let mut rz = dot_l2(r.as_slice(), zv.as_slice(), dv);
    for it in 1..=max_iterations {
        let ap = lame_apply(&p, visc, domain)?;
        let pap = dot_l2(p.as_slice(), ap.as_slice(), dv);
        if !(pap > T::zero()) {
            return Err(Error::Numerical(format!("Lamé operator lost positivity at iteration {it}")));
        }
        let alpha = rz / pap;
        w = w.zip_map(&p, |x, y| x + alpha * y)?;
        r = r.zip_map(&ap, |x, y| x - alpha * y)?;
        res = dot_l2(r.as_slice(), r.as_slice(), dv).sqrt();
        if res <= tol {
            return Ok(LameSolution { w, iterations: it, residual: res });
        }
        zv = precondition(&r)?;
        let rz_next = dot_l2(r.as_slice(), zv.as_slice(), dv);
        let beta = rz_next / rz;
        rz = rz_next;
        p = zv.zip_map(&p, |x, y| x + beta * y)?;
    }
    Err(Error::NoConvergence { iterations: max_iterations, residual: res.to_f64_lossy() })
}

/// Least-squares slope of `log(max ratio per ε)` against `log ε`.
pub fn fit_epsilon_exponent<T: Real>(samples: &[RatioSample<T>]) -> Result<T> {
    let mut groups: Vec<(T, T)> = Vec::new();
    for s in samples.iter().filter(|s| !s.degenerate) {
        if !(s.ratio > T::zero()) || !(s.epsilon > T::zero()) {
            return Err(Error::config(format!("exponent fit needs positive ratios, got {} at eps {}", s.ratio, s.epsilon)));
        }
        match groups.iter_mut().find(|g| g.0 == s.epsilon) {
            Some(g) => g.1 = g.1.max(s.ratio),
            None => groups.push((s.epsilon, s.ratio)),
        }
    }
    if groups.len() < 3 {
        return Err(Error::config(format!("exponent fit needs at least 3 distinct epsilon values, got {}", groups.len())));
    }
    let n = T::from_usize_lossy(groups.len());
    let xs: Vec<T> = groups.iter().map(|g| g.0.ln()).collect();
    let ys: Vec<T> = groups.iter().map(|g| g.1.ln()).collect();
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let sxy: T = xs.iter().zip(&ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let sxx: T = xs.iter().map(|&x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// Inequalities of the sampling suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Inequality {
    Korn,
    Poincare2,
    Poincare4,
    Sobolev26,
    Sobolev24,
    Linf4,
    GagliardoNirenberg,
    Lame2,
    Lame4,
}

impl Inequality {
    pub const ALL: [Inequality; 9] = [
        Inequality::Korn,
        Inequality::Poincare2,
        Inequality::Poincare4,
        Inequality::Sobolev26,
        Inequality::Sobolev24,
        Inequality::Linf4,
        Inequality::GagliardoNirenberg,
        Inequality::Lame2,
        Inequality::Lame4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Inequality::Korn => "korn",
            Inequality::Poincare2 => "poincare_p2",
            Inequality::Poincare4 => "poincare_p4",
            Inequality::Sobolev26 => "sobolev_p2_q6",
            Inequality::Sobolev24 => "sobolev_p2_q4",
            Inequality::Linf4 => "linf_p4",
            Inequality::GagliardoNirenberg => "gagliardo_nirenberg",
            Inequality::Lame2 => "lame_p2",
            Inequality::Lame4 => "lame_p4",
        }
    }

    /// Predicted slope of the unscaled ratio on the isotropically scaled cube.
    pub fn predicted_exponent(self) -> Option<f64> {
        match self {
            Inequality::Poincare2 | Inequality::Poincare4 => Some(1.0),
            Inequality::Sobolev26 => Some(sobolev_prefactor(Exponent::TWO, Exponent::SIX)),
            Inequality::Sobolev24 => Some(sobolev_prefactor(Exponent::TWO, Exponent::FOUR)),
            Inequality::Linf4 => Some(sobolev_prefactor(Exponent::FOUR, Exponent::INF)),
            Inequality::GagliardoNirenberg => Some(-0.75),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteConfig {
    pub epsilons: [f64; 4],
    pub samples: usize,
    /// Cells per direction in the cross-section; the axis gets twice as many.
    pub n: usize,
    pub seed: u64,
    pub safety: f64,
    pub fit_tolerance: f64,
    /// Manufactured Lamé pairs per ε (each solve is an elliptic problem).
    pub lame_samples: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { epsilons: [1.0, 0.5, 0.25, 0.125], samples: 100, n: 8, seed: 1, safety: 2.0, fit_tolerance: 0.3, lame_samples: 10 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InequalitySummary {
    pub inequality: Inequality,
    pub calibration_max: f64,
    pub bound: f64,
    /// Max ratio per ε, in the order of the configured list.
    pub max_ratio: Vec<f64>,
    pub uniform_ok: bool,
    pub fitted_exponent: Option<f64>,
    pub predicted_exponent: Option<f64>,
    pub fit_ok: Option<bool>,
    /// Slope of unscaled ratios on the channel itself, for information.
    pub channel_exponent: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub samples: Vec<(Inequality, RatioSample<f64>)>,
    pub summaries: Vec<InequalitySummary>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.summaries.iter().all(|s| s.uniform_ok && s.fit_ok.unwrap_or(true))
    }
}

/// Seed of field `index` at position `ei` of the ε list.
fn field_seed(base: u64, index: usize) -> u64 {
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index as u64)
}

fn channel_samples(domain: &ThinDomain<f64>, cfg: &SuiteConfig) -> Result<Vec<(Inequality, RatioSample<f64>)>> {
    let korn_visc = Viscosity::new(1.0, 0.0)?;
    let spec = TrigSpec::default();
    let per_field = (0..cfg.samples)
        .into_par_iter()
        .map(|i| -> Result<Vec<(Inequality, RatioSample<f64>)>> {
            let id = field_seed(cfg.seed, i);
            let mut rng = trig::rng(id);
            let v = trig::random_slip_vector(&mut rng, spec).sample(domain);
            let s = trig::random_scalar(&mut rng, spec).sample(domain);
            let tag = |mut r: RatioSample<f64>| {
                r.field_id = id;
                r
            };
            Ok(vec![
                (Inequality::Korn, tag(korn_ratio(&v, &korn_visc, domain)?)),
                (Inequality::Poincare2, tag(poincare_ratio(&s, Exponent::TWO, domain)?)),
                (Inequality::Poincare4, tag(poincare_ratio(&s, Exponent::FOUR, domain)?)),
                (Inequality::Sobolev26, tag(sobolev_ratio(&s, Exponent::TWO, Exponent::SIX, domain)?)),
                (Inequality::Sobolev24, tag(sobolev_ratio(&s, Exponent::TWO, Exponent::FOUR, domain)?)),
                (Inequality::Linf4, tag(sobolev_ratio(&s, Exponent::FOUR, Exponent::INF, domain)?)),
                (Inequality::GagliardoNirenberg, tag(gn_ratio(&s, domain)?)),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out: Vec<_> = per_field.into_iter().flatten().collect();
    let visc = Viscosity::default();
    let lame = (0..cfg.lame_samples)
        .into_par_iter()
        .map(|i| -> Result<Vec<(Inequality, RatioSample<f64>)>> {
            let id = field_seed(cfg.seed ^ 0x1a3e, i);
            let target = trig::random_slip_vector(&mut trig::rng(id), TrigSpec { max_mode: 1, constant: true });
            let g = lame_apply(&target.sample(domain), &visc, domain)?;
            let tol = 1e-10 * lp_norm(&g, Exponent::TWO, domain).max(1e-300);
            let w = lame_solve(&g, &visc, domain, tol)?;
            let mut a = lame_estimate_ratio(&w, &g, domain, Exponent::TWO)?;
            let mut b = lame_estimate_ratio(&w, &g, domain, Exponent::FOUR)?;
            a.field_id = id;
            b.field_id = id;
            Ok(vec![(Inequality::Lame2, a), (Inequality::Lame4, b)])
        })
        .collect::<Result<Vec<_>>>()?;
    out.extend(lame.into_iter().flatten());
    Ok(out)
}

/// Unscaled ratios (prefactors dropped) for every fitted inequality.
fn unscaled_samples(domain: &ThinDomain<f64>, cfg: &SuiteConfig) -> Result<Vec<(Inequality, RatioSample<f64>)>> {
    let spec = TrigSpec::default();
    let per_field = (0..cfg.samples)
        .into_par_iter()
        .map(|i| -> Result<Vec<(Inequality, RatioSample<f64>)>> {
            let id = field_seed(cfg.seed, i);
            let mut rng = trig::rng(id);
            // keep the generator stream aligned with the channel samples
            let _ = trig::random_slip_vector(&mut rng, spec);
            let s = trig::random_scalar(&mut rng, spec).sample(domain);
            let eps = domain.epsilon;
            let mk = |(l, r): (f64, f64)| {
                let mut x = RatioSample::new(eps, id, l, r);
                x.field_id = id;
                x
            };
            Ok(vec![
                (Inequality::Poincare2, mk(poincare_parts(&s, Exponent::TWO, domain)?)),
                (Inequality::Poincare4, mk(poincare_parts(&s, Exponent::FOUR, domain)?)),
                (Inequality::Sobolev26, mk(sobolev_parts(&s, Exponent::TWO, Exponent::SIX, domain)?)),
                (Inequality::Sobolev24, mk(sobolev_parts(&s, Exponent::TWO, Exponent::FOUR, domain)?)),
                (Inequality::Linf4, mk(sobolev_parts(&s, Exponent::FOUR, Exponent::INF, domain)?)),
                (Inequality::GagliardoNirenberg, mk(gn_parts(&s, domain)?)),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_field.into_iter().flatten().collect())
}

/// Samples every inequality at every ε, checks the uniform bound relative to
/// the first (calibration) ε and fits the ε-exponents of the prefactors.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    if cfg.samples == 0 || cfg.n < 2 {
        return Err(Error::config("inequality suite needs samples >= 1 and n >= 2"));
    }
    let mut channel = Vec::new();
    let mut cube = Vec::new();
    let mut chan_unscaled = Vec::new();
    for &eps in &cfg.epsilons {
        let dom = build_channel(eps, cfg.n, cfg.n, 2 * cfg.n)?;
        channel.extend(channel_samples(&dom, cfg)?);
        chan_unscaled.extend(unscaled_samples(&dom, cfg)?);
        let cdom = build_scaled_cube(eps, cfg.n, cfg.n, cfg.n)?;
        cube.extend(unscaled_samples(&cdom, cfg)?);
    }
    let mut summaries = Vec::new();
    for ineq in Inequality::ALL {
        let of = |list: &[(Inequality, RatioSample<f64>)], eps: f64| -> f64 {
            list.iter()
                .filter(|(i, s)| *i == ineq && s.epsilon == eps && !s.degenerate)
                .map(|(_, s)| s.ratio)
                .fold(0.0, f64::max)
        };
        let max_ratio: Vec<f64> = cfg.epsilons.iter().map(|&e| of(&channel, e)).collect();
        let calibration_max = max_ratio[0];
        let bound = cfg.safety * calibration_max;
        let uniform_ok = max_ratio.iter().all(|&m| m <= bound && m.is_finite());
        let pick = |list: &[(Inequality, RatioSample<f64>)]| -> Vec<RatioSample<f64>> {
            list.iter().filter(|(i, _)| *i == ineq).map(|(_, s)| s.clone()).collect()
        };
        let predicted = ineq.predicted_exponent();
        let (fitted, channel_exponent) = if predicted.is_some() {
            (Some(fit_epsilon_exponent(&pick(&cube))?), Some(fit_epsilon_exponent(&pick(&chan_unscaled))?))
        } else {
            (None, None)
        };
        let fit_ok = fitted.zip(predicted).map(|(f, p)| (f - p).abs() <= cfg.fit_tolerance);
        summaries.push(InequalitySummary {
            inequality: ineq,
            calibration_max,
            bound,
            max_ratio,
            uniform_ok,
            fitted_exponent: fitted,
            predicted_exponent: predicted,
            fit_ok,
            channel_exponent,
        });
    }
    Ok(SuiteReport { samples: channel, summaries })
}
