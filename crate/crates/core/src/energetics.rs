//! Modulated energy of a perturbed solution relative to a reference one.
//!
//! For a pair `[ρ, u]` (reference) and `[ρ_λ, u_λ]` (perturbed) on the same
//! grid, with `σ = ρ_λ − ρ`, `w = u_λ − u` and `z = ∂_t w`, this module
//! evaluates the energy `E`, the dissipation `D`, `E* = E + ‖∇σ‖²_{L⁴}`, the
//! seven source integrals `I₁ … I₇` balancing `dE/dt + D`, and the discrete
//! residual of that balance along a sampled trajectory.
//!
//! Time derivatives come from the solver right-hand side, never from
//! differencing stored states. The only exception is `∂²_t u` of the
//! reference, taken as a central directional difference of the right-hand
//! side along the flow.

use crate::error::{Error, Result};
use crate::fieldcalc::{gradient, lp_norm, Exponent};
use crate::geometry::{GridFunction, ThinDomain};
use crate::physics::{stress_contraction, PressureLaw, Tensor3, Viscosity};
use crate::scalar::Real;
use crate::solver3d::{FluidState3D, Rates3D, Solver3D};

/// Reference and perturbed states at one instant with their rates.
#[derive(Debug, Clone)]
pub struct PairSnapshot<T> {
    pub reference: FluidState3D<T>,
    pub perturbed: FluidState3D<T>,
    pub reference_rates: Rates3D<T>,
    pub perturbed_rates: Rates3D<T>,
    /// `∂²_t u` of the reference; approximate, see [`second_time_derivative`].
    pub reference_d2u: Option<GridFunction<T>>,
}

impl<T: Real> PairSnapshot<T> {
    pub fn t(&self) -> T {
        self.reference.t
    }

    pub fn check(&self, domain: &ThinDomain<T>) -> Result<()> {
        self.reference.check_on(domain)?;
        self.perturbed.check_on(domain)?;
        if self.reference.t != self.perturbed.t {
            return Err(Error::config(format!(
                "pair times differ: {} vs {}",
                self.reference.t, self.perturbed.t
            )));
        }
        for r in [&self.reference_rates, &self.perturbed_rates] {
            r.drho.check_on(domain)?;
            r.du.check_on(domain)?;
            r.dm.check_on(domain)?;
        }
        if let Some(d2u) = &self.reference_d2u {
            d2u.check_on(domain)?;
        }
        Ok(())
    }
}

/// Step used for the directional difference giving `∂²_t u`.
pub const JVP_STEP: f64 = 1e-5;

/// `∂²_t u ≈ [F_u(q + τF(q)) − F_u(q − τF(q))] / 2τ` in conservative variables.
pub fn second_time_derivative<T: Real>(solver: &Solver3D<T>, state: &FluidState3D<T>, rates: &Rates3D<T>) -> Result<GridFunction<T>> {
    let tau = T::lit(JVP_STEP);
    let m = state.momentum();
    let shifted = |s: T| -> Result<FluidState3D<T>> {
        let rho = state.rho.zip_map(&rates.drho, |r, d| r + s * d)?;
        let mut u = m.zip_map(&rates.dm, |q, d| q + s * d)?;
        let n = rho.ncells();
        let r = rho.as_slice();
        u.as_mut_slice().iter_mut().enumerate().for_each(|(i, v)| *v = *v / r[i % n]);
        Ok(FluidState3D { rho, u, t: state.t + s })
    };
    let plus = solver.rhs(&shifted(tau)?)?;
    let minus = solver.rhs(&shifted(-tau)?)?;
    let inv = T::one() / (T::lit(2.0) * tau);
    plus.du.zip_map(&minus.du, |a, b| (a - b) * inv)
}

/// Builds a snapshot, evaluating both right-hand sides with `solver`.
pub fn snapshot<T: Real>(
    solver: &Solver3D<T>,
    reference: &FluidState3D<T>,
    perturbed: &FluidState3D<T>,
    with_second_derivative: bool,
) -> Result<PairSnapshot<T>> {
    let reference_rates = solver.rhs(reference)?;
    let perturbed_rates = solver.rhs(perturbed)?;
    let reference_d2u = if with_second_derivative {
        Some(second_time_derivative(solver, reference, &reference_rates)?)
    } else {
        None
    };
    Ok(PairSnapshot {
        reference: reference.clone(),
        perturbed: perturbed.clone(),
        reference_rates,
        perturbed_rates,
        reference_d2u,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport<T> {
    pub t: T,
    pub e: T,
    pub d_diss: T,
    pub estar: T,
    pub grad_sigma_l4: T,
    pub i: [T; 7],
    pub sigma_linf: T,
    pub w_linf: T,
}

impl<T: Real> EnergyReport<T> {
    pub fn source_sum(&self) -> T {
        self.i.iter().copied().sum()
    }
}

#[inline]
fn tensor_at<T: Real>(g: &GridFunction<T>, idx: usize) -> Tensor3<T> {
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

#[inline]
fn vec_at<T: Real>(g: &GridFunction<T>, idx: usize) -> [T; 3] {
    let n = g.ncells();
    let d = g.as_slice();
    [d[idx], d[n + idx], d[2 * n + idx]]
}

#[inline]
fn dot<T: Real>(a: [T; 3], b: [T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `(v·∇)f` for a tensor `g = ∇f`: component `a` is `Σ_b v_b ∂_b f_a`.
#[inline]
fn advect<T: Real>(g: &Tensor3<T>, v: [T; 3]) -> [T; 3] {
    [dot(g[0], v), dot(g[1], v), dot(g[2], v)]
}

/// Every field entering the functionals, derived once per snapshot.
struct PairFields<T> {
    sigma: GridFunction<T>,
    w: GridFunction<T>,
    z: GridFunction<T>,
    grad_w: GridFunction<T>,
    grad_z: GridFunction<T>,
}

fn pair_fields<T: Real>(pair: &PairSnapshot<T>, domain: &ThinDomain<T>) -> Result<PairFields<T>> {
    pair.check(domain)?;
    let sigma = pair.perturbed.rho.sub(&pair.reference.rho)?;
    let w = pair.perturbed.u.sub(&pair.reference.u)?;
    let z = pair.perturbed_rates.du.sub(&pair.reference_rates.du)?;
    let grad_w = gradient(&w, domain);
    let grad_z = gradient(&z, domain);
    Ok(PairFields { sigma, w, z, grad_w, grad_z })
}

fn energy_of<T: Real>(pair: &PairSnapshot<T>, f: &PairFields<T>, law: &PressureLaw<T>, visc: &Viscosity<T>, domain: &ThinDomain<T>) -> T {
    let eps2 = domain.epsilon * domain.epsilon;
    let eps4 = eps2 * eps2;
    let half = T::lit(0.5);
    let rl = pair.perturbed.rho.as_slice();
    let r = pair.reference.rho.as_slice();
    let sum: T = (0..domain.ncells())
        .map(|idx| {
            let w = vec_at(&f.w, idx);
            let z = vec_at(&f.z, idx);
            let sgw = stress_contraction(&tensor_at(&f.grad_w, idx), visc);
            half * (rl[idx] * dot(w, w) + eps4 * rl[idx] * dot(z, z) + eps2 * sgw) + law.relent(rl[idx], r[idx])
        })
        .sum();
    sum * domain.cell_volume()
}

fn dissipation_of<T: Real>(pair: &PairSnapshot<T>, f: &PairFields<T>, visc: &Viscosity<T>, domain: &ThinDomain<T>) -> T {
    let eps2 = domain.epsilon * domain.epsilon;
    let eps4 = eps2 * eps2;
    let rl = pair.perturbed.rho.as_slice();
    let sum: T = (0..domain.ncells())
        .map(|idx| {
            let z = vec_at(&f.z, idx);
            eps2 * rl[idx] * dot(z, z)
                + stress_contraction(&tensor_at(&f.grad_w, idx), visc)
                + eps4 * stress_contraction(&tensor_at(&f.grad_z, idx), visc)
        })
        .sum();
    sum * domain.cell_volume()
}

fn grad_sigma_l4_of<T: Real>(f: &PairFields<T>, domain: &ThinDomain<T>) -> T {
    lp_norm(&gradient(&f.sigma, domain), Exponent::FOUR, domain)
}

fn sources_of<T: Real>(pair: &PairSnapshot<T>, f: &PairFields<T>, law: &PressureLaw<T>, domain: &ThinDomain<T>) -> Result<[T; 7]> {
    let d2u = pair
        .reference_d2u
        .as_ref()
        .ok_or_else(|| Error::config("source integrals need the reference second time derivative"))?;
    let eps2 = domain.epsilon * domain.epsilon;
    let eps4 = eps2 * eps2;
    let refs = &pair.reference;
    let per = &pair.perturbed;
    let rr = &pair.reference_rates;
    let pr = &pair.perturbed_rates;
    let grad_u = gradient(&refs.u, domain);
    let grad_dtu = gradient(&rr.du, domain);
    let dh = refs.rho.map(|r| law.dh(r));
    let grad_dh = gradient(&dh, domain);
    let n = domain.ncells();
    let r = refs.rho.as_slice();
    let rl = per.rho.as_slice();
    let drho = rr.drho.as_slice();
    let drhol = pr.drho.as_slice();
    let sig = f.sigma.as_slice();
    let div_z = |idx: usize| {
        let g = f.grad_z.as_slice();
        g[idx] + g[4 * n + idx] + g[8 * n + idx]
    };
    let mut acc = [T::zero(); 7];
    for idx in 0..n {
        let u = vec_at(&refs.u, idx);
        let ul = vec_at(&per.u, idx);
        let w = vec_at(&f.w, idx);
        let z = vec_at(&f.z, idx);
        let gu = tensor_at(&grad_u, idx);
        let gw = tensor_at(&f.grad_w, idx);
        let gdtu = tensor_at(&grad_dtu, idx);
        let dtu = vec_at(&rr.du, idx);
        let dtul = vec_at(&pr.du, idx);
        let d2 = vec_at(d2u, idx);
        let ghp = vec_at(&grad_dh, idx);
        let s = sig[idx];
        let dm_diff = [0, 1, 2].map(|c| rl[idx] * ul[c] - r[idx] * u[c]);
        let dtm_diff = [0, 1, 2].map(|c| pr.dm.as_slice()[c * n + idx] - rr.dm.as_slice()[c * n + idx]);
        let dts = drhol[idx] - drho[idx];
        let m_grad_u = advect(&gu, dm_diff);
        let k = [0, 1, 2].map(|c| s * dtu[c] + m_grad_u[c]);
        let dk_a = advect(&gu, dtm_diff);
        let dk_b = advect(&gdtu, dm_diff);
        let dk = [0, 1, 2].map(|c| dts * dtu[c] + s * d2[c] + dk_a[c] + dk_b[c]);
        let div_u = gu[0][0] + gu[1][1] + gu[2][2];
        let ul_grad_w = advect(&gw, ul);
        let dtul_grad_w = advect(&gw, dtul);
        let dz = div_z(idx);
        let (p, pl) = (law.p(r[idx]), law.p(rl[idx]));

        let i1 = -(dot(w, [0, 1, 2].map(|c| k[c] + s * ghp[c])) + (pl - p - law.dp(r[idx]) * s) * div_u);
        let i2 = -eps2 * rl[idx] * dot(ul_grad_w, z);
        let i3 = -eps2 * dot(k, z);
        let i4 = eps2 * (pl - p) * dz;
        let i5 = eps4 * (law.dp(rl[idx]) * drhol[idx] - law.dp(r[idx]) * drho[idx]) * dz;
        let i6 = -eps4 * dot([0, 1, 2].map(|c| drhol[idx] * (z[c] + ul_grad_w[c]) + rl[idx] * dtul_grad_w[c]), z);
        let i7 = -eps4 * dot(dk, z);
        for (a, v) in acc.iter_mut().zip([i1, i2, i3, i4, i5, i6, i7]) {
            *a = *a + v;
        }
    }
    let dv = domain.cell_volume();
    Ok(acc.map(|a| a * dv))
}

pub fn modulated_energy<T: Real>(pair: &PairSnapshot<T>, law: &PressureLaw<T>, visc: &Viscosity<T>, domain: &ThinDomain<T>) -> Result<T> {
    let f = pair_fields(pair, domain)?;
    Ok(energy_of(pair, &f, law, visc, domain))
}

pub fn dissipation<T: Real>(pair: &PairSnapshot<T>, visc: &Viscosity<T>, domain: &ThinDomain<T>) -> Result<T> {
    let f = pair_fields(pair, domain)?;
    Ok(dissipation_of(pair, &f, visc, domain))
}

pub fn estar<T: Real>(pair: &PairSnapshot<T>, law: &PressureLaw<T>, visc: &Viscosity<T>, domain: &ThinDomain<T>) -> Result<T> {
    let f = pair_fields(pair, domain)?;
    let g = grad_sigma_l4_of(&f, domain);
    Ok(energy_of(pair, &f, law, visc, domain) + g * g)
}

pub fn source_integrals<T: Real>(pair: &PairSnapshot<T>, law: &PressureLaw<T>, _visc: &Viscosity<T>, domain: &ThinDomain<T>) -> Result<[T; 7]> {
    let f = pair_fields(pair, domain)?;
    sources_of(pair, &f, law, domain)
}

/// All functionals of one snapshot. Source integrals are zero when the
/// snapshot carries no second time derivative and `require_sources` is false.
pub fn energy_report<T: Real>(
    pair: &PairSnapshot<T>,
    law: &PressureLaw<T>,
    visc: &Viscosity<T>,
    domain: &ThinDomain<T>,
    require_sources: bool,
) -> Result<EnergyReport<T>> {
    let f = pair_fields(pair, domain)?;
    let e = energy_of(pair, &f, law, visc, domain);
    let g = grad_sigma_l4_of(&f, domain);
    let i = if require_sources || pair.reference_d2u.is_some() {
        sources_of(pair, &f, law, domain)?
    } else {
        [T::zero(); 7]
    };
    Ok(EnergyReport {
        t: pair.t(),
        e,
        d_diss: dissipation_of(pair, &f, visc, domain),
        estar: e + g * g,
        grad_sigma_l4: g,
        i,
        sigma_linf: f.sigma.max_abs(),
        w_linf: f.w.magnitude().max_abs(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityResidual<T> {
    pub residuals: Vec<T>,
    pub max_abs: T,
}

/// `[E_{n+1} − E_n]/Δt + (D_n + D_{n+1})/2 − (ΣI_n + ΣI_{n+1})/2` per interval.
pub fn identity_residual_from_reports<T: Real>(reports: &[EnergyReport<T>]) -> Result<IdentityResidual<T>> {
    if reports.len() < 2 {
        return Err(Error::config("identity residual needs at least two snapshots"));
    }
    let dt = reports[1].t - reports[0].t;
    if !(dt > T::zero()) {
        return Err(Error::config("snapshot times must increase"));
    }
    for w in reports.windows(2) {
        let step = w[1].t - w[0].t;
        if (step - dt).abs() > T::lit(1e-9) * dt.abs().max(T::one()) {
            return Err(Error::config(format!("non-uniform sampling: {step} vs {dt}")));
        }
    }
    let half = T::lit(0.5);
    let residuals: Vec<T> = reports
        .windows(2)
        .map(|w| {
            (w[1].e - w[0].e) / dt + half * (w[0].d_diss + w[1].d_diss) - half * (w[0].source_sum() + w[1].source_sum())
        })
        .collect();
    let max_abs = residuals.iter().fold(T::zero(), |m, r| m.max(r.abs()));
    Ok(IdentityResidual { residuals, max_abs })
}

pub fn identity_residual<T: Real>(
    trajectory: &[PairSnapshot<T>],
    law: &PressureLaw<T>,
    visc: &Viscosity<T>,
    domain: &ThinDomain<T>,
) -> Result<IdentityResidual<T>> {
    if trajectory.len() < 2 {
        return Err(Error::config("identity residual needs at least two snapshots"));
    }
    let reports = trajectory
        .iter()
        .map(|p| energy_report(p, law, visc, domain, true))
        .collect::<Result<Vec<_>>>()?;
    identity_residual_from_reports(&reports)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallnessFlags<T> {
    pub sigma_linf: T,
    pub w_linf: T,
    pub density_ok: bool,
    pub velocity_ok: bool,
}

impl<T: Real> SmallnessFlags<T> {
    pub fn ok(&self) -> bool {
        self.density_ok && self.velocity_ok
    }
}

/// `‖σ‖_∞ ≤ c₁/2` and `‖w‖_∞ ≤ 1`, with `c₁` the reference density infimum.
pub fn smallness_from_norms<T: Real>(sigma_linf: T, w_linf: T, c1: T) -> SmallnessFlags<T> {
    SmallnessFlags {
        sigma_linf,
        w_linf,
        density_ok: sigma_linf <= T::lit(0.5) * c1,
        velocity_ok: w_linf <= T::one(),
    }
}

pub fn smallness_check<T: Real>(pair: &PairSnapshot<T>, domain: &ThinDomain<T>, c1: T) -> Result<SmallnessFlags<T>> {
    pair.check(domain)?;
    let sigma = pair.perturbed.rho.sub(&pair.reference.rho)?;
    let w = pair.perturbed.u.sub(&pair.reference.u)?;
    Ok(smallness_from_norms(sigma.max_abs(), w.magnitude().max_abs(), c1))
}

/// Range of `relent(ρ, r)/(ρ − r)²` over pairs in `[lo, hi]²`, by a scan of
/// `n × n` points.
pub fn quadratic_equivalence_bounds<T: Real>(law: &PressureLaw<T>, lo: T, hi: T, n: usize) -> Result<(T, T)> {
    if !(lo > T::zero() && hi >= lo) || n < 2 {
        return Err(Error::config("need 0 < lo <= hi and n >= 2"));
    }
    let at = |k: usize| lo + (hi - lo) * T::from_usize_lossy(k) / T::from_usize_lossy(n - 1);
    let (mut cmin, mut cmax) = (T::infinity(), T::zero());
    // the quotient tends to H''(r)/2 on the diagonal
    for a in 0..n {
        let r = at(a);
        let diag = T::lit(0.5) * law.a * law.gamma * r.powf(law.gamma - T::lit(2.0));
        cmin = cmin.min(diag);
        cmax = cmax.max(diag);
        for b in 0..n {
            let rho = at(b);
            let d = rho - r;
            if d.abs() <= T::lit(1e-6) * r {
                continue;
            }
            let q = law.relent(rho, r) / (d * d);
            cmin = cmin.min(q);
            cmax = cmax.max(q);
        }
    }
    Ok((cmin, cmax))
}

/// `∫ relent / ∫ σ²`, or `None` for identical densities.
pub fn relent_quotient<T: Real>(pair: &PairSnapshot<T>, law: &PressureLaw<T>, domain: &ThinDomain<T>) -> Result<Option<T>> {
    pair.check(domain)?;
    let r = pair.reference.rho.as_slice();
    let rl = pair.perturbed.rho.as_slice();
    let (mut num, mut den) = (T::zero(), T::zero());
    for (&a, &b) in rl.iter().zip(r) {
        num = num + law.relent(a, b);
        den = den + (a - b) * (a - b);
    }
    Ok(if den > T::zero() { Some(num / den) } else { None })
}

/// Sup norms of the reference derivatives that enter the stability constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceBounds<T> {
    pub grad_u: T,
    pub grad_rho: T,
    pub dt_u: T,
    pub dt_rho: T,
    /// From the approximate second time derivative.
    pub dtt_u: T,
}

impl<T: Real> ReferenceBounds<T> {
    pub fn zero() -> Self {
        Self { grad_u: T::zero(), grad_rho: T::zero(), dt_u: T::zero(), dt_rho: T::zero(), dtt_u: T::zero() }
    }

    pub fn max(self, o: Self) -> Self {
        Self {
            grad_u: self.grad_u.max(o.grad_u),
            grad_rho: self.grad_rho.max(o.grad_rho),
            dt_u: self.dt_u.max(o.dt_u),
            dt_rho: self.dt_rho.max(o.dt_rho),
            dtt_u: self.dtt_u.max(o.dtt_u),
        }
    }

    pub fn total(&self) -> T {
        self.grad_u + self.grad_rho + self.dt_u + self.dt_rho + self.dtt_u
    }
}

pub fn reference_bounds<T: Real>(pair: &PairSnapshot<T>, domain: &ThinDomain<T>) -> ReferenceBounds<T> {
    let sup = |g: &GridFunction<T>| lp_norm(g, Exponent::INF, domain);
    ReferenceBounds {
        grad_u: sup(&gradient(&pair.reference.u, domain)),
        grad_rho: sup(&gradient(&pair.reference.rho, domain)),
        dt_u: sup(&pair.reference_rates.du),
        dt_rho: sup(&pair.reference_rates.drho),
        dtt_u: pair.reference_d2u.as_ref().map(sup).unwrap_or(T::zero()),
    }
}
