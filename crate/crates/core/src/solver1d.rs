//! Solver for the one-dimensional limit system on `(0, 1)` with no-slip ends.
//!
//! The discretisation is the axial part of the 3D scheme, so a lifted
//! profile evolves identically in both solvers up to rounding.

use crate::error::{Error, Result};
use crate::physics::{PressureLaw, Viscosity};
use crate::scalar::Real;
use crate::solver3d::{fixed_steps, Scheme};

#[derive(Debug, Clone, PartialEq)]
pub struct Profile1D<T> {
    pub rho: Vec<T>,
    pub u: Vec<T>,
    pub t: T,
}

impl<T: Real> Profile1D<T> {
    pub fn new(rho: Vec<T>, u: Vec<T>, t: T) -> Result<Self> {
        if rho.len() != u.len() || rho.len() < 2 {
            return Err(Error::config(format!("profile lengths {} / {} invalid", rho.len(), u.len())));
        }
        Ok(Self { rho, u, t })
    }

    pub fn uniform(nz: usize, rho: T) -> Self {
        Self { rho: vec![rho; nz], u: vec![T::zero(); nz], t: T::zero() }
    }

    /// Point values at the cell centres `(k + ½)/nz`.
    pub fn sample(data: &impl InitialData1D<T>, nz: usize) -> Self {
        let h = T::one() / T::from_usize_lossy(nz);
        let y = |k: usize| (T::from_usize_lossy(k) + T::lit(0.5)) * h;
        Self { rho: (0..nz).map(|k| data.rho(y(k))).collect(), u: (0..nz).map(|k| data.u(y(k))).collect(), t: T::zero() }
    }

    pub fn nz(&self) -> usize {
        self.rho.len()
    }

    pub fn h(&self) -> T {
        T::one() / T::from_usize_lossy(self.nz())
    }

    pub fn mass(&self) -> T {
        self.rho.iter().copied().sum::<T>() * self.h()
    }

    pub fn momentum(&self) -> Vec<T> {
        self.rho.iter().zip(&self.u).map(|(&r, &v)| r * v).collect()
    }

    /// Cell averages onto a grid coarser by an integer factor.
    pub fn coarsen(&self, nz: usize) -> Result<Self> {
        Ok(Self {
            rho: crate::fieldcalc::coarsen_profile(&self.rho, nz)?,
            u: crate::fieldcalc::coarsen_profile(&self.u, nz)?,
            t: self.t,
        })
    }
}

/// Initial data given as functions of the axial coordinate.
pub trait InitialData1D<T> {
    fn rho(&self, y: T) -> T;
    fn u(&self, y: T) -> T;
}

/// `ρ₀ = ρ̄ + b cos(πy)`, `u₀ = s sin(πy)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalData<T> {
    pub rho_bar: T,
    pub b: T,
    pub s: T,
}

impl<T: Real> InitialData1D<T> for CanonicalData<T> {
    fn rho(&self, y: T) -> T {
        self.rho_bar + self.b * (T::PI() * y).cos()
    }
    fn u(&self, y: T) -> T {
        self.s * (T::PI() * y).sin()
    }
}

/// Initial data from a pair of closures.
pub struct FnData<F, G>(pub F, pub G);

impl<T, F: Fn(T) -> T, G: Fn(T) -> T> InitialData1D<T> for FnData<F, G> {
    fn rho(&self, y: T) -> T {
        (self.0)(y)
    }
    fn u(&self, y: T) -> T {
        (self.1)(y)
    }
}

/// Endpoint defects of the compatibility conditions at one end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndDefects<T> {
    pub u: T,
    pub drho: T,
    pub d2u: T,
}

/// Evaluates `u`, `∂ρ`, `∂²u` at `y = 0` and `y = 1` with one-sided
/// stencils of step `1e-3` that only sample the closed interval.
pub fn compatibility_defects<T: Real>(data: &impl InitialData1D<T>) -> [EndDefects<T>; 2] {
    let delta = T::lit(1e-3);
    let c1 = [-25.0, 48.0, -36.0, 16.0, -3.0];
    let c2 = [45.0, -154.0, 214.0, -156.0, 61.0, -10.0];
    let end = |y0: T, dir: T| {
        let at = |k: usize| y0 + dir * delta * T::from_usize_lossy(k);
        let drho = c1.iter().enumerate().map(|(k, &c)| T::lit(c) * data.rho(at(k))).sum::<T>() / (T::lit(12.0) * delta) * dir;
        let d2u = c2.iter().enumerate().map(|(k, &c)| T::lit(c) * data.u(at(k))).sum::<T>() / (T::lit(12.0) * delta * delta);
        EndDefects { u: data.u(y0), drho, d2u }
    };
    [end(T::zero(), T::one()), end(T::one(), -T::one())]
}

/// Rejects data violating `u = ∂²u = ∂ρ = 0` at the ends or `ρ > 0`.
pub fn check_compatibility<T: Real>(data: &impl InitialData1D<T>) -> Result<()> {
    let tol = T::lit(1e-8).max(T::lit(1e4) * T::epsilon());
    let mut problems = Vec::new();
    for (name, d) in ["y = 0", "y = 1"].iter().zip(compatibility_defects(data)) {
        if !(d.u.abs() <= tol) {
            problems.push(format!("u = {} at {name}", d.u));
        }
        if !(d.drho.abs() <= tol) {
            problems.push(format!("d rho/dy = {} at {name}", d.drho));
        }
        if !(d.d2u.abs() <= tol) {
            problems.push(format!("d2 u/dy2 = {} at {name}", d.d2u));
        }
    }
    for k in 0..=64 {
        let y = T::from_usize_lossy(k) / T::lit(64.0);
        let r = data.rho(y);
        if !(r > T::zero()) {
            problems.push(format!("rho = {r} at y = {y}"));
            break;
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::config(format!("incompatible 1D initial data: {}", problems.join("; "))))
    }
}

#[derive(Debug, Clone)]
pub struct Rates1D<T> {
    pub drho: Vec<T>,
    pub dm: Vec<T>,
    pub du: Vec<T>,
}

/// Volumetric sources `(S_ρ, S_m)` at a given time, for manufactured runs.
pub type Forcing1D<'a, T> = &'a dyn Fn(T) -> Result<(Vec<T>, Vec<T>)>;

#[derive(Debug, Clone)]
pub struct Trajectory1D<T> {
    pub profiles: Vec<Profile1D<T>>,
    pub dt: T,
    pub steps_per_sample: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct Solver1D<T> {
    pub law: PressureLaw<T>,
    pub visc: Viscosity<T>,
    pub scheme: Scheme<T>,
}

impl<T: Real> Solver1D<T> {
    pub fn new(law: PressureLaw<T>, visc: Viscosity<T>) -> Self {
        Self { law, visc, scheme: Scheme::default() }
    }

    pub fn with_scheme(mut self, scheme: Scheme<T>) -> Self {
        self.scheme = scheme;
        self
    }

    fn check(&self, p: &Profile1D<T>) -> Result<()> {
        let t = p.t.to_f64_lossy();
        let mut min = T::infinity();
        for &r in &p.rho {
            if !r.is_finite() {
                return Err(Error::BlowUp { t, reason: "non-finite density".into() });
            }
            min = min.min(r);
        }
        if min <= self.scheme.density_floor {
            return Err(Error::BlowUp { t, reason: format!("density {min} below floor {}", self.scheme.density_floor) });
        }
        if p.u.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { t, reason: "non-finite velocity".into() });
        }
        Ok(())
    }

    pub fn wave_speed(&self, p: &Profile1D<T>) -> T {
        p.rho.iter().zip(&p.u).fold(T::zero(), |m, (&r, &v)| m.max(v.abs() + self.law.sound_speed(r)))
    }

    pub fn rhs(&self, p: &Profile1D<T>) -> Result<Rates1D<T>> {
        self.rhs_forced(p, None)
    }

    pub fn rhs_forced(&self, p: &Profile1D<T>, forcing: Option<Forcing1D<'_, T>>) -> Result<Rates1D<T>> {
        self.check(p)?;
        let nz = p.nz();
        let h = p.h();
        // two ghosts each side: ρ even, u odd
        let pad = |v: &[T], sign: T| -> Vec<T> {
            let mut out = Vec::with_capacity(nz + 4);
            out.push(sign * v[1]);
            out.push(sign * v[0]);
            out.extend_from_slice(v);
            out.push(sign * v[nz - 1]);
            out.push(sign * v[nz - 2]);
            out
        };
        let rho = pad(&p.rho, T::one());
        let u = pad(&p.u, -T::one());
        let m: Vec<T> = rho.iter().zip(&u).map(|(&r, &v)| r * v).collect();
        let pr: Vec<T> = rho.iter().map(|&r| self.law.p(r)).collect();
        let inv2h = T::lit(0.5) / h;
        let invh2 = T::one() / (h * h);
        let nu = self.visc.nu();
        let kh = self.scheme.dissipation * self.wave_speed(p) / h;
        let (two, four, six) = (T::lit(2.0), T::lit(4.0), T::lit(6.0));
        let d4 = |f: &[T], o: usize| f[o + 2] - four * f[o + 1] + six * f[o] - four * f[o - 1] + f[o - 2];
        let mut drho = Vec::with_capacity(nz);
        let mut dm = Vec::with_capacity(nz);
        for k in 0..nz {
            let o = k + 2;
            drho.push(-(m[o + 1] - m[o - 1]) * inv2h - kh * d4(&rho, o));
            let conv = (m[o + 1] * u[o + 1] - m[o - 1] * u[o - 1]) * inv2h;
            let grad_p = (pr[o + 1] - pr[o - 1]) * inv2h;
            let visc = nu * (u[o + 1] - two * u[o] + u[o - 1]) * invh2;
            dm.push(-conv - grad_p + visc - kh * d4(&m, o));
        }
        if let Some(source) = forcing {
            let (sr, sm) = source(p.t)?;
            if sr.len() != nz || sm.len() != nz {
                return Err(Error::config("forcing length mismatch"));
            }
            drho.iter_mut().zip(&sr).for_each(|(a, &b)| *a = *a + b);
            dm.iter_mut().zip(&sm).for_each(|(a, &b)| *a = *a + b);
        }
        let du = (0..nz).map(|k| (dm[k] - p.u[k] * drho[k]) / p.rho[k]).collect();
        Ok(Rates1D { drho, dm, du })
    }

    pub fn stable_dt(&self, p: &Profile1D<T>, cfl: T) -> Result<T> {
        if !(cfl > T::zero() && cfl <= T::one()) {
            return Err(Error::config(format!("cfl must lie in (0, 1], got {cfl}")));
        }
        self.check(p)?;
        let h = p.h();
        let coef = T::lit(2.0) * (T::lit(2.0) * self.visc.mu + self.visc.eta);
        let mut dt = T::infinity();
        for (&r, &v) in p.rho.iter().zip(&p.u) {
            dt = dt.min(h / (v.abs() + self.law.sound_speed(r)));
            if coef > T::zero() {
                dt = dt.min(r * h * h / coef);
            }
        }
        Ok(cfl * dt)
    }

    pub fn step(&self, p: &Profile1D<T>, dt: T) -> Result<Profile1D<T>> {
        self.step_forced(p, dt, None)
    }

    pub fn step_forced(&self, p: &Profile1D<T>, dt: T, forcing: Option<Forcing1D<'_, T>>) -> Result<Profile1D<T>> {
        let half = T::lit(0.5) * dt;
        let m0 = p.momentum();
        let k1 = self.rhs_forced(p, forcing)?;
        let mid = self.advance(p, &m0, &k1, half, p.t + half)?;
        let k2 = self.rhs_forced(&mid, forcing)?;
        self.advance(p, &m0, &k2, dt, p.t + dt)
    }

    fn advance(&self, base: &Profile1D<T>, m0: &[T], k: &Rates1D<T>, dt: T, t: T) -> Result<Profile1D<T>> {
        let rho: Vec<T> = base.rho.iter().zip(&k.drho).map(|(&r, &d)| r + dt * d).collect();
        let u = m0.iter().zip(&k.dm).zip(&rho).map(|((&q, &d), &r)| (q + dt * d) / r).collect();
        let next = Profile1D { rho, u, t };
        self.check(&next)?;
        Ok(next)
    }

    /// Evolves to `t_end`, recording `samples + 1` equally spaced profiles.
    /// Each sample interval is split into equal steps no larger than the
    /// stable step of the initial profile.
    pub fn evolve(&self, initial: &Profile1D<T>, t_end: T, samples: usize, cfl: T) -> Result<Trajectory1D<T>> {
        self.evolve_forced(initial, t_end, samples, cfl, None)
    }

    pub fn evolve_forced(
        &self,
        initial: &Profile1D<T>,
        t_end: T,
        samples: usize,
        cfl: T,
        forcing: Option<Forcing1D<'_, T>>,
    ) -> Result<Trajectory1D<T>> {
        let samples = samples.max(1);
        let interval = t_end / T::from_usize_lossy(samples);
        let (dt, per) = fixed_steps(self.stable_dt(initial, cfl)?, interval)?;
        let mut profiles = vec![initial.clone()];
        let mut p = initial.clone();
        for s in 1..=samples {
            for _ in 0..per {
                p = self.step_forced(&p, dt, forcing)?;
            }
            // pin the clock to the sample grid to avoid drift in the sum of steps
            p.t = initial.t + interval * T::from_usize_lossy(s);
            profiles.push(p.clone());
        }
        Ok(Trajectory1D { profiles, dt, steps_per_sample: per })
    }
}

/// Right-hand side of the limit system in primitive variables.
pub fn rhs1d<T: Real>(p: &Profile1D<T>, law: &PressureLaw<T>, visc: &Viscosity<T>) -> Result<(Vec<T>, Vec<T>)> {
    let r = Solver1D::new(*law, *visc).rhs(p)?;
    Ok((r.drho, r.du))
}

/// Checks compatibility, samples the data on `nz` cells and evolves to `t_end`.
pub fn solve1d<T: Real>(
    data: &impl InitialData1D<T>,
    t_end: T,
    law: &PressureLaw<T>,
    visc: &Viscosity<T>,
    nz: usize,
    cfl: T,
    samples: usize,
) -> Result<Trajectory1D<T>> {
    if nz < 4 {
        return Err(Error::config(format!("nz must be >= 4, got {nz}")));
    }
    check_compatibility(data)?;
    Solver1D::new(*law, *visc).evolve(&Profile1D::sample(data, nz), t_end, samples, cfl)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canonical() -> CanonicalData<f64> {
        CanonicalData { rho_bar: 1.0, b: 0.1, s: 0.1 }
    }

    #[test]
    fn equilibrium_is_fixed() {
        let s = Solver1D::<f64>::new(PressureLaw::default(), Viscosity::default());
        let p = Profile1D::uniform(32, 1.0);
        let r = s.rhs(&p).unwrap();
        assert!(r.drho.iter().chain(&r.du).all(|v| v.abs() <= 1e-14));
        let traj = s.evolve(&p, 0.2, 4, 0.4).unwrap();
        for q in &traj.profiles {
            assert!(q.rho.iter().all(|&v| (v - 1.0).abs() <= 1e-14));
            assert!(q.u.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn viscosity_enters_as_nu() {
        // with a uniform density only the viscous term acts on a linear-free profile
        let visc = Viscosity::new(3.0_f64, 1.0).unwrap();
        assert_eq!(visc.nu(), 5.0);
        let mut s = Solver1D::new(PressureLaw::default(), visc);
        s.scheme.dissipation = 0.0;
        let nz = 16;
        let p = Profile1D::new(vec![1.0; nz], (0..nz).map(|k| ((k * 7 % 5) as f64) * 0.01).collect(), 0.0).unwrap();
        let r = s.rhs(&p).unwrap();
        let h = 1.0 / nz as f64;
        let k = 7;
        let conv = (p.u[k + 1].powi(2) - p.u[k - 1].powi(2)) / (2.0 * h);
        let lap = 5.0 * (p.u[k + 1] - 2.0 * p.u[k] + p.u[k - 1]) / (h * h);
        let expect_dm = -conv + lap;
        let drho = -(p.u[k + 1] - p.u[k - 1]) / (2.0 * h);
        assert!((r.dm[k] - expect_dm).abs() < 1e-12);
        assert!((r.du[k] - (expect_dm - p.u[k] * drho)).abs() < 1e-12);
    }

    #[test]
    fn canonical_data_is_compatible() {
        check_compatibility(&canonical()).unwrap();
        check_compatibility(&CanonicalData { rho_bar: 2.0, b: -0.5, s: 1.0 }).unwrap();
    }

    #[test]
    fn parabola_violates_compatibility() {
        let data = FnData(|_y: f64| 1.0, |y: f64| y * (1.0 - y));
        let err = check_compatibility(&data).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(err.to_string().contains("d2 u"));
        let tilted = FnData(|y: f64| 1.0 + 0.1 * y, |y: f64| (std::f64::consts::PI * y).sin());
        assert!(check_compatibility(&tilted).is_err());
        let negative = FnData(|y: f64| y - 0.5, |_y: f64| 0.0);
        assert!(check_compatibility(&negative).is_err());
    }

    #[test]
    fn canonical_run_conserves_mass_and_decays() {
        let law = PressureLaw::<f64>::default();
        let visc = Viscosity::default();
        let traj = solve1d(&canonical(), 0.5, &law, &visc, 128, 0.4, 10).unwrap();
        let m0 = traj.profiles[0].mass();
        assert!((m0 - 1.0).abs() < 1e-11);
        for p in &traj.profiles {
            assert!(((p.mass() - m0) / m0).abs() <= 1e-11);
        }
        let last = traj.profiles.last().unwrap();
        assert!((last.t - 0.5).abs() < 1e-15);
        let amp = |p: &Profile1D<f64>| p.u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!(amp(last) < amp(&traj.profiles[0]));
    }

    #[test]
    fn self_convergence_is_second_order() {
        let law = PressureLaw::<f64>::default();
        let visc = Viscosity::default();
        let run = |nz| solve1d(&canonical(), 0.1, &law, &visc, nz, 0.4, 1).unwrap().profiles.pop().unwrap();
        let fine = run(256);
        let err = |nz: usize| {
            let c = fine.coarsen(nz).unwrap();
            let p = run(nz);
            let e: f64 = p.rho.iter().zip(&c.rho).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
                + p.u.iter().zip(&c.u).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            (e / nz as f64).sqrt()
        };
        let (e32, e64) = (err(32), err(64));
        assert!(e32 / e64 >= 3.6, "{e32} {e64}");
    }

    #[test]
    fn rejects_small_grids_and_nonpositive_density() {
        let law = PressureLaw::<f64>::default();
        let visc = Viscosity::default();
        assert!(solve1d(&canonical(), 0.1, &law, &visc, 2, 0.4, 1).is_err());
        let s = Solver1D::new(law, visc);
        let mut p = Profile1D::uniform(8, 1.0);
        p.rho[3] = -1.0;
        assert!(matches!(s.rhs(&p), Err(Error::BlowUp { .. })));
    }
}
