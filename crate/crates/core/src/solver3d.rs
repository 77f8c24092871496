//! Explicit solver for the barotropic compressible Navier-Stokes system on a
//! slip-walled box.
//!
//! Collocated cell-centred unknowns, two ghost layers, central second-order
//! fluxes, a fourth-difference dissipation scaled by the global wave speed,
//! and a two-stage midpoint Runge-Kutta step in the conservative variables
//! `(ρ, ρu)`.

use crate::error::{Error, Result};
use crate::geometry::{GridFunction, ThinDomain};
use crate::physics::{PressureLaw, Viscosity};
use crate::scalar::Real;

pub const GHOST: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct FluidState3D<T> {
    pub rho: GridFunction<T>,
    pub u: GridFunction<T>,
    pub t: T,
}

impl<T: Real> FluidState3D<T> {
    pub fn new(rho: GridFunction<T>, u: GridFunction<T>, t: T) -> Result<Self> {
        if rho.ncomp() != 1 || u.ncomp() != 3 || rho.dims() != u.dims() {
            return Err(Error::config("state needs a scalar density and a 3-vector velocity on one grid"));
        }
        Ok(Self { rho, u, t })
    }

    pub fn uniform(domain: &ThinDomain<T>, rho: T, u: [T; 3]) -> Self {
        let mut vel = GridFunction::zeros(domain.dims(), 3);
        for (c, &v) in u.iter().enumerate() {
            vel.component_mut(c).iter_mut().for_each(|x| *x = v);
        }
        Self { rho: GridFunction::constant(domain.dims(), 1, rho), u: vel, t: T::zero() }
    }

    pub fn check_on(&self, domain: &ThinDomain<T>) -> Result<()> {
        self.rho.check_on(domain)?;
        self.u.check_on(domain)
    }

    pub fn momentum(&self) -> GridFunction<T> {
        let mut m = self.u.clone();
        let rho = self.rho.as_slice();
        let n = rho.len();
        for (idx, v) in m.as_mut_slice().iter_mut().enumerate() {
            *v = *v * rho[idx % n];
        }
        m
    }

    pub fn mass(&self, domain: &ThinDomain<T>) -> T {
        self.rho.as_slice().iter().copied().sum::<T>() * domain.cell_volume()
    }

    /// `∫ ½ρ|u|² + H(ρ)`.
    pub fn energy(&self, law: &PressureLaw<T>, domain: &ThinDomain<T>) -> T {
        let n = self.rho.ncells();
        let half = T::lit(0.5);
        let u = self.u.as_slice();
        let sum: T = self
            .rho
            .as_slice()
            .iter()
            .enumerate()
            .map(|(idx, &r)| {
                let q = u[idx] * u[idx] + u[n + idx] * u[n + idx] + u[2 * n + idx] * u[2 * n + idx];
                half * r * q + law.h(r)
            })
            .sum();
        sum * domain.cell_volume()
    }

    pub fn max_speed(&self) -> T {
        self.u.magnitude().max_abs()
    }
}

/// Numerical parameters of the scheme that are not physics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scheme<T> {
    /// Coefficient of the fourth-difference dissipation.
    pub dissipation: T,
    /// Densities at or below this value abort the run.
    pub density_floor: T,
}

impl<T: Real> Default for Scheme<T> {
    fn default() -> Self {
        Self { dissipation: T::lit(0.01), density_floor: T::lit(1e-8) }
    }
}

/// A field padded with `GHOST` layers on every side.
#[derive(Debug, Clone)]
pub struct Padded<T> {
    pub n: [usize; 3],
    pub stride: [usize; 3],
    pub data: Vec<T>,
}

impl<T: Real> Padded<T> {
    fn zeros(n: [usize; 3]) -> Self {
        let px = n[0] + 2 * GHOST;
        let py = n[1] + 2 * GHOST;
        let pz = n[2] + 2 * GHOST;
        Self { n, stride: [1, px, px * py], data: vec![T::zero(); px * py * pz] }
    }

    /// Offset of interior cell `(i, j, k)`.
    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> usize {
        (i + GHOST) * self.stride[0] + (j + GHOST) * self.stride[1] + (k + GHOST) * self.stride[2]
    }

    /// Offset of a possibly ghost cell, indices shifted by `GHOST`.
    #[inline]
    fn at_shifted(&self, i: usize, j: usize, k: usize) -> usize {
        i * self.stride[0] + j * self.stride[1] + k * self.stride[2]
    }

    /// Copies the interior and reflects into the ghosts; `odd[d]` flips the
    /// sign across the walls normal to direction `d`.
    pub fn reflect(values: &[T], n: [usize; 3], odd: [bool; 3]) -> Self {
        let mut p = Self::zeros(n);
        for k in 0..n[2] {
            for j in 0..n[1] {
                let row = (k * n[1] + j) * n[0];
                let o = p.at(0, j, k);
                p.data[o..o + n[0]].copy_from_slice(&values[row..row + n[0]]);
            }
        }
        // x first over interior rows, then y over full rows, then z over full
        // planes, so edge and corner ghosts inherit both reflections
        let ext = [n[0] + 2 * GHOST, n[1] + 2 * GHOST, n[2] + 2 * GHOST];
        for d in 0..3 {
            let sign = if odd[d] { -T::one() } else { T::one() };
            let (a, b) = match d {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            // directions already reflected span the padded extent
            let range = |e: usize| if e < d { 0..ext[e] } else { GHOST..GHOST + n[e] };
            for ia in range(a) {
                for ib in range(b) {
                    for g in 0..GHOST {
                        let lo_ghost = GHOST - 1 - g;
                        let lo_src = GHOST + g;
                        let hi_ghost = GHOST + n[d] + g;
                        let hi_src = GHOST + n[d] - 1 - g;
                        let pos = |s: usize| -> usize {
                            let mut c = [0usize; 3];
                            c[d] = s;
                            c[a] = ia;
                            c[b] = ib;
                            p.at_shifted(c[0], c[1], c[2])
                        };
                        // for n = 1 sources would alias, but n >= 2 is enforced by the domain
                        let (lg, ls, hg, hs) = (pos(lo_ghost), pos(lo_src), pos(hi_ghost), pos(hi_src));
                        p.data[lg] = sign * p.data[ls];
                        p.data[hg] = sign * p.data[hs];
                    }
                }
            }
        }
        p
    }
}

/// State with ghost layers filled according to the slip conditions.
#[derive(Debug, Clone)]
pub struct GhostedState<T> {
    pub rho: Padded<T>,
    pub u: [Padded<T>; 3],
}

impl<T: Real> GhostedState<T> {
    /// Largest face-interpolated normal velocity over the six walls.
    pub fn normal_trace_residual(&self) -> T {
        let n = self.rho.n;
        let mut worst = T::zero();
        for d in 0..3 {
            let f = &self.u[d];
            let s = f.stride[d];
            for_each_face_cell(n, d, |lo, hi| {
                let (lo, hi) = (f.at(lo[0], lo[1], lo[2]), f.at(hi[0], hi[1], hi[2]));
                let a = (f.data[lo] + f.data[lo - s]) * T::lit(0.5);
                let b = (f.data[hi] + f.data[hi + s]) * T::lit(0.5);
                worst = worst.max(a.abs()).max(b.abs());
            });
        }
        worst
    }

    /// Largest mismatch between ghost and mirrored interior values of the
    /// even components (tangential velocity and density).
    pub fn tangential_residual(&self) -> T {
        let n = self.rho.n;
        let mut worst = T::zero();
        for d in 0..3 {
            let fields: Vec<&Padded<T>> =
                std::iter::once(&self.rho).chain((0..3).filter(|&c| c != d).map(|c| &self.u[c])).collect();
            for f in fields {
                let s = f.stride[d];
                for_each_face_cell(n, d, |lo, hi| {
                    let (lo, hi) = (f.at(lo[0], lo[1], lo[2]), f.at(hi[0], hi[1], hi[2]));
                    worst = worst.max((f.data[lo - s] - f.data[lo]).abs()).max((f.data[hi + s] - f.data[hi]).abs());
                });
            }
        }
        worst
    }
}

fn for_each_face_cell(n: [usize; 3], d: usize, mut f: impl FnMut([usize; 3], [usize; 3])) {
    let (a, b) = match d {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    for ia in 0..n[a] {
        for ib in 0..n[b] {
            let mut lo = [0; 3];
            lo[a] = ia;
            lo[b] = ib;
            let mut hi = lo;
            hi[d] = n[d] - 1;
            f(lo, hi);
        }
    }
}

/// Fills ghost layers: odd reflection of the normal velocity, even reflection
/// of tangential velocity and density.
pub fn apply_slip_bc<T: Real>(state: &FluidState3D<T>, domain: &ThinDomain<T>) -> Result<GhostedState<T>> {
    state.check_on(domain)?;
    let n = domain.dims();
    Ok(GhostedState {
        rho: Padded::reflect(state.rho.as_slice(), n, [false; 3]),
        u: [
            Padded::reflect(state.u.component(0), n, [true, false, false]),
            Padded::reflect(state.u.component(1), n, [false, true, false]),
            Padded::reflect(state.u.component(2), n, [false, false, true]),
        ],
    })
}

/// Time derivatives of the conservative and primitive variables.
#[derive(Debug, Clone)]
pub struct Rates3D<T> {
    pub drho: GridFunction<T>,
    pub dm: GridFunction<T>,
    pub du: GridFunction<T>,
}

/// Volumetric sources `(S_ρ, S_m)` added to the continuity and momentum
/// equations, evaluated at a given time.
pub type Forcing<'a, T> = &'a dyn Fn(T) -> Result<(GridFunction<T>, GridFunction<T>)>;

/// The physics and numerical parameters of one solver configuration.
#[derive(Debug, Clone, Copy)]
pub struct Solver3D<T> {
    pub law: PressureLaw<T>,
    pub visc: Viscosity<T>,
    pub domain: ThinDomain<T>,
    pub scheme: Scheme<T>,
}

impl<T: Real> Solver3D<T> {
    pub fn new(law: PressureLaw<T>, visc: Viscosity<T>, domain: ThinDomain<T>) -> Self {
        Self { law, visc, domain, scheme: Scheme::default() }
    }

    pub fn with_scheme(mut self, scheme: Scheme<T>) -> Self {
        self.scheme = scheme;
        self
    }

    fn check_density(&self, state: &FluidState3D<T>) -> Result<()> {
        let mut min = T::infinity();
        for &r in state.rho.as_slice() {
            if !r.is_finite() {
                return Err(Error::BlowUp { t: state.t.to_f64_lossy(), reason: "non-finite density".into() });
            }
            min = min.min(r);
        }
        if min <= self.scheme.density_floor {
            return Err(Error::BlowUp {
                t: state.t.to_f64_lossy(),
                reason: format!("density {} below floor {}", min, self.scheme.density_floor),
            });
        }
        if !state.u.is_finite() {
            return Err(Error::BlowUp { t: state.t.to_f64_lossy(), reason: "non-finite velocity".into() });
        }
        Ok(())
    }

    /// Global maximum of `|u| + c`, the dissipation scaling.
    pub fn wave_speed(&self, state: &FluidState3D<T>) -> T {
        let n = state.rho.ncells();
        let u = state.u.as_slice();
        state.rho.as_slice().iter().enumerate().fold(T::zero(), |m, (idx, &r)| {
            let q = (u[idx] * u[idx] + u[n + idx] * u[n + idx] + u[2 * n + idx] * u[2 * n + idx]).sqrt();
            m.max(q + self.law.sound_speed(r))
        })
    }

    pub fn rhs(&self, state: &FluidState3D<T>) -> Result<Rates3D<T>> {
        self.rhs_forced(state, None)
    }

    pub fn rhs_forced(&self, state: &FluidState3D<T>, forcing: Option<Forcing<'_, T>>) -> Result<Rates3D<T>> {
        self.check_density(state)?;
        let g = apply_slip_bc(state, &self.domain)?;
        let n = self.domain.dims();
        let ncells = self.domain.ncells();
        let h = self.domain.spacing();
        let st = g.rho.stride;
        let rho = &g.rho.data;
        let u = [&g.u[0].data, &g.u[1].data, &g.u[2].data];
        let m: Vec<Vec<T>> = (0..3).map(|a| rho.iter().zip(u[a]).map(|(&r, &v)| r * v).collect()).collect();
        let p: Vec<T> = rho.iter().map(|&r| self.law.p(r)).collect();

        let half = T::lit(0.5);
        let two = T::lit(2.0);
        let four = T::lit(4.0);
        let six = T::lit(6.0);
        let inv2h = h.map(|x| half / x);
        let invh2 = h.map(|x| T::one() / (x * x));
        let mixed = |a: usize, b: usize| T::one() / (four * h[a] * h[b]);
        let mu = self.visc.mu;
        let lam = self.visc.lame_second();
        let kappa = self.scheme.dissipation * self.wave_speed(state);
        let kh = h.map(|x| kappa / x);

        let d1 = |f: &[T], o: usize, b: usize| (f[o + st[b]] - f[o - st[b]]) * inv2h[b];
        let d2 = |f: &[T], o: usize, b: usize| (f[o + st[b]] - two * f[o] + f[o - st[b]]) * invh2[b];
        let d4 = |f: &[T], o: usize, b: usize| {
            let s = st[b];
            f[o + 2 * s] - four * f[o + s] + six * f[o] - four * f[o - s] + f[o - 2 * s]
        };

        let mut drho = GridFunction::zeros(n, 1);
        let mut dm = GridFunction::zeros(n, 3);
        {
            let dr = drho.as_mut_slice();
            let dmv = dm.as_mut_slice();
            for k in 0..n[2] {
                for j in 0..n[1] {
                    for i in 0..n[0] {
                        let o = g.rho.at(i, j, k);
                        let c = (k * n[1] + j) * n[0] + i;
                        let mut r = T::zero();
                        for b in 0..3 {
                            r = r - d1(&m[b], o, b) - kh[b] * d4(rho, o, b);
                        }
                        dr[c] = r;
                        for a in 0..3 {
                            let mut acc = -d1(&p, o, a);
                            for b in 0..3 {
                                let sb = st[b];
                                let conv = (m[a][o + sb] * u[b][o + sb] - m[a][o - sb] * u[b][o - sb]) * inv2h[b];
                                acc = acc - conv + mu * d2(u[a], o, b) - kh[b] * d4(&m[a], o, b);
                                let grad_div = if a == b {
                                    d2(u[a], o, a)
                                } else {
                                    let (sa, sb) = (st[a], st[b]);
                                    let f = u[b];
                                    (f[o + sa + sb] - f[o + sa - sb] - f[o - sa + sb] + f[o - sa - sb]) * mixed(a, b)
                                };
                                acc = acc + lam * grad_div;
                            }
                            dmv[a * ncells + c] = acc;
                        }
                    }
                }
            }
        }
        if let Some(source) = forcing {
            let (sr, sm) = source(state.t)?;
            sr.check_same_shape(&drho)?;
            sm.check_same_shape(&dm)?;
            drho = drho.add(&sr)?;
            dm = dm.add(&sm)?;
        }
        let mut du = GridFunction::zeros(n, 3);
        {
            let r = state.rho.as_slice();
            let uu = state.u.as_slice();
            let dr = drho.as_slice();
            let dmv = dm.as_slice();
            for (idx, v) in du.as_mut_slice().iter_mut().enumerate() {
                let c = idx % ncells;
                *v = (dmv[idx] - uu[idx] * dr[c]) / r[c];
            }
        }
        Ok(Rates3D { drho, dm, du })
    }

    /// Largest stable step for this state at the given CFL number.
    pub fn stable_dt(&self, state: &FluidState3D<T>, cfl: T) -> Result<T> {
        if !(cfl > T::zero() && cfl <= T::one()) {
            return Err(Error::config(format!("cfl must lie in (0, 1], got {cfl}")));
        }
        self.check_density(state)?;
        let hmin = self.domain.min_spacing();
        let n = state.rho.ncells();
        let u = state.u.as_slice();
        let visc_coef = T::lit(2.0) * (T::lit(2.0) * self.visc.mu + self.visc.eta) * T::lit(3.0);
        let mut dt = T::infinity();
        for (idx, &r) in state.rho.as_slice().iter().enumerate() {
            let q = (u[idx] * u[idx] + u[n + idx] * u[n + idx] + u[2 * n + idx] * u[2 * n + idx]).sqrt();
            dt = dt.min(hmin / (q + self.law.sound_speed(r)));
            if visc_coef > T::zero() {
                dt = dt.min(r * hmin * hmin / visc_coef);
            }
        }
        Ok(cfl * dt)
    }

    pub fn step(&self, state: &FluidState3D<T>, dt: T) -> Result<FluidState3D<T>> {
        self.step_forced(state, dt, None)
    }

    /// One midpoint Runge-Kutta step in `(ρ, ρu)`.
    pub fn step_forced(&self, state: &FluidState3D<T>, dt: T, forcing: Option<Forcing<'_, T>>) -> Result<FluidState3D<T>> {
        let half = T::lit(0.5) * dt;
        let k1 = self.rhs_forced(state, forcing)?;
        let m0 = state.momentum();
        let mid = self.advance(state, &m0, &k1, half, state.t + half)?;
        let k2 = self.rhs_forced(&mid, forcing)?;
        self.advance(state, &m0, &k2, dt, state.t + dt)
    }

    fn advance(&self, base: &FluidState3D<T>, m0: &GridFunction<T>, k: &Rates3D<T>, dt: T, t: T) -> Result<FluidState3D<T>> {
        let rho = base.rho.zip_map(&k.drho, |r, d| r + dt * d)?;
        let m = m0.zip_map(&k.dm, |q, d| q + dt * d)?;
        let n = rho.ncells();
        let r = rho.as_slice();
        let mut u = m;
        for (idx, v) in u.as_mut_slice().iter_mut().enumerate() {
            *v = *v / r[idx % n];
        }
        let next = FluidState3D { rho, u, t };
        self.check_density(&next)?;
        Ok(next)
    }

    /// Fixed step for a run of length `t_end`, dividing it exactly.
    pub fn run_dt(&self, state: &FluidState3D<T>, t_end: T, cfl: T) -> Result<(T, usize)> {
        fixed_steps(self.stable_dt(state, cfl)?, t_end)
    }

    /// Advances `nsteps` of size `dt`, calling `observe` on the initial state
    /// and after every `sample_every` steps.
    pub fn evolve(
        &self,
        initial: &FluidState3D<T>,
        dt: T,
        nsteps: usize,
        sample_every: usize,
        forcing: Option<Forcing<'_, T>>,
        mut observe: impl FnMut(usize, &FluidState3D<T>) -> Result<()>,
    ) -> Result<FluidState3D<T>> {
        let every = sample_every.max(1);
        let mut state = initial.clone();
        observe(0, &state)?;
        for step in 1..=nsteps {
            state = self.step_forced(&state, dt, forcing)?;
            if step % every == 0 || step == nsteps {
                observe(step, &state)?;
            }
        }
        Ok(state)
    }
}

/// Splits `t_end` into equal steps no larger than `dt_max`.
pub fn fixed_steps<T: Real>(dt_max: T, t_end: T) -> Result<(T, usize)> {
    if !(t_end >= T::zero()) || !t_end.is_finite() {
        return Err(Error::config(format!("t_end must be finite and >= 0, got {t_end}")));
    }
    if t_end == T::zero() {
        return Ok((T::zero(), 0));
    }
    if !(dt_max > T::zero()) {
        return Err(Error::Numerical(format!("nonpositive stable step {dt_max}")));
    }
    let steps = (t_end / dt_max).ceil().to_usize().unwrap_or(usize::MAX).max(1);
    Ok((t_end / T::from_usize_lossy(steps), steps))
}

pub fn rhs3d<T: Real>(
    state: &FluidState3D<T>,
    law: &PressureLaw<T>,
    visc: &Viscosity<T>,
    domain: &ThinDomain<T>,
) -> Result<(GridFunction<T>, GridFunction<T>)> {
    let r = Solver3D::new(*law, *visc, *domain).rhs(state)?;
    Ok((r.drho, r.du))
}

pub fn stable_dt<T: Real>(
    state: &FluidState3D<T>,
    law: &PressureLaw<T>,
    visc: &Viscosity<T>,
    domain: &ThinDomain<T>,
    cfl: T,
) -> Result<T> {
    Solver3D::new(*law, *visc, *domain).stable_dt(state, cfl)
}

pub fn step3d<T: Real>(
    state: &FluidState3D<T>,
    dt: T,
    law: &PressureLaw<T>,
    visc: &Viscosity<T>,
    domain: &ThinDomain<T>,
) -> Result<FluidState3D<T>> {
    Solver3D::new(*law, *visc, *domain).step(state, dt)
}

/// One row of the trajectory summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary3D<T> {
    pub t: T,
    pub mass: T,
    pub energy: T,
    pub min_rho: T,
    pub max_speed: T,
}

pub fn summarize<T: Real>(state: &FluidState3D<T>, law: &PressureLaw<T>, domain: &ThinDomain<T>) -> Summary3D<T> {
    Summary3D {
        t: state.t,
        mass: state.mass(domain),
        energy: state.energy(law, domain),
        min_rho: state.rho.min_value(),
        max_speed: state.max_speed(),
    }
}

/// Flat little-endian trajectory dump, see the README for the layout.
pub mod dump {
    use super::FluidState3D;
    use std::io::{self, Read, Write};

    pub const MAGIC: &[u8; 8] = b"TFTRAJ01";

    pub fn write_header(w: &mut impl Write, dims: [usize; 3]) -> io::Result<()> {
        w.write_all(MAGIC)?;
        for d in dims {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        Ok(())
    }

    pub fn write_record(w: &mut impl Write, state: &FluidState3D<f64>) -> io::Result<()> {
        w.write_all(&state.t.to_le_bytes())?;
        for v in state.rho.as_slice().iter().chain(state.u.as_slice()) {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a whole dump back: grid dimensions and `(t, ρ, u)` records.
    pub fn read_all(r: &mut impl Read) -> io::Result<([usize; 3], Vec<(f64, Vec<f64>, Vec<f64>)>)> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
        if bytes.len() < 32 || &bytes[..8] != MAGIC {
            return Err(bad("not a trajectory dump"));
        }
        let word = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let dims = [word(8) as usize, word(16) as usize, word(24) as usize];
        let n = dims.iter().product::<usize>();
        let rec = 8 * (1 + 4 * n);
        let body = &bytes[32..];
        if body.len() % rec != 0 {
            return Err(bad("truncated record"));
        }
        let f = |o: usize| f64::from_le_bytes(body[o..o + 8].try_into().unwrap());
        let records = (0..body.len() / rec)
            .map(|r| {
                let base = r * rec;
                let rho = (0..n).map(|c| f(base + 8 + 8 * c)).collect();
                let u = (0..3 * n).map(|c| f(base + 8 + 8 * (n + c))).collect();
                (f(base), rho, u)
            })
            .collect();
        Ok((dims, records))
    }
}
