//! Discrete calculus on cell-centred grid functions.
//!
//! Gradients use second-order central differences in the interior and
//! second-order one-sided differences in the first and last cells.
//! Integrals use the midpoint rule.

use crate::error::{Error, Result};
use crate::geometry::{GridFunction, ThinDomain};
use crate::scalar::Real;
use crate::solver1d::Profile1D;
use crate::solver3d::FluidState3D;

/// Integrability exponent of an Lᵖ norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub const ONE: Exponent = Exponent::Finite(1.0);
    pub const TWO: Exponent = Exponent::Finite(2.0);
    pub const FOUR: Exponent = Exponent::Finite(4.0);
    pub const SIX: Exponent = Exponent::Finite(6.0);
    pub const INF: Exponent = Exponent::Infinity;

    pub fn validate(self) -> Result<Self> {
        match self {
            Exponent::Finite(p) if !(p >= 1.0) || !p.is_finite() => {
                Err(Error::config(format!("Lp exponent must be >= 1, got {p}")))
            }
            e => Ok(e),
        }
    }

    /// `1/p`, zero for p = ∞.
    pub fn reciprocal(self) -> f64 {
        match self {
            Exponent::Finite(p) => 1.0 / p,
            Exponent::Infinity => 0.0,
        }
    }
}

impl std::fmt::Display for Exponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => write!(f, "inf"),
        }
    }
}

/// Lᵖ norms for the exponents used throughout the estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms<T> {
    pub l1: T,
    pub l2: T,
    pub l4: T,
    pub l6: T,
    pub linf: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormReport<T> {
    pub lp: Norms<T>,
    pub grad_lp: Norms<T>,
}

#[inline]
fn diff1<T: Real>(f: &[T], idx: usize, stride: usize, pos: usize, n: usize, inv2h: T) -> T {
    let two = T::lit(2.0);
    if n == 2 {
        return (f[idx - pos * stride + stride] - f[idx - pos * stride]) * two * inv2h;
    }
    if pos == 0 {
        (T::lit(4.0) * (f[idx + stride] - f[idx]) - (f[idx + 2 * stride] - f[idx])) * inv2h
    } else if pos == n - 1 {
        (T::lit(4.0) * (f[idx] - f[idx - stride]) - (f[idx] - f[idx - 2 * stride])) * inv2h
    } else {
        (f[idx + stride] - f[idx - stride]) * inv2h
    }
}

/// Gradient of every component; component `3c + b` holds `∂_b f_c`.
pub fn gradient<T: Real>(f: &GridFunction<T>, domain: &ThinDomain<T>) -> GridFunction<T> {
    let [nx, ny, nz] = f.dims();
    let n = f.ncells();
    let half = T::lit(0.5);
    let inv = domain.spacing().map(|h| half / h);
    let mut out = GridFunction::zeros(f.dims(), 3 * f.ncomp());
    for c in 0..f.ncomp() {
        let src = f.component(c);
        let data = out.as_mut_slice();
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    let idx = (k * ny + j) * nx + i;
                    data[(3 * c) * n + idx] = diff1(src, idx, 1, i, nx, inv[0]);
                    data[(3 * c + 1) * n + idx] = diff1(src, idx, nx, j, ny, inv[1]);
                    data[(3 * c + 2) * n + idx] = diff1(src, idx, nx * ny, k, nz, inv[2]);
                }
            }
        }
    }
    out
}

/// Divergence of a 3-component field.
pub fn divergence<T: Real>(f: &GridFunction<T>, domain: &ThinDomain<T>) -> Result<GridFunction<T>> {
    if f.ncomp() != 3 {
        return Err(Error::config("divergence needs a 3-component field"));
    }
    let g = gradient(f, domain);
    let mut out = GridFunction::zeros(f.dims(), 1);
    for (o, ((a, b), c)) in out
        .as_mut_slice()
        .iter_mut()
        .zip(g.component(0).iter().zip(g.component(4)).zip(g.component(8)))
    {
        *o = *a + *b + *c;
    }
    Ok(out)
}

/// `∫ f` of each component, evaluated with the midpoint rule.
pub fn integral<T: Real>(f: &GridFunction<T>, domain: &ThinDomain<T>) -> Vec<T> {
    let dv = domain.cell_volume();
    (0..f.ncomp()).map(|c| f.component(c).iter().copied().sum::<T>() * dv).collect()
}

/// `∫ f` of a scalar field.
pub fn integrate<T: Real>(values: &[T], domain: &ThinDomain<T>) -> T {
    values.iter().copied().sum::<T>() * domain.cell_volume()
}

/// Lᵖ norm of the pointwise Euclidean magnitude.
pub fn lp_norm<T: Real>(f: &GridFunction<T>, p: Exponent, domain: &ThinDomain<T>) -> T {
    let n = f.ncells();
    let data = f.as_slice();
    let sq = |idx: usize| -> T {
        let mut acc = T::zero();
        for c in 0..f.ncomp() {
            let v = data[c * n + idx];
            acc = acc + v * v;
        }
        acc
    };
    match p {
        Exponent::Infinity => (0..n).fold(T::zero(), |m, idx| m.max(sq(idx))).sqrt(),
        Exponent::Finite(pf) => {
            let dv = domain.cell_volume();
            if pf == 2.0 {
                ((0..n).map(sq).sum::<T>() * dv).sqrt()
            } else if pf == 4.0 {
                ((0..n).map(|i| sq(i) * sq(i)).sum::<T>() * dv).sqrt().sqrt()
            } else {
                let half_p = T::lit(pf / 2.0);
                ((0..n).map(|i| sq(i).powf(half_p)).sum::<T>() * dv).powf(T::lit(1.0 / pf))
            }
        }
    }
}

pub fn norms<T: Real>(f: &GridFunction<T>, domain: &ThinDomain<T>) -> Norms<T> {
    Norms {
        l1: lp_norm(f, Exponent::ONE, domain),
        l2: lp_norm(f, Exponent::TWO, domain),
        l4: lp_norm(f, Exponent::FOUR, domain),
        l6: lp_norm(f, Exponent::SIX, domain),
        linf: lp_norm(f, Exponent::INF, domain),
    }
}

pub fn norm_report<T: Real>(f: &GridFunction<T>, domain: &ThinDomain<T>) -> NormReport<T> {
    NormReport { lp: norms(f, domain), grad_lp: norms(&gradient(f, domain), domain) }
}

/// `(‖f‖⁴_{L⁴} + ‖∇f‖⁴_{L⁴})^{1/4}`.
pub fn w14_norm<T: Real>(f: &GridFunction<T>, domain: &ThinDomain<T>) -> T {
    let a = lp_norm(f, Exponent::FOUR, domain);
    let b = lp_norm(&gradient(f, domain), Exponent::FOUR, domain);
    (a.powi(4) + b.powi(4)).sqrt().sqrt()
}

/// `(‖f‖² + ‖∇f‖² + ‖∇²f‖²)^{1/2}` in L².
pub fn w22_norm<T: Real>(f: &GridFunction<T>, domain: &ThinDomain<T>) -> T {
    let g = gradient(f, domain);
    let h = gradient(&g, domain);
    let a = lp_norm(f, Exponent::TWO, domain);
    let b = lp_norm(&g, Exponent::TWO, domain);
    let c = lp_norm(&h, Exponent::TWO, domain);
    (a * a + b * b + c * c).sqrt()
}

#[inline]
fn stable_mean<T: Real>(values: impl Iterator<Item = T> + Clone) -> T {
    // shifted by the first entry so that a constant slab averages exactly
    let mut it = values.clone();
    let Some(first) = it.next() else { return T::zero() };
    let mut count = 1usize;
    let mut acc = T::zero();
    for v in it {
        acc = acc + (v - first);
        count += 1;
    }
    first + acc / T::from_usize_lossy(count)
}

/// Average over each horizontal slab; returns `ncomp × nz` profiles.
pub fn cross_avg<T: Real>(f: &GridFunction<T>, domain: &ThinDomain<T>) -> Result<Vec<Vec<T>>> {
    f.check_on(domain)?;
    let [nx, ny, nz] = f.dims();
    let slab = nx * ny;
    Ok((0..f.ncomp())
        .map(|c| {
            let data = f.component(c);
            (0..nz).map(|k| stable_mean(data[k * slab..(k + 1) * slab].iter().copied())).collect()
        })
        .collect())
}

/// Cross-sectional averages of density and axial velocity.
pub fn cross_avg_state<T: Real>(state: &FluidState3D<T>, domain: &ThinDomain<T>) -> Result<Profile1D<T>> {
    let rho = cross_avg(&state.rho, domain)?.remove(0);
    let u = cross_avg(&state.u, domain)?.remove(2);
    Ok(Profile1D { rho, u, t: state.t })
}

/// Lifts a 1D profile to `ρ(z)`, `u = (0, 0, u(z))`.
pub fn lift1d<T: Real>(profile: &Profile1D<T>, domain: &ThinDomain<T>) -> Result<FluidState3D<T>> {
    if profile.rho.len() != domain.nz || profile.u.len() != domain.nz {
        return Err(Error::config(format!(
            "profile length {} / {} does not match nz = {}",
            profile.rho.len(),
            profile.u.len(),
            domain.nz
        )));
    }
    Ok(FluidState3D {
        rho: lift_scalar(&profile.rho, domain),
        u: {
            let mut u = GridFunction::zeros(domain.dims(), 3);
            let slab = domain.nx * domain.ny;
            let w = u.component_mut(2);
            for (k, &v) in profile.u.iter().enumerate() {
                w[k * slab..(k + 1) * slab].iter_mut().for_each(|x| *x = v);
            }
            u
        },
        t: profile.t,
    })
}

/// Scalar field constant on horizontal slabs.
pub fn lift_scalar<T: Real>(values: &[T], domain: &ThinDomain<T>) -> GridFunction<T> {
    let mut g = GridFunction::zeros(domain.dims(), 1);
    let slab = domain.nx * domain.ny;
    let data = g.as_mut_slice();
    for (k, &v) in values.iter().enumerate() {
        data[k * slab..(k + 1) * slab].iter_mut().for_each(|x| *x = v);
    }
    g
}

/// Cell-averages a profile onto a grid coarser by an integer factor.
pub fn coarsen_profile<T: Real>(values: &[T], nz: usize) -> Result<Vec<T>> {
    if nz == 0 || values.len() % nz != 0 {
        return Err(Error::config(format!(
            "cannot cell-average {} cells onto {} cells",
            values.len(),
            nz
        )));
    }
    let r = values.len() / nz;
    Ok(values.chunks(r).map(|c| stable_mean(c.iter().copied())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_channel;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn gradient_of_constant_vanishes() {
        let d = build_channel(0.5_f64, 4, 5, 6).unwrap();
        let f = GridFunction::constant(d.dims(), 1, 3.25);
        assert!(gradient(&f, &d).max_abs() < 1e-12);
    }

    #[test]
    fn gradient_reproduces_linears() {
        let d = build_channel(1.0_f64, 4, 4, 8).unwrap();
        let f = GridFunction::scalar_from_fn(&d, |_, _, z| z);
        let g = gradient(&f, &d);
        for v in g.component(2) {
            assert!((v - 1.0).abs() < 1e-12);
        }
        assert!(g.component(0).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn gradient_second_order() {
        // Richardson study on sin(pi z), coarse to fine
        let mut errs = Vec::new();
        for &nz in &[16usize, 32, 64, 128] {
            let d = build_channel(1.0_f64, 2, 2, nz).unwrap();
            let f = GridFunction::scalar_from_fn(&d, |_, _, z| (PI * z).sin());
            let g = gradient(&f, &d);
            let err = (0..nz)
                .map(|k| (g.get(2, 0, 0, k) - PI * (PI * d.z(k)).cos()).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.9, "{errs:?}");
        }
    }

    #[test]
    fn lp_norm_examples() {
        let d = build_channel(0.5_f64, 4, 4, 8).unwrap();
        let one = GridFunction::constant(d.dims(), 1, 1.0);
        assert!((lp_norm(&one, Exponent::TWO, &d) - 0.5).abs() < 1e-14);
        assert_eq!(lp_norm(&one, Exponent::INF, &d), 1.0);
        let d = build_channel(1.0_f64, 2, 2, 400).unwrap();
        let s = GridFunction::scalar_from_fn(&d, |_, _, z| (PI * z).sin());
        assert!((lp_norm(&s, Exponent::TWO, &d) - 0.5_f64.sqrt()).abs() < 1e-4);
        let n6 = lp_norm(&s, Exponent::SIX, &d);
        // ∫ sin^6 = 5/16
        assert!((n6 - (5.0_f64 / 16.0).powf(1.0 / 6.0)).abs() < 1e-4);
    }

    #[test]
    fn cross_average_examples() {
        let d = build_channel(0.5_f64, 16, 16, 8).unwrap();
        let c = GridFunction::constant(d.dims(), 1, 2.5);
        assert!(cross_avg(&c, &d).unwrap()[0].iter().all(|&v| v == 2.5));
        let g = GridFunction::scalar_from_fn(&d, |_, _, z| z * z);
        let p = cross_avg(&g, &d).unwrap();
        for k in 0..d.nz {
            assert_eq!(p[0][k], d.z(k) * d.z(k));
        }
        let eps = d.epsilon;
        let osc = GridFunction::scalar_from_fn(&d, |x, _, _| (2.0 * PI * x / eps).sin());
        assert!(cross_avg(&osc, &d).unwrap()[0].iter().all(|v| v.abs() < 1e-3));
    }

    #[test]
    fn lift_examples() {
        let d = build_channel(0.5_f64, 4, 4, 16).unwrap();
        let constant = Profile1D { rho: vec![1.0; 16], u: vec![0.0; 16], t: 0.0 };
        let s = lift1d(&constant, &d).unwrap();
        assert!(s.rho.as_slice().iter().all(|&v| v == 1.0));
        assert_eq!(s.u.max_abs(), 0.0);
        let prof = Profile1D { rho: vec![1.0; 16], u: (0..16).map(|k| (PI * d.z(k)).sin()).collect(), t: 0.0 };
        let s = lift1d(&prof, &d).unwrap();
        assert_eq!(s.u.get(2, 1, 2, 3), (PI * d.z(3)).sin());
        assert_eq!(s.u.component(0).iter().fold(0.0_f64, |m, v| m.max(v.abs())), 0.0);
        let bad = Profile1D { rho: vec![1.0; 8], u: vec![0.0; 8], t: 0.0 };
        assert!(lift1d(&bad, &d).is_err());
    }

    #[test]
    fn lifted_gradient_has_no_horizontal_part() {
        let d = build_channel(0.3_f64, 5, 7, 12).unwrap();
        let prof = Profile1D {
            rho: (0..12).map(|k| 1.0 + 0.1 * (PI * d.z(k)).cos()).collect(),
            u: (0..12).map(|k| 0.2 * (PI * d.z(k)).sin()).collect(),
            t: 0.0,
        };
        let s = lift1d(&prof, &d).unwrap();
        let g = gradient(&s.rho, &d);
        assert!(g.component(0).iter().chain(g.component(1)).all(|&v| v == 0.0));
        let gu = gradient(&s.u, &d);
        for c in [0, 1, 3, 4, 6, 7] {
            assert!(gu.component(c).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn coarsening() {
        let v: Vec<f64> = (0..8).map(|i| i as f64).collect();
        assert_eq!(coarsen_profile(&v, 4).unwrap(), vec![0.5, 2.5, 4.5, 6.5]);
        assert!(coarsen_profile(&v, 3).is_err());
    }

    proptest! {
        #[test]
        fn roundtrip_cross_avg_lift(vals in proptest::collection::vec((0.1f64..5.0, -2.0f64..2.0), 6), eps in 0.05f64..1.0) {
            let d = build_channel(eps, 3, 5, 6).unwrap();
            let prof = Profile1D { rho: vals.iter().map(|v| v.0).collect(), u: vals.iter().map(|v| v.1).collect(), t: 0.25 };
            let back = cross_avg_state(&lift1d(&prof, &d).unwrap(), &d).unwrap();
            prop_assert_eq!(back, prof);
        }

        #[test]
        fn holder_l2_l4(vals in proptest::collection::vec(-3.0f64..3.0, 4 * 4 * 5), eps in 0.05f64..1.0) {
            let d = build_channel(eps, 4, 4, 5).unwrap();
            let f = GridFunction::from_vec(d.dims(), 1, vals).unwrap();
            let l2 = lp_norm(&f, Exponent::TWO, &d);
            let l4 = lp_norm(&f, Exponent::FOUR, &d);
            prop_assert!(l2 <= d.v.powf(0.25) * l4 * (1.0 + 1e-12) + 1e-300);
        }
    }
}
