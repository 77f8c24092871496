//! Seeded truncated trigonometric polynomials on a box, in coordinates scaled
//! to the unit cube.
//!
//! Scalars are cosine series, so they have zero normal derivative on every
//! face. Vector component `a` is a sine in its own direction and cosines in
//! the others: zero normal trace and zero normal derivative of the tangential
//! components. Both parities match the ghost-cell reflections of the solver.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use crate::geometry::{GridFunction, ThinDomain};
use crate::scalar::Real;

/// One product term `amp · Π_d basis_d(k_d π X_d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub k: [u32; 3],
    pub amp: f64,
}

/// A sum of product modes for one component; `sine[d]` selects sin over cos
/// in direction `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigSeries {
    pub sine: [bool; 3],
    pub modes: Vec<Mode>,
}

impl TrigSeries {
    fn factor(&self, d: usize, k: u32, s: f64, order: u32) -> f64 {
        // order-th derivative in the scaled coordinate of sin / cos
        let w = k as f64 * PI;
        let (sn, cs) = (w * s).sin_cos();
        let base = if self.sine[d] { [sn, cs, -sn, -cs] } else { [cs, -sn, -cs, sn] };
        w.powi(order as i32) * base[(order % 4) as usize]
    }

    /// Value in scaled coordinates `X ∈ [0,1]³`, differentiated `order[d]`
    /// times in each scaled direction.
    pub fn eval_scaled(&self, x: [f64; 3], order: [u32; 3]) -> f64 {
        self.modes
            .iter()
            .map(|m| m.amp * (0..3).map(|d| self.factor(d, m.k[d], x[d], order[d])).product::<f64>())
            .sum()
    }

    /// Value (or derivative) at physical coordinates of a box with extents `l`.
    pub fn eval(&self, p: [f64; 3], l: [f64; 3], order: [u32; 3]) -> f64 {
        let x = [p[0] / l[0], p[1] / l[1], p[2] / l[2]];
        let scale: f64 = (0..3).map(|d| l[d].powi(-(order[d] as i32))).product();
        self.eval_scaled(x, order) * scale
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { sine: self.sine, modes: self.modes.iter().map(|m| Mode { k: m.k, amp: m.amp * s }).collect() }
    }
}

/// A scalar or vector trigonometric field.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigField {
    pub components: Vec<TrigSeries>,
}

impl TrigField {
    pub fn sample<T: Real>(&self, domain: &ThinDomain<T>) -> GridFunction<T> {
        self.sample_derivative(domain, [0, 0, 0])
    }

    pub fn sample_derivative<T: Real>(&self, domain: &ThinDomain<T>, order: [u32; 3]) -> GridFunction<T> {
        let l = [domain.lx, domain.ly, domain.lz].map(|v| v.to_f64_lossy());
        let mut out = GridFunction::zeros(domain.dims(), self.components.len());
        for (c, s) in self.components.iter().enumerate() {
            let data = out.component_mut(c);
            for k in 0..domain.nz {
                for j in 0..domain.ny {
                    for i in 0..domain.nx {
                        let p = [domain.x(i), domain.y(j), domain.z(k)].map(|v| v.to_f64_lossy());
                        data[(k * domain.ny + j) * domain.nx + i] = T::lit(s.eval(p, l, order));
                    }
                }
            }
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { components: self.components.iter().map(|c| c.scaled(s)).collect() }
    }

    pub fn ncomp(&self) -> usize {
        self.components.len()
    }
}

/// Generator settings: wavenumbers `0..=max_mode` (sine directions start at 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigSpec {
    pub max_mode: u32,
    /// Include the constant mode of scalar fields.
    pub constant: bool,
}

impl Default for TrigSpec {
    fn default() -> Self {
        Self { max_mode: 2, constant: true }
    }
}

fn series(rng: &mut ChaCha8Rng, sine: [bool; 3], spec: TrigSpec) -> TrigSeries {
    let range = |d: usize| if sine[d] { 1..=spec.max_mode + 1 } else { 0..=spec.max_mode };
    let mut modes = Vec::new();
    for kz in range(2) {
        for ky in range(1) {
            for kx in range(0) {
                if !spec.constant && kx == 0 && ky == 0 && kz == 0 {
                    continue;
                }
                let amp: f64 = rng.gen_range(-1.0..1.0);
                let decay = 1.0 + (kx * kx + ky * ky + kz * kz) as f64;
                modes.push(Mode { k: [kx, ky, kz], amp: amp / decay });
            }
        }
    }
    TrigSeries { sine, modes }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_scalar(rng: &mut ChaCha8Rng, spec: TrigSpec) -> TrigField {
    TrigField { components: vec![series(rng, [false; 3], spec)] }
}

pub fn random_slip_vector(rng: &mut ChaCha8Rng, spec: TrigSpec) -> TrigField {
    TrigField {
        components: (0..3)
            .map(|a| {
                let mut sine = [false; 3];
                sine[a] = true;
                series(rng, sine, spec)
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_channel;

    #[test]
    fn seeded_fields_are_reproducible() {
        let a = random_slip_vector(&mut rng(7), TrigSpec::default());
        let b = random_slip_vector(&mut rng(7), TrigSpec::default());
        let c = random_slip_vector(&mut rng(8), TrigSpec::default());
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let f = random_scalar(&mut rng(3), TrigSpec { max_mode: 3, constant: true });
        let l = [0.3, 0.3, 1.0];
        let p = [0.1, 0.2, 0.7];
        let h = 1e-5;
        for d in 0..3 {
            let mut order = [0; 3];
            order[d] = 1;
            let mut a = p;
            let mut b = p;
            a[d] += h;
            b[d] -= h;
            let fd = (f.components[0].eval(a, l, [0; 3]) - f.components[0].eval(b, l, [0; 3])) / (2.0 * h);
            assert!((fd - f.components[0].eval(p, l, order)).abs() < 1e-6);
        }
    }

    #[test]
    fn vector_fields_meet_slip_conditions() {
        let d = build_channel(0.4, 6, 6, 12).unwrap();
        let l = [d.lx, d.ly, d.lz];
        let f = random_slip_vector(&mut rng(1), TrigSpec::default());
        for a in 0..3 {
            let mut p = [0.13, 0.27, 0.61];
            for wall in [0.0, l[a]] {
                p[a] = wall;
                assert!(f.components[a].eval(p, l, [0; 3]).abs() < 1e-12);
            }
        }
        // tangential components have zero normal derivative on the faces
        for a in 0..3 {
            for b in (0..3).filter(|&b| b != a) {
                let mut p = [0.13, 0.27, 0.61];
                let mut order = [0; 3];
                order[a] = 1;
                for wall in [0.0, l[a]] {
                    p[a] = wall;
                    assert!(f.components[b].eval(p, l, order).abs() < 1e-9);
                }
            }
        }
        let s = random_scalar(&mut rng(2), TrigSpec::default());
        assert!(s.components[0].eval([0.0, 0.1, 0.2], l, [1, 0, 0]).abs() < 1e-9);
    }
}
