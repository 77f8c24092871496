//! Manufactured solutions shared by the integration tests.
#![allow(dead_code)]

use thinflow::trig::{self, TrigField, TrigSpec};
use thinflow::{Domain, Field, Law, Profile, State3, Visc};

pub const AMP: f64 = 0.1;

/// Time factor of every manufactured field and its derivative.
fn g(t: f64) -> (f64, f64) {
    (1.0 + 0.5 * (3.0 * t).sin(), 1.5 * (3.0 * t).cos())
}

/// `ρ = 1 + A g(t) φ(x)`, `u = A g(t) ψ(x)` with slip-compatible trig `φ, ψ`.
pub struct Mms3 {
    pub phi: TrigField,
    pub psi: TrigField,
    pub law: Law,
    pub visc: Visc,
}

impl Mms3 {
    pub fn new(seed: u64, law: Law, visc: Visc) -> Self {
        let mut rng = trig::rng(seed);
        let spec = TrigSpec { max_mode: 1, constant: false };
        Self { phi: trig::random_scalar(&mut rng, spec), psi: trig::random_slip_vector(&mut rng, spec), law, visc }
    }

    fn at(&self, c: usize, p: [f64; 3], l: [f64; 3], order: [u32; 3]) -> f64 {
        if c == 0 {
            self.phi.components[0].eval(p, l, order)
        } else {
            self.psi.components[c - 1].eval(p, l, order)
        }
    }

    pub fn state(&self, d: &Domain, t: f64) -> State3 {
        let l = [d.lx, d.ly, d.lz];
        let (gt, _) = g(t);
        let rho = Field::scalar_from_fn(d, |x, y, z| 1.0 + AMP * gt * self.at(0, [x, y, z], l, [0; 3]));
        let u = Field::vector_from_fn(d, |x, y, z| [1, 2, 3].map(|c| AMP * gt * self.at(c, [x, y, z], l, [0; 3])));
        State3::new(rho, u, t).unwrap()
    }

    /// Spatial factors of the fields at every cell centre.
    pub fn tables(&self, d: &Domain) -> Vec<Cell> {
        let l = [d.lx, d.ly, d.lz];
        let e = |b: usize| {
            let mut o = [0u32; 3];
            o[b] += 1;
            o
        };
        let e2 = |a: usize, b: usize| {
            let mut o = [0u32; 3];
            o[a] += 1;
            o[b] += 1;
            o
        };
        let mut out = Vec::with_capacity(d.ncells());
        for k in 0..d.nz {
            for j in 0..d.ny {
                for i in 0..d.nx {
                    let p = [d.x(i), d.y(j), d.z(k)];
                    out.push(Cell {
                        phi: self.at(0, p, l, [0; 3]),
                        gphi: std::array::from_fn(|b| self.at(0, p, l, e(b))),
                        psi: std::array::from_fn(|a| self.at(a + 1, p, l, [0; 3])),
                        gpsi: std::array::from_fn(|a| std::array::from_fn(|b| self.at(a + 1, p, l, e(b)))),
                        lap: std::array::from_fn(|a| (0..3).map(|b| self.at(a + 1, p, l, e2(b, b))).sum()),
                        graddiv: std::array::from_fn(|a| (0..3).map(|b| self.at(b + 1, p, l, e2(a, b))).sum()),
                    });
                }
            }
        }
        out
    }

    /// `(S_ρ, S_m)` making the fields exact solutions of the forced system.
    pub fn sources(&self, d: &Domain, cells: &[Cell], t: f64) -> (Field, Field) {
        let (gt, dg) = g(t);
        let lam = self.visc.lame_second();
        let n = d.ncells();
        let mut sr = vec![0.0; n];
        let mut sm = vec![0.0; 3 * n];
        for (idx, c) in cells.iter().enumerate() {
            let rho = 1.0 + AMP * gt * c.phi;
            let rho_t = AMP * dg * c.phi;
            let grho = c.gphi.map(|v| AMP * gt * v);
            let u = c.psi.map(|v| AMP * gt * v);
            let u_t = c.psi.map(|v| AMP * dg * v);
            let gu = c.gpsi.map(|r| r.map(|v| AMP * gt * v));
            let div: f64 = (0..3).map(|b| gu[b][b]).sum();
            sr[idx] = rho_t + (0..3).map(|b| grho[b] * u[b]).sum::<f64>() + rho * div;
            for a in 0..3 {
                let mut s = rho_t * u[a] + rho * u_t[a] + self.law.dp(rho) * grho[a];
                for b in 0..3 {
                    s += grho[b] * u[a] * u[b] + rho * gu[a][b] * u[b];
                }
                s += rho * u[a] * div;
                s -= AMP * gt * (self.visc.mu * c.lap[a] + lam * c.graddiv[a]);
                sm[a * n + idx] = s;
            }
        }
        (Field::from_vec(d.dims(), 1, sr).unwrap(), Field::from_vec(d.dims(), 3, sm).unwrap())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Cell {
    phi: f64,
    gphi: [f64; 3],
    psi: [f64; 3],
    gpsi: [[f64; 3]; 3],
    lap: [f64; 3],
    graddiv: [f64; 3],
}

/// `ρ = 1 + A g(t)(cos πz + ½cos 2πz)`, `u = A g(t)(sin πz + 0.3 sin 2πz)`.
pub struct Mms1 {
    pub law: Law,
    pub visc: Visc,
}

fn modes(z: f64) -> [[f64; 3]; 2] {
    use std::f64::consts::PI;
    let (w1, w2) = (PI, 2.0 * PI);
    [
        [
            (w1 * z).cos() + 0.5 * (w2 * z).cos(),
            -w1 * (w1 * z).sin() - 0.5 * w2 * (w2 * z).sin(),
            -w1 * w1 * (w1 * z).cos() - 0.5 * w2 * w2 * (w2 * z).cos(),
        ],
        [
            (w1 * z).sin() + 0.3 * (w2 * z).sin(),
            w1 * (w1 * z).cos() + 0.3 * w2 * (w2 * z).cos(),
            -w1 * w1 * (w1 * z).sin() - 0.3 * w2 * w2 * (w2 * z).sin(),
        ],
    ]
}

impl Mms1 {
    pub fn profile(&self, nz: usize, t: f64) -> Profile {
        let (gt, _) = g(t);
        let h = 1.0 / nz as f64;
        let zs: Vec<f64> = (0..nz).map(|k| (k as f64 + 0.5) * h).collect();
        Profile {
            rho: zs.iter().map(|&z| 1.0 + AMP * gt * modes(z)[0][0]).collect(),
            u: zs.iter().map(|&z| AMP * gt * modes(z)[1][0]).collect(),
            t,
        }
    }

    pub fn sources(&self, nz: usize, t: f64) -> (Vec<f64>, Vec<f64>) {
        let (gt, dg) = g(t);
        let h = 1.0 / nz as f64;
        let nu = self.visc.nu();
        (0..nz)
            .map(|k| {
                let z = (k as f64 + 0.5) * h;
                let [r, v] = modes(z);
                let rho = 1.0 + AMP * gt * r[0];
                let (rho_t, rho_z) = (AMP * dg * r[0], AMP * gt * r[1]);
                let (u, u_t, u_z, u_zz) = (AMP * gt * v[0], AMP * dg * v[0], AMP * gt * v[1], AMP * gt * v[2]);
                let s_rho = rho_t + rho_z * u + rho * u_z;
                let s_m = rho_t * u + rho * u_t + self.law.dp(rho) * rho_z + rho_z * u * u + 2.0 * rho * u * u_z - nu * u_zz;
                (s_rho, s_m)
            })
            .unzip()
    }
}

/// Root mean square of a difference of slices.
pub fn rms_diff(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64).sqrt()
}

pub fn orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Errors at `t_end` of forced 3D runs on `n × n × 2n` channels at `ε = ½`.
pub fn study_3d(ns: &[usize], t_end: f64) -> Vec<f64> {
    use thinflow::Solver3D;
    let law = Law::new(1.0, 2.0).unwrap();
    let visc = Visc::new(0.1, 0.05).unwrap();
    let mms = Mms3::new(11, law, visc);
    ns.iter()
        .map(|&n| {
            let d = thinflow::build_channel(0.5, n, n, 2 * n).unwrap();
            let solver = Solver3D::new(law, visc, d);
            let cells = mms.tables(&d);
            let forcing = |t: f64| Ok(mms.sources(&d, &cells, t));
            let s0 = mms.state(&d, 0.0);
            let (dt, steps) = solver.run_dt(&s0, t_end, 0.4).unwrap();
            let end = solver.evolve(&s0, dt, steps, steps, Some(&forcing), |_, _| Ok(())).unwrap();
            let exact = mms.state(&d, t_end);
            let er = rms_diff(end.rho.as_slice(), exact.rho.as_slice());
            let eu = rms_diff(end.u.as_slice(), exact.u.as_slice());
            er.max(eu)
        })
        .collect()
}

/// Errors at `t_end` of forced 1D runs.
pub fn study_1d(nzs: &[usize], t_end: f64) -> Vec<f64> {
    use thinflow::Solver1D;
    let law = Law::new(1.0, 2.0).unwrap();
    let visc = Visc::new(0.1, 0.05).unwrap();
    let mms = Mms1 { law, visc };
    nzs.iter()
        .map(|&nz| {
            let solver = Solver1D::new(law, visc);
            let forcing = |t: f64| Ok(mms.sources(nz, t));
            let traj = solver.evolve_forced(&mms.profile(nz, 0.0), t_end, 1, 0.4, Some(&forcing)).unwrap();
            let end = traj.profiles.last().unwrap();
            let exact = mms.profile(nz, t_end);
            rms_diff(&end.rho, &exact.rho).max(rms_diff(&end.u, &exact.u))
        })
        .collect()
}
