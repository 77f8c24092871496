//! Experiment configuration: a TOML document with one table per concern.
//! Every key is optional; unknown keys are rejected. See
//! `configs/experiment.toml` in the repository root for a full document.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{RobustnessConfig, RunSetup, ThinLimitConfig, DENSITY_SHARE};
use crate::inequalities::SuiteConfig;
use crate::physics::{PressureLaw, Viscosity};
use crate::solver1d::CanonicalData;
use crate::solver3d::Scheme;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PressureSection {
    pub a: f64,
    pub gamma: f64,
}

impl Default for PressureSection {
    fn default() -> Self {
        Self { a: 1.0, gamma: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ViscositySection {
    pub mu: f64,
    pub eta: f64,
}

impl Default for ViscositySection {
    fn default() -> Self {
        Self { mu: 0.1, eta: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    pub epsilon: f64,
    /// Used by `thinlimit`; strictly decreasing.
    pub epsilon_list: Vec<f64>,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    /// Cells of the 1D limit solution used as reference.
    pub nz_ref: usize,
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self { epsilon: 0.5, epsilon_list: vec![0.4, 0.2, 0.1], nx: 4, ny: 4, nz: 16, nz_ref: 512 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSection {
    pub t_end: f64,
    pub cfl: f64,
    pub sample_every: usize,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self { t_end: 0.25, cfl: 0.4, sample_every: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceSection {
    pub rho_bar: f64,
    pub b: f64,
    pub s: f64,
}

impl Default for ReferenceSection {
    fn default() -> Self {
        Self { rho_bar: 1.0, b: 0.1, s: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbationSection {
    pub delta: f64,
    /// `[lo, hi]` for `critical`; `lo` defaults to the threshold.
    pub bracket: Option<[f64; 2]>,
    pub bisection_iters: usize,
    pub seed: u64,
    pub density_share: f64,
    /// Relative bump amplitude of `thinlimit`.
    pub thin_delta: f64,
}

impl Default for PerturbationSection {
    fn default() -> Self {
        Self { delta: 0.0, bracket: None, bisection_iters: 12, seed: 1, density_share: DENSITY_SHARE, thin_delta: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstantsSection {
    /// Gronwall constant; calibrated on a pilot run at `ε = 1` when absent.
    pub c_gronwall: Option<f64>,
    pub c_geom: f64,
    pub pilot_delta: f64,
    /// Volume used by `omega`; the channel volume `ε²` when absent.
    pub volume: Option<f64>,
}

impl Default for ConstantsSection {
    fn default() -> Self {
        Self { c_gronwall: None, c_geom: 1.0, pilot_delta: 1e-4, volume: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeSection {
    pub dissipation: f64,
    pub density_floor: f64,
}

impl Default for SchemeSection {
    fn default() -> Self {
        let s = Scheme::<f64>::default();
        Self { dissipation: s.dissipation, density_floor: s.density_floor }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InequalitySection {
    pub epsilons: [f64; 4],
    pub samples: usize,
    pub n: usize,
    pub lame_samples: usize,
    pub safety: f64,
    pub fit_tolerance: f64,
}

impl Default for InequalitySection {
    fn default() -> Self {
        let s = SuiteConfig::default();
        Self { epsilons: s.epsilons, samples: s.samples, n: s.n, lame_samples: s.lame_samples, safety: s.safety, fit_tolerance: s.fit_tolerance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceSection {
    /// `energetics` passes when the identity residual stays below this
    /// fraction of the peak dissipation.
    pub identity_relative: f64,
    /// Samples of the energetics run.
    pub identity_samples: usize,
}

impl Default for ToleranceSection {
    fn default() -> Self {
        Self { identity_relative: 0.01, identity_samples: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub pressure: PressureSection,
    pub viscosity: ViscositySection,
    pub geometry: GeometrySection,
    pub time: TimeSection,
    pub reference: ReferenceSection,
    pub perturbation: PerturbationSection,
    pub constants: ConstantsSection,
    pub scheme: SchemeSection,
    pub inequalities: InequalitySection,
    pub tolerances: ToleranceSection,
    pub output: OutputSection,
}

/// Parses and validates; parse errors carry the TOML line and key.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string().trim_end().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn unit_interval(v: f64) -> bool {
    v > 0.0 && v <= 1.0
}

impl ExperimentConfig {
    /// Every violated constraint, in one error.
    pub fn validate(&self) -> Result<()> {
        let mut bad: Vec<String> = Vec::new();
        let mut req = |ok: bool, msg: String| {
            if !ok {
                bad.push(msg);
            }
        };
        let fin = |v: f64| v.is_finite();
        let p = &self.pressure;
        req(p.a > 0.0 && fin(p.a), format!("pressure.a must be positive, got {}", p.a));
        req(p.gamma > 1.0 && fin(p.gamma), format!("pressure.gamma must exceed 1, got {}", p.gamma));
        let v = &self.viscosity;
        req(v.mu > 0.0 && fin(v.mu), format!("viscosity.mu must be positive, got {}", v.mu));
        req(v.eta >= 0.0 && fin(v.eta), format!("viscosity.eta must be nonnegative, got {}", v.eta));
        let g = &self.geometry;
        req(unit_interval(g.epsilon), format!("geometry.epsilon must lie in (0, 1], got {}", g.epsilon));
        req(!g.epsilon_list.is_empty(), "geometry.epsilon_list must not be empty".into());
        req(g.epsilon_list.iter().all(|&e| unit_interval(e)), format!("geometry.epsilon_list entries must lie in (0, 1], got {:?}", g.epsilon_list));
        req(
            g.epsilon_list.windows(2).all(|w| w[1] < w[0]),
            format!("geometry.epsilon_list must be strictly decreasing, got {:?}", g.epsilon_list),
        );
        for (name, n) in [("nx", g.nx), ("ny", g.ny), ("nz", g.nz)] {
            req(n >= 2, format!("geometry.{name} must be at least 2, got {n}"));
        }
        req(g.nz >= 4, format!("geometry.nz must be at least 4, got {}", g.nz));
        req(
            g.nz > 0 && g.nz_ref >= g.nz && g.nz_ref % g.nz == 0,
            format!("geometry.nz_ref must be a multiple of nz, got {} for nz = {}", g.nz_ref, g.nz),
        );
        let t = &self.time;
        req(t.t_end >= 0.0 && fin(t.t_end), format!("time.t_end must be finite and >= 0, got {}", t.t_end));
        req(unit_interval(t.cfl), format!("time.cfl must lie in (0, 1], got {}", t.cfl));
        req(t.sample_every >= 1, "time.sample_every must be at least 1".into());
        let r = &self.reference;
        req(r.rho_bar > 0.0 && fin(r.rho_bar), format!("reference.rho_bar must be positive, got {}", r.rho_bar));
        req(r.b.abs() < r.rho_bar, format!("reference.b must satisfy |b| < rho_bar, got {}", r.b));
        req(fin(r.s), format!("reference.s must be finite, got {}", r.s));
        let q = &self.perturbation;
        req(q.delta >= 0.0 && fin(q.delta), format!("perturbation.delta must be finite and >= 0, got {}", q.delta));
        if let Some([lo, hi]) = q.bracket {
            req(lo >= 0.0 && hi > lo && fin(hi), format!("perturbation.bracket needs 0 <= lo < hi, got [{lo}, {hi}]"));
        }
        req((0.0..=1.0).contains(&q.density_share), format!("perturbation.density_share must lie in [0, 1], got {}", q.density_share));
        req(q.thin_delta >= 0.0 && fin(q.thin_delta), format!("perturbation.thin_delta must be >= 0, got {}", q.thin_delta));
        let c = &self.constants;
        if let Some(cg) = c.c_gronwall {
            req(cg > 0.0 && fin(cg), format!("constants.c_gronwall must be positive, got {cg}"));
        }
        if let Some(vol) = c.volume {
            req(vol > 0.0 && fin(vol), format!("constants.volume must be positive, got {vol}"));
        }
        req(c.c_geom > 0.0 && fin(c.c_geom), format!("constants.c_geom must be positive, got {}", c.c_geom));
        req(c.pilot_delta > 0.0 && fin(c.pilot_delta), format!("constants.pilot_delta must be positive, got {}", c.pilot_delta));
        let s = &self.scheme;
        req(s.dissipation >= 0.0 && fin(s.dissipation), format!("scheme.dissipation must be >= 0, got {}", s.dissipation));
        req(s.density_floor >= 0.0 && fin(s.density_floor), format!("scheme.density_floor must be >= 0, got {}", s.density_floor));
        let i = &self.inequalities;
        req(i.epsilons.iter().all(|&e| unit_interval(e)), format!("inequalities.epsilons must lie in (0, 1], got {:?}", i.epsilons));
        req(i.epsilons.windows(2).all(|w| w[1] < w[0]), format!("inequalities.epsilons must be strictly decreasing, got {:?}", i.epsilons));
        req(i.samples >= 1, "inequalities.samples must be at least 1".into());
        req(i.n >= 2, format!("inequalities.n must be at least 2, got {}", i.n));
        req(i.safety > 0.0, format!("inequalities.safety must be positive, got {}", i.safety));
        req(i.fit_tolerance > 0.0, format!("inequalities.fit_tolerance must be positive, got {}", i.fit_tolerance));
        let tol = &self.tolerances;
        req(tol.identity_relative > 0.0, format!("tolerances.identity_relative must be positive, got {}", tol.identity_relative));
        req(tol.identity_samples >= 1, "tolerances.identity_samples must be at least 1".into());
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::config(format!("invalid configuration:\n  - {}", bad.join("\n  - "))))
        }
    }

    pub fn run_setup(&self) -> RunSetup {
        RunSetup {
            law: PressureLaw { a: self.pressure.a, gamma: self.pressure.gamma },
            visc: Viscosity { mu: self.viscosity.mu, eta: self.viscosity.eta },
            scheme: Scheme { dissipation: self.scheme.dissipation, density_floor: self.scheme.density_floor },
            data: CanonicalData { rho_bar: self.reference.rho_bar, b: self.reference.b, s: self.reference.s },
            nx: self.geometry.nx,
            ny: self.geometry.ny,
            nz: self.geometry.nz,
            t_end: self.time.t_end,
            cfl: self.time.cfl,
            sample_every: self.time.sample_every,
        }
    }

    /// Robustness settings at the configured `ε` and `delta`; `c_gronwall`
    /// falls back to 1 when it is still to be calibrated.
    pub fn robustness(&self) -> RobustnessConfig {
        RobustnessConfig {
            setup: self.run_setup(),
            epsilon: self.geometry.epsilon,
            delta: self.perturbation.delta,
            seed: self.perturbation.seed,
            c_gronwall: self.constants.c_gronwall.unwrap_or(1.0),
            c_geom: self.constants.c_geom,
            density_share: self.perturbation.density_share,
        }
    }

    pub fn thinlimit(&self) -> ThinLimitConfig {
        ThinLimitConfig {
            setup: self.run_setup(),
            epsilons: self.geometry.epsilon_list.clone(),
            delta: self.perturbation.thin_delta,
            seed: self.perturbation.seed,
            nz_ref: self.geometry.nz_ref,
        }
    }

    pub fn suite(&self) -> SuiteConfig {
        let i = &self.inequalities;
        SuiteConfig {
            epsilons: i.epsilons,
            samples: i.samples,
            n: i.n,
            seed: self.perturbation.seed,
            safety: i.safety,
            fit_tolerance: i.fit_tolerance,
            lame_samples: i.lame_samples,
        }
    }

    /// Canonical JSON of the whole configuration, the input of the hash.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("configuration serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document_takes_defaults() {
        let cfg = parse_config("[geometry]\nepsilon = 0.5\n\n[time]\nt_end = 0.1\n").unwrap();
        let mut expect = ExperimentConfig::default();
        expect.time.t_end = 0.1;
        assert_eq!(cfg, expect);
        assert_eq!(parse_config("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn rejects_bad_gamma() {
        let err = parse_config("[pressure]\ngamma = 0.5\n").unwrap_err();
        assert!(matches!(&err, Error::Config(m) if m.contains("gamma")), "{err}");
    }

    #[test]
    fn rejects_increasing_list() {
        let err = parse_config("[geometry]\nepsilon_list = [0.1, 0.2]\n").unwrap_err();
        assert!(err.to_string().contains("strictly decreasing"), "{err}");
    }

    #[test]
    fn lists_every_violation() {
        let err = parse_config("[pressure]\ngamma = 0.5\n[viscosity]\nmu = -1.0\n[time]\ncfl = 2.0\n").unwrap_err().to_string();
        assert!(err.contains("gamma") && err.contains("mu") && err.contains("cfl"), "{err}");
    }

    #[test]
    fn unknown_keys_report_location() {
        let err = parse_config("[time]\nt_end = 0.1\nsteps = 3\n").unwrap_err().to_string();
        assert!(err.contains("steps") && err.contains("line 3"), "{err}");
        assert!(parse_config("[nonsense]\nx = 1\n").is_err());
        assert!(parse_config("[time\n").is_err());
    }

    #[test]
    fn example_document_parses() {
        let text = include_str!("../../../configs/experiment.toml");
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.geometry.epsilon, 0.5);
    }
}
