//! Compressible barotropic Navier-Stokes on thin slip channels.
//!
//! The numerical core is generic over the scalar type; the aliases below fix
//! it to `f64`, which is what the experiments and the command line use.

pub mod energetics;
pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod fieldcalc;
pub mod geometry;
pub mod inequalities;
pub mod output;
pub mod physics;
pub mod scalar;
pub mod solver1d;
pub mod solver3d;
pub mod trig;

pub use error::{Error, Result};
pub use geometry::{build_channel, build_scaled_cube, domain_metrics, GridFunction, ThinDomain};
pub use physics::{PressureLaw, Viscosity};
pub use scalar::Real;
pub use solver1d::{CanonicalData, InitialData1D, Profile1D, Solver1D};
pub use solver3d::{FluidState3D, Scheme, Solver3D};

pub type Domain = ThinDomain<f64>;
pub type Field = GridFunction<f64>;
pub type State3 = FluidState3D<f64>;
pub type Profile = Profile1D<f64>;
pub type Law = PressureLaw<f64>;
pub type Visc = Viscosity<f64>;
