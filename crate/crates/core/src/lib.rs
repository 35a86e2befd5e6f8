//! FENE dumbbell micro-macro simulator.
//!
//! The configuration density `psi(x, R, t)` of elastic dumbbells with finite
//! extensibility lives on the unit disk `|R| < 1` and is coupled to an
//! incompressible Navier–Stokes flow through the Kramers stress. The crate
//! provides a positivity-preserving finite-volume Fokker–Planck solver, a
//! pseudo-spectral flow solver, a Brownian-dynamics cross-check, diagnostics
//! for the free-energy and `log^2` balance laws, and a numerical laboratory
//! for the Hardy-type inequalities that control the stress near the boundary.

pub mod cli_io;
pub mod density;
pub mod diagnostics;
pub mod error;
pub mod fokker_planck;
pub mod grid;
pub mod inequality;
pub mod linalg;
pub mod macro_flow;
pub mod model;
pub mod stochastic;
pub mod stress;

pub use density::{DiscreteEquilibrium, PhaseDensity};
pub use error::{Error, Result};
pub use fokker_planck::{FokkerPlanck, VelocityGradient};
pub use grid::ConfigGrid;
pub use model::PotentialParams;
pub use stress::StressTensor;
