//! Simulation of the strain-limiting Kelvin–Voigt system
//!
//! ```text
//! ∂ₜₜu − div T = f,        α ε(u) + β ∂ₜε(u) = G(T)
//! ```
//!
//! with an implicit, monotone constitutive map `G`. Space is discretized by
//! vector P1 finite elements with a Dirichlet lift, time by RK4 or the
//! implicit midpoint rule, and the stress is recovered at every quadrature
//! point by inverting the Tikhonov-regularized map `G_n`.

pub mod constitutive;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod extended;
pub mod fespace;
pub mod field;
pub mod quadrature;
pub mod scenarios;
pub mod symtensor;
pub mod verification;

pub use constitutive::{ConstitutiveModel, Regularization, ScalarPotential};
pub use diagnostics::{ConvergenceReport, EnergyLedger, StrainMonitor, StudyAxis};
pub use dynamics::{Observer, Scheme, Simulator, SolverConfig, State, Trajectory};
pub use error::{Error, Result};
pub use extended::Extended;
pub use fespace::{FESpace, Mesh};
pub use field::{AnalyticField, SharedField, VectorField};
pub use scenarios::{MeshSpec, Scenario};
pub use symtensor::{PackedOperator, SymTensor};
