//! hp-adaptive finite elements for singularly perturbed reaction-diffusion
//! problems `-eps u'' + d(x) u = f` on an interval with homogeneous Dirichlet
//! conditions.
//!
//! The crate provides the discretization ([`assembly`]), an `eps`-robust
//! residual error estimator ([`estimator`]), the smoothness-driven adaptive
//! loop ([`adaptivity`]) and error measurement utilities ([`analysis`]).

// Negated comparisons are deliberate: NaN must fail the range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptivity;
pub mod analysis;
pub mod assembly;
pub mod error;
pub mod estimator;
pub mod mesh;
pub mod polybasis;
pub mod problem;

pub use adaptivity::{adaptive_solve, AdaptiveConfig, AdaptiveRun, AdaptiveTrace, IterationRecord};
pub use assembly::{assemble, solve, solve_system, GlobalSystem, HpSolution};
pub use error::{HpError, Result};
pub use estimator::{estimate, ElementIndicator, ErrorEstimate};
pub use mesh::{HpMesh, RefinementDecision, RefinementKind};
pub use problem::ProblemSpec;
