//! Strong approximation of scalar SDEs `dX = μ(X) dt + σ(X) dW` on `[0, 1]`
//! whose drift may jump.
//!
//! * [`piecewise`]: piecewise-smooth coefficients and problem definitions.
//! * [`transform`]: the bi-Lipschitz map `G_{z,α,ν}` that removes drift jumps.
//! * [`brownian`]: reproducible, coarsenable Brownian lattices.
//! * [`schemes`]: Euler-Maruyama, quasi-Milstein, transformed quasi-Milstein.
//! * [`study`]: Monte-Carlo strong-error estimation and rate fitting.
//! * [`catalog`]: built-in benchmark problems.
//! * [`selfcheck`]: fast invariant checks.

// `!(x > 0.0)` style tests are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod brownian;
pub mod catalog;
pub mod piecewise;
pub mod schemes;
pub mod selfcheck;
pub mod study;
pub mod transform;

pub use brownian::{generate_path, BrownianLattice};
pub use catalog::{CatalogEntry, ExactSolution};
pub use piecewise::{AssumptionClass, AtBreakpoint, Piece, PiecewiseFunction, SdeProblem, Side};
pub use schemes::{invert_transformed, Integrator, Scheme, SchemePath};
pub use study::{rate_fit, run_study, strong_error, ErrorMode, StudyConfig, StudyReport};
pub use transform::{compute_alpha, rho_max, transformed_problem, TransformParams, TransformedSde};
