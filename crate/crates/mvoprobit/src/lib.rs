//! Multivariate (1–3 equation) ordered probit models estimated by
//! full-information maximum likelihood.
//!
//! The crate is organized around the pieces of a joint stage-of-change
//! analysis:
//!
//! * [`mvn`] — univariate/bivariate/trivariate standard-normal CDFs and the
//!   box probabilities that enter the likelihood.
//! * [`model`] — model specification, parameter containers, and the bijective
//!   map between constrained parameters and an unconstrained optimization
//!   vector.
//! * [`likelihood`] — per-observation cell probabilities, the sample
//!   log-likelihood, and finite-difference gradients.
//! * [`estimate`] — BFGS maximization, standard errors, fit statistics, and
//!   the likelihood-ratio test against the independent (diagonal-correlation)
//!   model.
//! * [`simulate`] — seeded synthetic data generation for parameter-recovery
//!   studies.
//! * [`features`] — survey staging algorithms, stage merging, frequency-band
//!   midpoints, and the SEI/HHI multimodality indices.
//! * [`predict`] — marginal and joint stage probabilities and two-covariate
//!   adoption contour grids.

pub mod error;
pub mod estimate;
pub mod features;
pub mod likelihood;
pub mod model;
pub mod mvn;
pub mod predict;
pub mod simulate;

mod par;

pub use error::Error;
pub use estimate::{fit, lr_test_independence, FitOptions, FitResult, LrTest};
pub use likelihood::ObservationTable;
pub use model::{CorrMatrix, EquationSpec, ModelSpec, ParameterSet, UnconstrainedVector};
pub use predict::{contour_grid, ContourGrid, ContourRequest};
pub use simulate::{sample_dataset, CovariateGenerator, CovariateKind};
pub use mvn::Corr3;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
