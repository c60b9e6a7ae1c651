//! Phase retrieval by alternating minimization in a batch setting, with
//! random initialization, plus the Monte-Carlo machinery needed to check
//! the per-iteration angle-improvement prediction numerically.
//!
//! Modules:
//! - [`measurement`]: signals, complex-Gaussian sensing ensembles and
//!   amplitude observations;
//! - [`ops`]: the projection operators and the one-step map T;
//! - [`solver`]: the cyclic batched iteration and the plain baseline;
//! - [`metrics`]: angle, phase-invariant distance, residuals;
//! - [`horacle`]: Monte-Carlo estimates of h(theta) and h'(theta), the
//!   predicted angle map, and the growth-condition verification;
//! - [`experiments`]: the reproducible experiment harness behind the CLI.

pub mod error;
pub mod experiments;
pub mod horacle;
pub mod measurement;
pub mod metrics;
pub mod ops;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
pub use measurement::{CovarianceSpec, Observations, SensingEnsemble, Signal, C64};
pub use rng::RngStream;
