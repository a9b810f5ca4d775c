//! Kernel-based collocation for HJMM forward-rate equations.
//!
//! The forward curve `r(t, x)` is represented on collocation points by a
//! Wendland-kernel interpolant, which turns the SPDE into an N-dimensional
//! SDE integrated by Euler–Maruyama. The [`oracle`] module compares against
//! the exact Vasicek solution and [`pricing`] prices caplets by Monte Carlo.

// `!(x > 0.0)` is how NaN gets rejected along with the rest
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod interpolation;
pub mod kernel;
pub mod model;
pub mod numerics;
pub mod oracle;
pub mod parallel;
pub mod pricing;
pub mod simulate;

pub use error::{Error, Result};
pub use interpolation::{CollocationSet, InterpolationOperator};
pub use kernel::{build_wendland, WendlandKernel};
pub use model::ModelSpec;
pub use parallel::Execution;
pub use simulate::{PathBatch, TimeGrid};
