//! Shared numerical infrastructure.

pub mod linalg;
pub mod lowdisc;
pub mod quadrature;
pub mod rng;
pub mod stats;

pub use linalg::{spd_solve, BandRows, Cholesky, DenseMatrix};
pub use lowdisc::lowdisc_1d;
pub use quadrature::{integrate_adaptive, QuadratureKind, QuadratureRule};
pub use rng::RngStream;
pub use stats::mean_and_std_error;

/// Draws one standard normal variate from `stream`.
pub fn gaussian(stream: &mut RngStream) -> f64 {
    stream.gaussian()
}

/// Integrates `f` over `[a, b]` with the composite `rule`.
pub fn integrate<F: FnMut(f64) -> f64>(rule: &QuadratureRule, f: F, a: f64, b: f64) -> crate::Result<f64> {
    rule.integrate(f, a, b)
}
