//! One-dimensional low-discrepancy points.
//!
//! In one dimension the Sobol' sequence coincides with the base-2 van der
//! Corput sequence, so no direction numbers are needed.

/// Base-2 radical inverse of `index`: the binary digits mirrored about the
/// radix point. `index = 0` maps to 0.
pub fn radical_inverse_base2(index: u64) -> f64 {
    index.reverse_bits() as f64 * (1.0 / 18_446_744_073_709_551_616.0)
}

/// `index`-th point of the one-dimensional sequence, counting from 1.
pub fn lowdisc_1d(index: u64) -> f64 {
    debug_assert!(index >= 1, "low-discrepancy indices start at 1");
    radical_inverse_base2(index)
}
