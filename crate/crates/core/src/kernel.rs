//! Compactly supported Wendland kernels in one dimension.
//!
//! `φ_τ(r) = p_τ(r)` on `[0, 1]` and zero beyond, where `p_τ` has degree
//! `ν + 2τ` with `ν = τ + 1`. The coefficients come from the integral
//! recursion starting at the truncated power `(1 - r)^ν`; each step applies
//! `r ↦ ∫_r^1 t p(t) dt`, which maps `Σ d_j r^j` to
//! `Σ d_j/(j+2) - Σ d_j r^{j+2}/(j+2)`.
//!
//! The table is built in exact rational arithmetic and converted to `f64`
//! once. No normalization is applied, so the polynomial is a positive
//! multiple of the textbook closed form. Cardinal functions do not see that
//! multiple.
//!
//! Evaluation switches to the expansion in `u = 1 - r` on the outer half of
//! the support. The monomial form cancels badly near the edge, where `p_τ`
//! vanishes to order `ν + τ`, while the inner half keeps odd derivatives
//! exactly zero at the origin.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Highest derivative order tabulated at build time.
pub const MAX_ORDER: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct WendlandKernel {
    tau: usize,
    nu: usize,
    coeffs: Vec<Vec<f64>>,
    // derivs[m] holds the coefficients of p_τ^{(m)} in powers of r
    derivs: Vec<Vec<f64>>,
    // edge[m] holds p_τ^{(m)}(1 - u) in powers of u, leading zeros stripped
    edge: Vec<EdgeExpansion>,
    scale: f64,
}

/// Exact recursion table `d_{j,s}` for `s = 0..=tau`.
pub fn wendland_table(tau: usize) -> Vec<Vec<BigRational>> {
    let nu = tau + 1;
    let mut table = Vec::with_capacity(tau + 1);
    let base: Vec<BigRational> = (0..=nu)
        .map(|j| {
            let b = binomial(nu, j);
            if j % 2 == 0 {
                b
            } else {
                -b
            }
        })
        .collect();
    table.push(base);
    for s in 0..tau {
        let prev = &table[s];
        let len = nu + 2 * s + 3;
        let mut next = vec![BigRational::zero(); len];
        next[0] = prev
            .iter()
            .enumerate()
            .fold(BigRational::zero(), |acc, (j, d)| acc + d / int(j + 2));
        for j in 2..len {
            next[j] = -(&prev[j - 2]) / int(j);
        }
        table.push(next);
    }
    table
}

fn int(v: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

fn binomial(n: usize, k: usize) -> BigRational {
    let mut acc = BigRational::one();
    for i in 0..k {
        acc = acc * int(n - i) / int(i + 1);
    }
    acc
}

fn differentiate(p: &[BigRational]) -> Vec<BigRational> {
    p.iter().enumerate().skip(1).map(|(j, c)| c * int(j)).collect()
}

#[derive(Debug, Clone, PartialEq)]
struct EdgeExpansion {
    zeros: i32,
    coeffs: Vec<f64>,
}

impl EdgeExpansion {
    // Σ_j d_j (1-u)^j expanded in u
    fn new(p: &[BigRational]) -> Self {
        let mut q = vec![BigRational::zero(); p.len().max(1)];
        for (j, d) in p.iter().enumerate() {
            for (k, slot) in q.iter_mut().enumerate().take(j + 1) {
                let term = d * binomial(j, k);
                if k % 2 == 0 {
                    *slot += term;
                } else {
                    *slot -= term;
                }
            }
        }
        let zeros = q.iter().take_while(|c| c.is_zero()).count();
        let coeffs = q[zeros.min(q.len())..]
            .iter()
            .map(|c| c.to_f64().expect("finite rational"))
            .collect();
        Self {
            zeros: zeros as i32,
            coeffs,
        }
    }

    #[inline]
    fn eval(&self, u: f64) -> f64 {
        horner(&self.coeffs, u) * u.powi(self.zeros)
    }
}

fn horner(p: &[f64], r: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * r + c)
}

impl WendlandKernel {
    pub fn new(tau: usize, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidInput(format!("kernel scale must be positive, got {scale}")));
        }
        let table = wendland_table(tau);
        let to_f64 = |row: &[BigRational]| -> Vec<f64> { row.iter().map(|d| d.to_f64().expect("finite rational")).collect() };
        let coeffs: Vec<Vec<f64>> = table.iter().map(|row| to_f64(row)).collect();
        let max_order = (2 * tau).min(MAX_ORDER);
        let mut exact = vec![table[tau].clone()];
        for m in 1..=max_order {
            let d = differentiate(&exact[m - 1]);
            exact.push(d);
        }
        Ok(Self {
            tau,
            nu: tau + 1,
            coeffs,
            derivs: exact.iter().map(|p| to_f64(p)).collect(),
            edge: exact.iter().map(|p| EdgeExpansion::new(p)).collect(),
            scale,
        })
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Full recursion table, `coeffs()[s][j] = d_{j,s}`.
    pub fn coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    /// Coefficients of `p_τ` in increasing powers of `r`.
    pub fn polynomial(&self) -> &[f64] {
        &self.derivs[0]
    }

    pub fn max_order(&self) -> usize {
        self.derivs.len() - 1
    }

    /// Same kernel with a different support radius.
    pub fn with_scale(&self, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidInput(format!("kernel scale must be positive, got {scale}")));
        }
        Ok(Self { scale, ..self.clone() })
    }

    /// The kernel multiplied by a positive constant.
    pub fn times(&self, factor: f64) -> Self {
        let mul = |rows: &[Vec<f64>]| -> Vec<Vec<f64>> {
            rows.iter().map(|r| r.iter().map(|c| c * factor).collect()).collect()
        };
        let edge = self
            .edge
            .iter()
            .map(|e| EdgeExpansion {
                zeros: e.zeros,
                coeffs: e.coeffs.iter().map(|c| c * factor).collect(),
            })
            .collect();
        Self {
            coeffs: mul(&self.coeffs),
            derivs: mul(&self.derivs),
            edge,
            ..self.clone()
        }
    }

    /// `d^order/dx^order Φ(x)` with `Φ(x) = φ_τ(|x| / scale)`.
    pub fn eval(&self, x: f64, order: usize) -> Result<f64> {
        if order > 2 * self.tau || order > MAX_ORDER {
            return Err(Error::KernelOrder {
                order,
                tau: self.tau,
            });
        }
        Ok(self.derivative(x, order))
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        let r = x.abs() / self.scale;
        if r >= 1.0 {
            0.0
        } else {
            self.poly(0, r)
        }
    }

    #[inline]
    fn poly(&self, order: usize, r: f64) -> f64 {
        if r < 0.5 {
            horner(&self.derivs[order], r)
        } else {
            self.edge[order].eval(1.0 - r)
        }
    }

    /// Unchecked derivative; `order` must not exceed [`Self::max_order`].
    #[inline]
    pub fn derivative(&self, x: f64, order: usize) -> f64 {
        let r = x.abs() / self.scale;
        if r >= 1.0 {
            return 0.0;
        }
        let v = self.poly(order, r) / self.scale.powi(order as i32);
        if order % 2 == 1 && x < 0.0 {
            -v
        } else {
            v
        }
    }
}

/// Builds the Wendland kernel of smoothness `tau` with support radius `scale`.
pub fn build_wendland(tau: usize, scale: f64) -> Result<WendlandKernel> {
    WendlandKernel::new(tau, scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::{Cholesky, DenseMatrix};
    use crate::numerics::rng::RngStream;

    fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    }

    fn one_minus_r_pow(k: usize) -> Vec<f64> {
        (0..k).fold(vec![1.0], |acc, _| poly_mul(&acc, &[1.0, -1.0]))
    }

    #[test]
    fn tau_zero_is_truncated_power() {
        let k = build_wendland(0, 1.0).unwrap();
        assert_eq!(k.polynomial(), &[1.0, -1.0]);
    }

    #[test]
    fn tau_one_matches_hand_recursion() {
        // 1/12 - r^2/2 + 2r^3/3 - r^4/4 = (1-r)^3 (1+3r) / 12
        let k = build_wendland(1, 1.0).unwrap();
        let expected = poly_mul(&one_minus_r_pow(3), &[1.0, 3.0]);
        for (c, e) in k.polynomial().iter().zip(&expected) {
            assert!((c * 12.0 - e).abs() < 1e-14);
        }
    }

    #[test]
    fn table_shape_and_vanishing_linear_term() {
        for tau in 0..=6 {
            let k = build_wendland(tau, 1.0).unwrap();
            for (s, row) in k.coeffs().iter().enumerate() {
                assert_eq!(row.len(), k.nu() + 2 * s + 1);
                if s > 0 {
                    assert_eq!(row[1], 0.0);
                }
            }
            assert_eq!(k.polynomial().len() - 1, k.nu() + 2 * tau);
        }
    }

    #[test]
    fn proportional_to_closed_forms() {
        let cases: [(usize, Vec<f64>); 3] = [
            (2, poly_mul(&one_minus_r_pow(5), &[1.0, 5.0, 8.0])),
            (3, poly_mul(&one_minus_r_pow(7), &[1.0, 7.0, 19.0, 21.0])),
            (4, poly_mul(&one_minus_r_pow(9), &[7.0, 63.0, 237.0, 453.0, 384.0])),
        ];
        for (tau, closed) in cases {
            let p = build_wendland(tau, 1.0).unwrap().polynomial().to_vec();
            assert_eq!(p.len(), closed.len());
            let ratios: Vec<f64> = p
                .iter()
                .zip(&closed)
                .filter(|(_, c)| **c != 0.0)
                .map(|(a, b)| a / b)
                .collect();
            let r0 = ratios[0];
            assert!(r0 > 0.0);
            for r in &ratios {
                assert!(((r - r0) / r0).abs() < 1e-12, "tau {tau}: {ratios:?}");
            }
            // zero pattern agrees too
            for (a, c) in p.iter().zip(&closed) {
                if *c == 0.0 {
                    assert!(a.abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn support_and_positivity() {
        let k = build_wendland(4, 1.0).unwrap();
        assert_eq!(k.eval(1.5, 0).unwrap(), 0.0);
        assert_eq!(k.eval(1.0, 0).unwrap(), 0.0);
        for i in 0..100 {
            let r = i as f64 / 100.0;
            assert!(k.value(r) > 0.0);
        }
    }

    #[test]
    fn odd_derivatives_vanish_at_origin() {
        let k = build_wendland(4, 1.0).unwrap();
        assert_eq!(k.eval(0.0, 1).unwrap(), 0.0);
        assert_eq!(k.eval(0.0, 3).unwrap(), 0.0);
    }

    #[test]
    fn derivative_matches_central_difference() {
        let k = build_wendland(4, 1.0).unwrap();
        let h = 1e-6;
        let fd = (k.value(0.3 + h) - k.value(0.3 - h)) / (2.0 * h);
        let d = k.eval(0.3, 1).unwrap();
        assert!(((fd - d) / d).abs() < 1e-6, "{fd} vs {d}");
    }

    #[test]
    fn derivatives_vanish_towards_support_edge() {
        let k = build_wendland(4, 1.0).unwrap();
        for m in 0..=3 {
            assert!(k.derivative(1.0 - 1e-9, m).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_order_beyond_smoothness() {
        let k = build_wendland(1, 1.0).unwrap();
        assert!(k.eval(0.2, 2).is_ok());
        assert_eq!(k.eval(0.2, 3), Err(Error::KernelOrder { order: 3, tau: 1 }));
        assert!(build_wendland(4, 1.0).unwrap().eval(0.2, 4).is_err());
    }

    #[test]
    fn rejects_non_positive_scale() {
        assert!(build_wendland(2, 0.0).is_err());
        assert!(build_wendland(2, -1.0).is_err());
    }

    #[test]
    fn gram_matrix_is_positive_definite() {
        let sc = 0.7;
        let k = build_wendland(4, sc).unwrap();
        let mut s = RngStream::new(5, 0);
        for _ in 0..20 {
            let xs: Vec<f64> = (0..8).map(|_| 4.0 * sc * s.uniform()).collect();
            let g = DenseMatrix::from_fn(8, 8, |i, j| k.value(xs[i] - xs[j]));
            let chol = Cholesky::factor_dense(&g).unwrap();
            assert!(chol.pivots().iter().all(|&p| p > 0.0));
        }
    }
}
