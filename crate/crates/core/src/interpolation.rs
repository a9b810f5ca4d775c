//! Collocation point sets and kernel interpolation operators.
//!
//! For nodal values `v` on `Γ = {x_1 < … < x_N}` the interpolant is
//! `I(v)(x) = Σ_j c_j Φ(x - x_j)` with `K c = v`, `K = {Φ(x_i - x_j)}`.
//! Derivatives at the nodes are `K₁ K⁻¹ v` and at the evaluation points
//! `K₁ₑ K⁻¹ v`. Because `Φ` has compact support every row of `K₁`, `K₁ₑ`
//! and `Kₑ` has one contiguous run of nonzeros, and `K` is banded.

use crate::error::{Error, Result};
use crate::kernel::WendlandKernel;
use crate::model::CurveAccessor;
use crate::numerics::linalg::{BandRows, Cholesky, DenseMatrix};
use crate::numerics::lowdisc::lowdisc_1d;
use crate::numerics::quadrature::QuadratureRule;

/// Collocation points `Γ ⊂ (0, R]` and evaluation points `Γₑ ⊂ [0, ∞)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollocationSet {
    gamma: Vec<f64>,
    radius: f64,
    gamma_e: Vec<f64>,
}

/// How the collocation points are placed.
#[derive(Debug, Clone, PartialEq)]
pub enum GammaLayout {
    /// `N` uniform points on `[R/(N+1), R - R/(N+1)]` with
    /// `R = N^{1 - 1/(2τ-2)} / 5` (Vasicek error study).
    UniformInterior { tau: usize },
    /// `x_j = j/5`, `j = 1..N`, with `R = N/5` (caplet experiment, `R = 10` at `N = 50`).
    FifthSteps,
    /// `x_j = jR/N` with `R = (2/5) N^{ln 25 / ln 50}` (caplet assumption check).
    UniformToRadius,
    Explicit { points: Vec<f64>, radius: f64 },
}

/// How the evaluation points are placed.
#[derive(Debug, Clone, PartialEq)]
pub enum GammaELayout {
    /// First `m` low-discrepancy points mapped into `[R/4, 3R/4]`.
    SobolMid { m: usize },
    /// `ξ_j = (j-1) R / N`, `j = 1..N+1`; for the caplet grid this is `(j-1)/5`.
    UniformFromZero,
    Explicit(Vec<f64>),
}

/// Radius of the Vasicek-study family, `R = N^{1 - 1/(2τ-2)} / 5`.
pub fn uniform_interior_radius(n: usize, tau: usize) -> f64 {
    let exponent = 1.0 - 1.0 / (2.0 * tau as f64 - 2.0);
    (n as f64).powf(exponent) / 5.0
}

/// Radius of the caplet assumption-check family, `R = (2/5) N^{ln 25 / ln 50}`.
pub fn uniform_to_radius_radius(n: usize) -> f64 {
    0.4 * (n as f64).powf(25f64.ln() / 50f64.ln())
}

pub fn build_gamma(n: usize, layout: GammaLayout) -> Result<CollocationSet> {
    let (gamma, radius) = match layout {
        GammaLayout::Explicit { points, radius } => (points, radius),
        _ if n < 2 => {
            return Err(Error::InvalidInput(format!("need at least 2 collocation points, got {n}")));
        }
        GammaLayout::UniformInterior { tau } => {
            if tau < 2 {
                return Err(Error::InvalidInput(format!(
                    "uniform-interior layout needs tau >= 2, got {tau}"
                )));
            }
            let radius = uniform_interior_radius(n, tau);
            let h = radius / (n as f64 + 1.0);
            ((1..=n).map(|j| j as f64 * h).collect(), radius)
        }
        GammaLayout::FifthSteps => ((1..=n).map(|j| j as f64 / 5.0).collect(), n as f64 / 5.0),
        GammaLayout::UniformToRadius => {
            let radius = uniform_to_radius_radius(n);
            ((1..=n).map(|j| j as f64 * radius / n as f64).collect(), radius)
        }
    };
    CollocationSet::new(gamma, radius)
}

pub fn build_gamma_e(set: &CollocationSet, layout: GammaELayout) -> Result<CollocationSet> {
    let r = set.radius;
    let gamma_e = match layout {
        GammaELayout::SobolMid { m } => {
            if m == 0 {
                return Err(Error::InvalidInput("need at least one evaluation point".into()));
            }
            (1..=m as u64).map(|i| r / 4.0 + 0.5 * r * lowdisc_1d(i)).collect()
        }
        GammaELayout::UniformFromZero => {
            let n = set.n();
            (0..=n).map(|j| j as f64 * r / n as f64).collect()
        }
        GammaELayout::Explicit(points) => points,
    };
    set.clone().with_gamma_e(gamma_e)
}

impl CollocationSet {
    /// Validates `0 < x_1 < … < x_N <= R`.
    pub fn new(gamma: Vec<f64>, radius: f64) -> Result<Self> {
        if gamma.is_empty() {
            return Err(Error::InvalidInput("collocation set is empty".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!("radius must be positive, got {radius}")));
        }
        if !(gamma[0] > 0.0) {
            return Err(Error::InvalidInput(format!(
                "collocation points must be positive, first is {}",
                gamma[0]
            )));
        }
        if let Some(w) = gamma.windows(2).find(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidInput(format!(
                "collocation points must be strictly increasing: {} then {}",
                w[0], w[1]
            )));
        }
        let last = gamma[gamma.len() - 1];
        if last > radius {
            return Err(Error::InvalidInput(format!("point {last} lies beyond radius {radius}")));
        }
        Ok(Self {
            gamma,
            radius,
            gamma_e: Vec::new(),
        })
    }

    pub fn with_gamma_e(mut self, gamma_e: Vec<f64>) -> Result<Self> {
        if let Some(x) = gamma_e.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
            return Err(Error::InvalidInput(format!("evaluation point {x} outside [0, inf)")));
        }
        self.gamma_e = gamma_e;
        Ok(self)
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn gamma_e(&self) -> &[f64] {
        &self.gamma_e
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn n(&self) -> usize {
        self.gamma.len()
    }

    pub fn m(&self) -> usize {
        self.gamma_e.len()
    }

    /// `sup_{x ∈ (0,R)} min_j |x - x_j|`, from the sorted gaps.
    pub fn fill_distance(&self) -> f64 {
        let n = self.gamma.len();
        let half_gap = self
            .gamma
            .windows(2)
            .fold(0.0f64, |m, w| m.max(0.5 * (w[1] - w[0])));
        self.gamma[0].max(self.radius - self.gamma[n - 1]).max(half_gap)
    }
}

pub fn fill_distance(set: &CollocationSet) -> f64 {
    set.fill_distance()
}

/// Factorized kernel matrix and derivative matrices for one point set.
#[derive(Debug, Clone)]
pub struct InterpolationOperator {
    kernel: WendlandKernel,
    set: CollocationSet,
    k: DenseMatrix,
    factor: Cholesky,
    k1: BandRows,
    k1e: BandRows,
    ke: BandRows,
}

impl InterpolationOperator {
    pub fn build(kernel: WendlandKernel, set: CollocationSet) -> Result<Self> {
        if kernel.max_order() < 2 {
            return Err(Error::InvalidInput(format!(
                "collocation needs tau >= 1 for derivatives, got tau = {}",
                kernel.tau()
            )));
        }
        let g = set.gamma();
        let n = g.len();
        let m = set.m();
        let k = DenseMatrix::from_fn(n, n, |i, j| kernel.value(g[i] - g[j]));
        let factor = Cholesky::factor(&k)?;
        let sc = kernel.scale();
        let support = |x: f64| support_range(g, x, sc);
        let k1 = BandRows::build(n, n, |i| support(g[i]), |i, l| kernel.derivative(g[i] - g[l], 1));
        let ge = set.gamma_e().to_vec();
        let k1e = BandRows::build(m, n, |i| support(ge[i]), |i, l| kernel.derivative(ge[i] - g[l], 1));
        let ke = BandRows::build(m, n, |i| support(ge[i]), |i, l| kernel.value(ge[i] - g[l]));
        Ok(Self {
            kernel,
            set,
            k,
            factor,
            k1,
            k1e,
            ke,
        })
    }

    pub fn kernel(&self) -> &WendlandKernel {
        &self.kernel
    }

    pub fn set(&self) -> &CollocationSet {
        &self.set
    }

    pub fn n(&self) -> usize {
        self.set.n()
    }

    pub fn m(&self) -> usize {
        self.set.m()
    }

    pub fn k(&self) -> &DenseMatrix {
        &self.k
    }

    pub fn factorization(&self) -> &Cholesky {
        &self.factor
    }

    /// `{Φ'(x_j - x_l)}`.
    pub fn k1(&self) -> &BandRows {
        &self.k1
    }

    /// `{Φ'(ξ_j - x_l)}`.
    pub fn k1e(&self) -> &BandRows {
        &self.k1e
    }

    /// `{Φ(ξ_j - x_l)}`.
    pub fn ke(&self) -> &BandRows {
        &self.ke
    }

    /// Interpolation coefficients `c = K⁻¹ v`.
    pub fn solve(&self, v: &[f64]) -> Vec<f64> {
        self.factor.solve(v)
    }

    pub fn solve_into(&self, v: &[f64], out: &mut [f64]) {
        out.copy_from_slice(v);
        self.factor.solve_in_place(out);
    }

    /// Indices `l` with `x_l` inside the kernel support around `x`.
    pub fn support(&self, x: f64) -> std::ops::Range<usize> {
        support_range(self.set.gamma(), x, self.kernel.scale())
    }

    /// `Σ_l c_l Φ^{(order)}(x - x_l)`; `order` must be at most 2.
    pub fn eval_coeffs(&self, coeffs: &[f64], x: f64, order: usize) -> f64 {
        let g = self.set.gamma();
        self.support(x)
            .map(|l| coeffs[l] * self.kernel.derivative(x - g[l], order))
            .sum()
    }

    pub fn interp_eval(&self, v: &[f64], x: f64, order: usize) -> Result<f64> {
        check_order(order)?;
        if v.len() != self.n() {
            return Err(Error::Mismatch(format!(
                "{} nodal values for {} collocation points",
                v.len(),
                self.n()
            )));
        }
        Ok(self.eval_coeffs(&self.solve(v), x, order))
    }

    /// All cardinal functions at `x`: `Q_j^{(order)}(x)` for `j = 0..N`.
    pub fn cardinals_at(&self, x: f64, order: usize) -> Vec<f64> {
        let g = self.set.gamma();
        let mut rhs = vec![0.0; self.n()];
        for l in self.support(x) {
            rhs[l] = self.kernel.derivative(x - g[l], order);
        }
        // K symmetric: Q(x) = K⁻¹ φ(x)
        self.factor.solve_in_place(&mut rhs);
        rhs
    }

    /// `Q_j^{(order)}(x)` with zero-based `j`.
    pub fn cardinal_eval(&self, j: usize, x: f64, order: usize) -> Result<f64> {
        check_order(order)?;
        if j >= self.n() {
            return Err(Error::InvalidInput(format!(
                "cardinal index {j} out of range for {} points",
                self.n()
            )));
        }
        Ok(self.cardinals_at(x, order)[j])
    }

    /// Largest number of cardinal derivatives above `c1/N` in magnitude, over
    /// orders `0..=m_max` and test points `Γ ∪ Γₑ`.
    pub fn iota_diagnostic(&self, c1: f64, m_max: usize) -> usize {
        let threshold = c1 / self.n() as f64;
        let points = self.set.gamma().iter().chain(self.set.gamma_e());
        let m_max = m_max.min(self.kernel.max_order()).min(2);
        points
            .flat_map(|&x| (0..=m_max).map(move |m| (x, m)))
            .map(|(x, m)| {
                self.cardinals_at(x, m)
                    .iter()
                    .filter(|q| q.abs() > threshold)
                    .count()
            })
            .max()
            .unwrap_or(0)
    }

    /// `∫_a^b Φ(y - x_l) dy` for each node by the given rule.
    pub fn basis_integrals(&self, a: f64, b: f64, rule: &QuadratureRule) -> Vec<f64> {
        let (ys, ws) = rule.nodes_weights(a, b);
        let g = self.set.gamma();
        let mut out = vec![0.0; self.n()];
        for (y, w) in ys.iter().zip(&ws) {
            for l in self.support(*y) {
                out[l] += w * self.kernel.value(y - g[l]);
            }
        }
        out
    }
}

fn check_order(order: usize) -> Result<()> {
    if order > 2 {
        return Err(Error::InvalidInput(format!(
            "interpolant derivatives limited to order 2, got {order}"
        )));
    }
    Ok(())
}

fn support_range(sorted: &[f64], x: f64, scale: f64) -> std::ops::Range<usize> {
    let lo = sorted.partition_point(|&p| p <= x - scale);
    let hi = sorted.partition_point(|&p| p < x + scale);
    lo..hi.max(lo)
}

pub fn build_operator(kernel: WendlandKernel, set: CollocationSet) -> Result<InterpolationOperator> {
    InterpolationOperator::build(kernel, set)
}

pub fn interp_eval(op: &InterpolationOperator, v: &[f64], x: f64, order: usize) -> Result<f64> {
    op.interp_eval(v, x, order)
}

pub fn cardinal_eval(op: &InterpolationOperator, j: usize, x: f64, order: usize) -> Result<f64> {
    op.cardinal_eval(j, x, order)
}

pub fn iota_diagnostic(op: &InterpolationOperator, c1: f64, m_max: usize) -> usize {
    op.iota_diagnostic(c1, m_max)
}

/// Integral window with precomputed basis integrals, so that
/// `∫_a^b I(v)` costs one dot product with the coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralCache {
    pub a: f64,
    pub b: f64,
    pub weights: Vec<f64>,
}

impl IntegralCache {
    pub fn new(op: &InterpolationOperator, a: f64, b: f64, rule: &QuadratureRule) -> Self {
        Self {
            a,
            b,
            weights: op.basis_integrals(a, b, rule),
        }
    }
}

/// The interpolant `I(v)` seen as a curve, given its coefficients.
#[derive(Debug, Clone, Copy)]
pub struct InterpolantCurve<'a> {
    op: &'a InterpolationOperator,
    coeffs: &'a [f64],
    cache: Option<&'a IntegralCache>,
}

impl<'a> InterpolantCurve<'a> {
    pub fn new(op: &'a InterpolationOperator, coeffs: &'a [f64]) -> Self {
        Self {
            op,
            coeffs,
            cache: None,
        }
    }

    pub fn with_cache(mut self, cache: &'a IntegralCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn derivative(&self, x: f64, order: usize) -> f64 {
        self.op.eval_coeffs(self.coeffs, x, order)
    }
}

impl CurveAccessor for InterpolantCurve<'_> {
    fn value(&self, x: f64) -> f64 {
        self.op.eval_coeffs(self.coeffs, x, 0)
    }

    fn integral(&self, a: f64, b: f64, rule: &QuadratureRule) -> f64 {
        match self.cache {
            Some(c) if c.a == a && c.b == b => {
                c.weights.iter().zip(self.coeffs).map(|(w, c)| w * c).sum()
            }
            _ => rule.integrate(|x| self.value(x), a, b).unwrap_or(f64::NAN),
        }
    }
}
