//! Composite quadrature rules on bounded intervals.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureKind {
    Trapezoid,
    Simpson,
    GaussLegendre,
}

/// A composite rule: `panels` equal subintervals, each integrated with the
/// base rule of the given kind.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    kind: QuadratureKind,
    panels: usize,
    // base nodes and weights on [0, 1]
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn trapezoid(panels: usize) -> Self {
        Self::new(QuadratureKind::Trapezoid, panels, vec![0.0, 1.0], vec![0.5, 0.5])
    }

    pub fn simpson(panels: usize) -> Self {
        Self::new(
            QuadratureKind::Simpson,
            panels,
            vec![0.0, 0.5, 1.0],
            vec![1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0],
        )
    }

    /// Composite Gauss–Legendre with `points` nodes per panel.
    pub fn gauss_legendre(points: usize, panels: usize) -> Self {
        let (x, w) = gauss_legendre_nodes(points);
        let nodes = x.iter().map(|&t| 0.5 * (t + 1.0)).collect();
        let weights = w.iter().map(|&v| 0.5 * v).collect();
        Self::new(QuadratureKind::GaussLegendre, panels, nodes, weights)
    }

    fn new(kind: QuadratureKind, panels: usize, nodes: Vec<f64>, weights: Vec<f64>) -> Self {
        assert!(panels >= 1, "quadrature needs at least one panel");
        Self {
            kind,
            panels,
            nodes,
            weights,
        }
    }

    pub fn kind(&self) -> QuadratureKind {
        self.kind
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    /// Total number of function evaluations (shared panel endpoints counted twice).
    pub fn node_count(&self) -> usize {
        self.panels * self.nodes.len()
    }

    /// Highest polynomial degree integrated exactly.
    pub fn exactness_degree(&self) -> usize {
        match self.kind {
            QuadratureKind::Trapezoid => 1,
            QuadratureKind::Simpson => 3,
            QuadratureKind::GaussLegendre => 2 * self.nodes.len() - 1,
        }
    }

    /// Absolute nodes and weights of the composite rule on `[a, b]`.
    pub fn nodes_weights(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let h = (b - a) / self.panels as f64;
        let mut xs = Vec::with_capacity(self.node_count());
        let mut ws = Vec::with_capacity(self.node_count());
        for p in 0..self.panels {
            let left = a + p as f64 * h;
            for (&t, &w) in self.nodes.iter().zip(&self.weights) {
                xs.push(left + t * h);
                ws.push(w * h);
            }
        }
        (xs, ws)
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> Result<f64> {
        if !(a <= b) {
            return Err(Error::InvalidInput(format!(
                "integration bounds must satisfy a <= b, got [{a}, {b}]"
            )));
        }
        if a == b {
            return Ok(0.0);
        }
        let h = (b - a) / self.panels as f64;
        let mut total = 0.0;
        for p in 0..self.panels {
            let left = a + p as f64 * h;
            let mut panel = 0.0;
            for (&t, &w) in self.nodes.iter().zip(&self.weights) {
                let x = left + t * h;
                let y = f(x);
                if !y.is_finite() {
                    return Err(Error::NonFinite {
                        context: format!("in integrand at x = {x}"),
                    });
                }
                panel += w * y;
            }
            total += panel * h;
        }
        Ok(total)
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre three-term recurrence.
pub fn gauss_legendre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Integrates by composite 8-point Gauss–Legendre, doubling the panel count
/// until two successive estimates agree to `tol`.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    const MAX_LEVEL: u32 = 14;
    if a == b {
        return Ok(0.0);
    }
    let mut prev = QuadratureRule::gauss_legendre(8, 1).integrate(&mut f, a, b)?;
    let mut estimate = f64::INFINITY;
    for level in 1..=MAX_LEVEL {
        let next = QuadratureRule::gauss_legendre(8, 1 << level).integrate(&mut f, a, b)?;
        estimate = (next - prev).abs();
        if estimate <= tol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Quadrature {
        estimate,
        tolerance: tol,
    })
}

/// Rule used for curve functionals such as the five-year average yield:
/// 64 nodes as 16 panels of 4-point Gauss–Legendre.
pub fn curve_functional_rule() -> &'static QuadratureRule {
    static RULE: std::sync::OnceLock<QuadratureRule> = std::sync::OnceLock::new();
    RULE.get_or_init(|| QuadratureRule::gauss_legendre(4, 16))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_on_zero_five() {
        for rule in [
            QuadratureRule::trapezoid(3),
            QuadratureRule::simpson(2),
            curve_functional_rule().clone(),
        ] {
            let v = rule.integrate(|_| 1.0, 0.0, 5.0).unwrap();
            assert!((v - 5.0).abs() < 1e-13);
        }
    }

    #[test]
    fn exponential_with_64_point_gauss() {
        let rule = QuadratureRule::gauss_legendre(64, 1);
        let v = rule.integrate(|y: f64| (-y).exp(), 0.0, 1.0).unwrap();
        assert!((v - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        let v = curve_functional_rule().integrate(|y: f64| (-y).exp(), 0.0, 1.0).unwrap();
        assert!((v - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn empty_interval_is_zero() {
        assert_eq!(QuadratureRule::simpson(4).integrate(|x| x, 2.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn reversed_bounds_rejected() {
        assert!(QuadratureRule::simpson(4).integrate(|x| x, 2.0, 1.0).is_err());
    }

    #[test]
    fn non_finite_integrand_rejected() {
        let r = QuadratureRule::trapezoid(4).integrate(|x| 1.0 / (x - 0.5), 0.0, 1.0);
        assert!(matches!(r, Err(Error::NonFinite { .. })));
    }

    #[test]
    fn polynomial_exactness_on_unit_interval() {
        for rule in [
            QuadratureRule::trapezoid(1),
            QuadratureRule::simpson(1),
            QuadratureRule::gauss_legendre(2, 1),
            QuadratureRule::gauss_legendre(5, 1),
            QuadratureRule::gauss_legendre(8, 3),
        ] {
            for deg in 0..=rule.exactness_degree() {
                let v = rule.integrate(|x| x.powi(deg as i32), 0.0, 1.0).unwrap();
                let exact = 1.0 / (deg as f64 + 1.0);
                assert!((v - exact).abs() < 1e-12, "{:?} deg {deg}: {v}", rule.kind());
            }
        }
    }

    #[test]
    fn gauss_weights_sum_to_two() {
        for n in 1..=20 {
            let (x, w) = gauss_legendre_nodes(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn adaptive_reports_failure() {
        let r = integrate_adaptive(|x: f64| (1.0 / x.max(1e-300)).sin(), 0.0, 1.0, 1e-15);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
        let ok = integrate_adaptive(|x: f64| x.cos(), 0.0, 20.0, 1e-12).unwrap();
        assert!((ok - 20f64.sin()).abs() < 1e-11);
    }
}
