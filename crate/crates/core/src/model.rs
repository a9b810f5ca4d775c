//! HJMM model description: volatility functionals, the no-arbitrage drift
//! and the initial forward curve.
//!
//! The drift is `α(t,φ)(x) = Σ_i σ_i(t,φ)(x) ∫_0^x σ_i(t,φ)(y) dy`.

use std::fmt;
use std::sync::Arc;

use crate::error::Result;
use crate::numerics::quadrature::{curve_functional_rule, integrate_adaptive, QuadratureRule};

/// Absolute tolerance of the adaptive quadrature used for the drift integral.
pub const DRIFT_QUADRATURE_TOL: f64 = 1e-12;

/// Read-only view of a forward curve `x ↦ φ(x)`.
pub trait CurveAccessor {
    fn value(&self, x: f64) -> f64;

    /// `∫_a^b φ(y) dy` by the given rule.
    fn integral(&self, a: f64, b: f64, rule: &QuadratureRule) -> f64 {
        rule.integrate(|x| self.value(x), a, b).unwrap_or(f64::NAN)
    }
}

/// A curve given by a closure.
pub struct FnCurve<F>(pub F);

impl<F: Fn(f64) -> f64> CurveAccessor for FnCurve<F> {
    fn value(&self, x: f64) -> f64 {
        (self.0)(x)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FlatCurve(pub f64);

impl CurveAccessor for FlatCurve {
    fn value(&self, _x: f64) -> f64 {
        self.0
    }
}

pub type CurveFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type LevelFn = Arc<dyn Fn(f64, &dyn CurveAccessor) -> f64 + Send + Sync>;

/// A volatility functional with no exploitable structure.
pub trait VolatilityFunctional: Send + Sync {
    fn value(&self, t: f64, curve: &dyn CurveAccessor, x: f64) -> f64;
}

/// `σ(t,φ)(x) = level(t,φ) · profile(x)`.
///
/// `cumulative`, when present, is `∫_0^x profile(y) dy` in closed form.
#[derive(Clone)]
pub struct SeparableVolatility {
    pub level: LevelFn,
    pub profile: CurveFn,
    pub cumulative: Option<CurveFn>,
}

#[derive(Clone)]
pub enum Volatility {
    Separable(SeparableVolatility),
    General(Arc<dyn VolatilityFunctional>),
}

impl fmt::Debug for Volatility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Volatility::Separable(s) => f
                .debug_struct("Separable")
                .field("closed_form_cumulative", &s.cumulative.is_some())
                .finish(),
            Volatility::General(_) => f.write_str("General"),
        }
    }
}

impl Volatility {
    pub fn value(&self, t: f64, curve: &dyn CurveAccessor, x: f64) -> f64 {
        match self {
            Volatility::Separable(s) => (s.level)(t, curve) * (s.profile)(x),
            Volatility::General(g) => g.value(t, curve, x),
        }
    }

    /// `σ(x) ∫_0^x σ(y) dy`, in closed form when `quadrature` is false and
    /// the factor provides one.
    fn drift_term(&self, t: f64, curve: &dyn CurveAccessor, x: f64, quadrature: bool) -> Result<f64> {
        match self {
            Volatility::Separable(s) => {
                let level = (s.level)(t, curve);
                let profile = |y: f64| (s.profile)(y);
                let cum = match (&s.cumulative, quadrature) {
                    (Some(c), false) => c(x),
                    _ => integrate_adaptive(profile, 0.0, x, DRIFT_QUADRATURE_TOL)?,
                };
                Ok(level * level * (s.profile)(x) * cum)
            }
            Volatility::General(g) => {
                let cum = integrate_adaptive(|y| g.value(t, curve, y), 0.0, x, DRIFT_QUADRATURE_TOL)?;
                Ok(g.value(t, curve, x) * cum)
            }
        }
    }
}

/// An HJMM model with `d = factors.len()` Brownian drivers.
#[derive(Clone)]
pub struct ModelSpec {
    pub name: String,
    pub factors: Vec<Volatility>,
    /// Initial forward curve `r_0(x)`.
    pub initial: CurveFn,
    /// Envelope `Ψ` bounding the volatilities and their first two derivatives.
    pub envelope: CurveFn,
    /// Weight `w` of the curve space.
    pub weight: CurveFn,
    /// Width `T_0` of the curve window the volatility may depend on.
    pub horizon: f64,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("name", &self.name)
            .field("factors", &self.factors)
            .field("horizon", &self.horizon)
            .finish()
    }
}

impl ModelSpec {
    pub fn d(&self) -> usize {
        self.factors.len()
    }

    pub fn r0(&self, x: f64) -> f64 {
        (self.initial)(x)
    }

    pub fn sigma(&self, i: usize, t: f64, curve: &dyn CurveAccessor, x: f64) -> f64 {
        self.factors[i].value(t, curve, x)
    }

    /// True when every factor's state dependence is only through a scalar level.
    pub fn is_separable(&self) -> bool {
        self.factors.iter().all(|f| matches!(f, Volatility::Separable(_)))
    }
}

/// No-arbitrage drift, using closed-form cumulative volatilities where available.
pub fn drift_alpha(m: &ModelSpec, t: f64, phi: &dyn CurveAccessor, x: f64) -> Result<f64> {
    m.factors
        .iter()
        .try_fold(0.0, |acc, f| Ok(acc + f.drift_term(t, phi, x, false)?))
}

/// No-arbitrage drift with every inner integral done by adaptive quadrature.
pub fn drift_alpha_quadrature(m: &ModelSpec, t: f64, phi: &dyn CurveAccessor, x: f64) -> Result<f64> {
    m.factors
        .iter()
        .try_fold(0.0, |acc, f| Ok(acc + f.drift_term(t, phi, x, true)?))
}

/// Vasicek initial curve
/// `r_0 e^{-λx} + b(1 - e^{-λx}) - σ²/(2λ²) (1 - e^{-λx})²`.
pub fn vasicek_initial_curve(sigma: f64, lambda: f64, b: f64, r0: f64) -> impl Fn(f64) -> f64 + Copy {
    move |x: f64| {
        let e = (-lambda * x).exp();
        r0 * e + b * (1.0 - e) - sigma * sigma / (2.0 * lambda * lambda) * (1.0 - e).powi(2)
    }
}

fn exponential_profile(lambda: f64) -> (CurveFn, CurveFn) {
    (
        Arc::new(move |x: f64| (-lambda * x).exp()),
        Arc::new(move |x: f64| -(-lambda * x).exp_m1() / lambda),
    )
}

/// Vasicek HJMM: `σ_1(t,φ)(x) = σ e^{-λx}`, independent of the curve.
pub fn vasicek_model(sigma: f64, lambda: f64, b: f64, r0: f64) -> ModelSpec {
    assert!(sigma >= 0.0 && lambda > 0.0, "vasicek needs sigma >= 0, lambda > 0");
    let (profile, cumulative) = exponential_profile(lambda);
    let bound = sigma * (1.0 + lambda + lambda * lambda);
    ModelSpec {
        name: "vasicek".into(),
        factors: vec![Volatility::Separable(SeparableVolatility {
            level: Arc::new(move |_, _| sigma),
            profile,
            cumulative: Some(cumulative),
        })],
        initial: Arc::new(vasicek_initial_curve(sigma, lambda, b, r0)),
        envelope: Arc::new(move |x: f64| bound * (-lambda * x).exp()),
        weight: Arc::new(move |x: f64| (lambda * x).exp()),
        horizon: 1.0,
    }
}

/// Width of the averaging window of the yield-dependent model.
pub const YIELD_WINDOW: f64 = 5.0;

/// `max(0, min(Y, 1))` with `Y = (1/5) ∫_0^5 φ(y) dy`.
pub fn clamped_five_year_yield(curve: &dyn CurveAccessor) -> f64 {
    let y = curve.integral(0.0, YIELD_WINDOW, curve_functional_rule()) / YIELD_WINDOW;
    y.clamp(0.0, 1.0)
}

/// Yield-dependent model
/// `σ_1(t,φ)(x) = θ₁ e^{-θ₂x} max(0, min((1/5)∫_0^5 φ, 1))`.
pub fn yield_dependent_model(theta1: f64, theta2: f64, r0_curve: CurveFn) -> ModelSpec {
    assert!(theta1 >= 0.0 && theta2 > 0.0, "yield model needs theta1 >= 0, theta2 > 0");
    let (profile, cumulative) = exponential_profile(theta2);
    let bound = theta1 * (1.0 + theta2 + theta2 * theta2);
    ModelSpec {
        name: "yield5y".into(),
        factors: vec![Volatility::Separable(SeparableVolatility {
            level: Arc::new(move |_, curve| theta1 * clamped_five_year_yield(curve)),
            profile,
            cumulative: Some(cumulative),
        })],
        initial: r0_curve,
        envelope: Arc::new(move |x: f64| bound * (-theta2 * x).exp()),
        weight: Arc::new(move |x: f64| (theta2 * x).exp()),
        horizon: YIELD_WINDOW,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::RngStream;

    fn standard_vasicek() -> ModelSpec {
        vasicek_model(0.1, 1.0, 0.02, 0.02)
    }

    #[test]
    fn drift_vanishes_at_origin() {
        let m = standard_vasicek();
        assert_eq!(drift_alpha(&m, 0.0, &FlatCurve(0.0), 0.0).unwrap(), 0.0);
        let y = yield_dependent_model(0.5, 0.3, Arc::new(|_| 0.03));
        assert_eq!(drift_alpha(&y, 0.0, &FlatCurve(0.03), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn vasicek_drift_at_one() {
        let m = standard_vasicek();
        let a = drift_alpha(&m, 0.0, &FlatCurve(0.0), 1.0).unwrap();
        // oracle: 64-point Gauss–Legendre of the defining integral
        let rule = QuadratureRule::gauss_legendre(64, 1);
        let inner = rule.integrate(|y: f64| 0.1 * (-y).exp(), 0.0, 1.0).unwrap();
        let oracle = 0.1 * (-1.0f64).exp() * inner;
        assert!((a - oracle).abs() < 1e-15);
        assert!((a - 2.3255e-3).abs() < 1e-7, "{a}");
    }

    #[test]
    fn zero_volatility_zero_drift() {
        let m = vasicek_model(0.0, 1.0, 0.02, 0.02);
        for x in [0.0, 0.5, 3.0] {
            assert_eq!(drift_alpha(&m, 0.0, &FlatCurve(0.0), x).unwrap(), 0.0);
        }
    }

    #[test]
    fn closed_form_and_quadrature_drifts_agree() {
        let m = standard_vasicek();
        for i in 0..=40 {
            let x = 0.5 * i as f64;
            let a = drift_alpha(&m, 0.0, &FlatCurve(0.0), x).unwrap();
            let q = drift_alpha_quadrature(&m, 0.0, &FlatCurve(0.0), x).unwrap();
            assert!((a - q).abs() < 1e-8);
        }
    }

    #[test]
    fn vasicek_curve_values() {
        let m = standard_vasicek();
        assert_eq!(m.r0(0.0), 0.02);
        assert!((m.r0(60.0) - 0.015).abs() < 1e-15);
        let f = |x: f64| x.sin();
        let a = m.sigma(0, 0.0, &FnCurve(f), 0.7);
        let b = m.sigma(0, 0.0, &FlatCurve(3.0), 0.7);
        assert_eq!(a, b);
    }

    #[test]
    fn yield_model_clamping() {
        let (t1, t2) = (0.8, 0.4);
        let m = yield_dependent_model(t1, t2, Arc::new(|_| 0.02));
        let x = 1.3;
        let base = t1 * (-t2 * x).exp();
        assert!((m.sigma(0, 0.0, &FlatCurve(10.0), x) - base).abs() < 1e-15);
        assert_eq!(m.sigma(0, 0.0, &FlatCurve(-1.0), x), 0.0);
        assert!((m.sigma(0, 0.0, &FlatCurve(0.04), x) - 0.04 * base).abs() < 1e-15);
    }

    #[test]
    fn envelope_bounds_and_decay() {
        let m = yield_dependent_model(2.5, 0.05, Arc::new(|_| 0.02));
        let mut s = RngStream::new(8, 0);
        for _ in 0..500 {
            let level = 2.0 * s.uniform() - 0.5;
            let x = 40.0 * s.uniform();
            let v = m.sigma(0, 10.0 * s.uniform(), &FlatCurve(level), x);
            assert!(v.abs() <= (m.envelope)(x) + 1e-15);
            assert!((m.weight)(x) >= 1.0);
        }
        assert!((m.envelope)(500.0) < 1e-8);
        let w: Vec<f64> = (0..100).map(|i| (m.weight)(i as f64 * 0.3)).collect();
        assert!(w.windows(2).all(|p| p[0] <= p[1]));
    }

    #[test]
    fn yield_model_lipschitz_probe() {
        let m = yield_dependent_model(1.5, 0.6, Arc::new(|_| 0.02));
        let rule = curve_functional_rule();
        let mut s = RngStream::new(12, 0);
        for _ in 0..200 {
            let (a1, a2, b1, b2) = (s.gaussian(), s.gaussian(), s.gaussian(), s.gaussian());
            let phi = move |y: f64| 0.3 * a1 + 0.2 * a2 * (0.7 * y).sin();
            let psi = move |y: f64| 0.3 * b1 + 0.2 * b2 * (0.4 * y).cos();
            let x = 10.0 * s.uniform();
            let diff = (m.sigma(0, 0.0, &FnCurve(phi), x) - m.sigma(0, 0.0, &FnCurve(psi), x)).abs();
            let l1 = rule.integrate(|y| (phi(y) - psi(y)).abs(), 0.0, 5.0).unwrap();
            assert!(diff <= (m.envelope)(x) * l1 + 1e-9);
        }
    }

    #[test]
    fn drift_bounded_by_envelope() {
        let m = yield_dependent_model(2.0, 0.5, Arc::new(|_| 0.02));
        let psi_l1 = 2.0 * (1.0 + 0.5 + 0.25) / 0.5;
        for i in 0..100 {
            let x = 0.3 * i as f64;
            let a = drift_alpha(&m, 0.0, &FlatCurve(0.7), x).unwrap();
            assert!(a.abs() <= (m.envelope)(x) * psi_l1);
        }
    }
}
