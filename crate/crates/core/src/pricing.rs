//! Monte Carlo caplet prices from simulated forward curves.
//!
//! The six-month LIBOR fixed at the reset date is
//! `L = (exp(∫_0^{1/2} r(T, x) dx) - 1) / (1/2)` with the integral taken by a
//! fixed four-node rule on `x = 0, 0.2, 0.4, 0.6`. The payoff
//! `(1/2) max(L - κ, 0)` is discounted by the bank account
//! `exp(-Σ Δt r(t_i, 0))` and, in [`PricingMode::ThroughPayment`], also by
//! `P(T, T + 1/2) = exp(-∫_0^{1/2} r(T, x) dx)`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::interpolation::{build_gamma, build_gamma_e, GammaELayout, GammaLayout, InterpolationOperator};
use crate::kernel::build_wendland;
use crate::model::{vasicek_initial_curve, yield_dependent_model, CurveFn, ModelSpec};
use crate::numerics::stats::mean_and_std_error;
use crate::parallel::Execution;
use crate::simulate::{IncrementSource, PathBatch, PathRecorder, PathState, Simulator, TimeGrid};

/// Maturities of the LIBOR rule.
pub const LIBOR_NODES: [f64; 4] = [0.0, 0.2, 0.4, 0.6];
/// Weights of the LIBOR rule; they integrate constants and linear functions
/// on `[0, 1/2]` exactly.
pub const LIBOR_WEIGHTS: [f64; 4] = [1.0 / 10.0, 1.0 / 5.0, 7.0 / 40.0, 1.0 / 40.0];
/// Accrual period the LIBOR rule is built for.
pub const TENOR: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapletSpec {
    pub reset: f64,
    pub tenor: f64,
    pub kappa: f64,
    pub theta1: f64,
    pub theta2: f64,
}

impl CapletSpec {
    pub fn new(reset: f64, kappa: f64, theta1: f64, theta2: f64) -> Result<Self> {
        let spec = Self {
            reset,
            tenor: TENOR,
            kappa,
            theta1,
            theta2,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Ten-year reset, strike 4%.
    pub fn standard(theta1: f64, theta2: f64) -> Result<Self> {
        Self::new(10.0, 0.04, theta1, theta2)
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.reset > 0.0 && self.reset.is_finite()) {
            bad.push(format!("reset must be positive, got {}", self.reset));
        }
        if self.tenor != TENOR {
            bad.push(format!("tenor must be {TENOR}, got {}", self.tenor));
        }
        if self.kappa.is_nan() {
            bad.push("strike is NaN".to_string());
        }
        if !(self.theta1 >= 0.0 && self.theta1.is_finite()) {
            bad.push(format!("theta1 must be nonnegative, got {}", self.theta1));
        }
        if !(self.theta2 > 0.0 && self.theta2.is_finite()) {
            bad.push(format!("theta2 must be positive, got {}", self.theta2));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInput(bad.join("; ")))
        }
    }
}

/// `∫_0^{1/2} r dx` from the curve at [`LIBOR_NODES`].
pub fn libor_integral(values: &[f64; 4]) -> f64 {
    values.iter().zip(LIBOR_WEIGHTS).map(|(v, w)| v * w).sum()
}

/// LIBOR over the next [`TENOR`] implied by the curve `r(T, ·)`.
pub fn libor<F: Fn(f64) -> f64>(curve: F) -> f64 {
    libor_from_integral(libor_integral(&LIBOR_NODES.map(curve)))
}

fn libor_from_integral(i: f64) -> f64 {
    i.exp_m1() / TENOR
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PricingMode {
    /// Bank-account discount to the reset date only.
    ResetOnly,
    /// Also discounts the payment from `T` to `T + 1/2`.
    ThroughPayment,
}

/// Which short-rate samples enter the discount sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SumRange {
    /// `i = 0..n-1`.
    Left,
    /// `i = 0..n`.
    Inclusive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscountConvention {
    /// Multiplier of the short-rate sum; `None` uses each step's `Δt`.
    pub factor: Option<f64>,
    pub range: SumRange,
}

impl Default for DiscountConvention {
    fn default() -> Self {
        Self {
            factor: None,
            range: SumRange::Left,
        }
    }
}

impl DiscountConvention {
    /// A fixed `10⁻⁵` multiplier in place of the step lengths.
    pub fn fixed_factor() -> Self {
        Self {
            factor: Some(1e-5),
            range: SumRange::Left,
        }
    }
}

/// Per-path quantities a price is computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapletSample {
    /// `Σ_{i<n} Δt_i r(t_i, 0)`.
    pub weighted_sum: f64,
    /// `Σ_{i<n} r(t_i, 0)`.
    pub plain_sum: f64,
    /// `r(t_n, 0)`.
    pub terminal_short: f64,
    /// Length of the last step, used by the inclusive range.
    pub last_dt: f64,
    /// `∫_0^{1/2} r(T, x) dx` by the LIBOR rule.
    pub libor_integral: f64,
}

impl CapletSample {
    pub fn discount_exponent(&self, conv: &DiscountConvention) -> f64 {
        let tail = matches!(conv.range, SumRange::Inclusive);
        match conv.factor {
            None => self.weighted_sum + if tail { self.last_dt * self.terminal_short } else { 0.0 },
            Some(f) => f * (self.plain_sum + if tail { self.terminal_short } else { 0.0 }),
        }
    }

    pub fn libor(&self) -> f64 {
        libor_from_integral(self.libor_integral)
    }

    /// Discounted payoff before the accrual factor.
    pub fn discounted_payoff(&self, kappa: f64, mode: PricingMode, conv: &DiscountConvention) -> f64 {
        let mut exponent = self.discount_exponent(conv);
        if mode == PricingMode::ThroughPayment {
            exponent += self.libor_integral;
        }
        (-exponent).exp() * (self.libor() - kappa).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceEstimate {
    pub price: f64,
    pub std_error: f64,
    pub paths: usize,
}

/// Caplet price and Monte Carlo standard error over `samples`.
pub fn price_from_samples(
    spec: &CapletSpec,
    samples: &[CapletSample],
    mode: PricingMode,
    conv: &DiscountConvention,
) -> Result<PriceEstimate> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("no samples to price".into()));
    }
    let payoffs: Vec<f64> = samples
        .iter()
        .map(|s| s.discounted_payoff(spec.kappa, mode, conv))
        .collect();
    let (mean, se) = mean_and_std_error(&payoffs);
    if !mean.is_finite() {
        return Err(Error::NonFinite {
            context: "in caplet payoff".into(),
        });
    }
    Ok(PriceEstimate {
        price: spec.tenor * mean,
        std_error: spec.tenor * se,
        paths: samples.len(),
    })
}

fn node_index(points: &[f64], x: f64) -> Option<usize> {
    points.iter().position(|&p| (p - x).abs() <= 1e-12)
}

/// Caplet samples from stored trajectories.
pub fn caplet_samples(spec: &CapletSpec, batch: &PathBatch) -> Result<Vec<CapletSample>> {
    let horizon = *batch.times.last().unwrap_or(&0.0);
    if (horizon - spec.reset).abs() > 1e-9 * spec.reset {
        return Err(Error::Mismatch(format!(
            "batch ends at {horizon}, caplet resets at {}",
            spec.reset
        )));
    }
    let mut idx = [0usize; 4];
    for (slot, &x) in idx.iter_mut().zip(&LIBOR_NODES) {
        *slot = node_index(&batch.gamma_e, x)
            .ok_or_else(|| Error::Mismatch(format!("batch has no evaluation point at maturity {x}")))?;
    }
    let n = batch.steps();
    let samples = (0..batch.paths.len())
        .map(|p| {
            let mut weighted_sum = 0.0;
            let mut plain_sum = 0.0;
            for k in 0..n {
                let r = batch.value(p, k, idx[0]);
                weighted_sum += (batch.times[k + 1] - batch.times[k]) * r;
                plain_sum += r;
            }
            CapletSample {
                weighted_sum,
                plain_sum,
                terminal_short: batch.value(p, n, idx[0]),
                last_dt: batch.times[n] - batch.times[n - 1],
                libor_integral: libor_integral(&idx.map(|j| batch.value(p, n, j))),
            }
        })
        .collect();
    Ok(samples)
}

pub fn caplet_price(
    spec: &CapletSpec,
    batch: &PathBatch,
    mode: PricingMode,
    conv: &DiscountConvention,
) -> Result<PriceEstimate> {
    price_from_samples(spec, &caplet_samples(spec, batch)?, mode, conv)
}

struct CapletRecorder<'a> {
    idx: [usize; 4],
    times: &'a [f64],
}

// the carried value is r(t_{k-1}, 0), which enters the sum once step k is done
impl PathRecorder for CapletRecorder<'_> {
    type Acc = (CapletSample, f64);

    fn start(&self, _path: usize, state: &PathState) -> Self::Acc {
        let sample = CapletSample {
            weighted_sum: 0.0,
            plain_sum: 0.0,
            terminal_short: 0.0,
            last_dt: 0.0,
            libor_integral: 0.0,
        };
        (sample, state.r_gamma_e[self.idx[0]])
    }

    fn record(&self, acc: &mut Self::Acc, state: &PathState, _dw: &[f64]) {
        let (sample, prev) = acc;
        let dt = self.times[state.k] - self.times[state.k - 1];
        sample.weighted_sum += dt * *prev;
        sample.plain_sum += *prev;
        *prev = state.r_gamma_e[self.idx[0]];
        if state.k + 1 == self.times.len() {
            sample.terminal_short = *prev;
            sample.last_dt = dt;
            sample.libor_integral = libor_integral(&self.idx.map(|j| state.r_gamma_e[j]));
        }
    }
}

/// Collocation setup of the caplet experiment: `x_j = j/5`, `j = 1..50`.
pub fn caplet_operator(scale_factor: f64, eval: GammaELayout) -> Result<InterpolationOperator> {
    let set = build_gamma(50, GammaLayout::FifthSteps)?;
    let set = build_gamma_e(&set, eval)?;
    let kernel = build_wendland(4, scale_factor * set.fill_distance())?;
    InterpolationOperator::build(kernel, set)
}

/// Initial curve used for caplet pricing, the Vasicek curve with
/// `σ = 0.1, λ = 1, b = r_0 = 0.02`.
pub fn default_initial_curve() -> CurveFn {
    Arc::new(vasicek_initial_curve(0.1, 1.0, 0.02, 0.02))
}

pub fn caplet_model(spec: &CapletSpec, initial: CurveFn) -> ModelSpec {
    yield_dependent_model(spec.theta1, spec.theta2, initial)
}

/// Simulates and reduces paths without storing trajectories. `op` must
/// have evaluation points at every [`LIBOR_NODES`] maturity.
pub fn simulate_caplet_samples(
    op: &InterpolationOperator,
    model: &ModelSpec,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<CapletSample>> {
    let mut idx = [0usize; 4];
    for (slot, &x) in idx.iter_mut().zip(&LIBOR_NODES) {
        *slot = node_index(op.set().gamma_e(), x)
            .ok_or_else(|| Error::Mismatch(format!("operator has no evaluation point at maturity {x}")))?;
    }
    let sim = Simulator::new(op, model)?;
    let recorder = CapletRecorder {
        idx,
        times: grid.times(),
    };
    let out = sim.run(grid, n_paths, &IncrementSource::Seeded(seed), exec, &recorder)?;
    Ok(out.completed.into_iter().map(|(_, (s, _))| s).collect())
}

/// Everything but the volatility parameters of a caplet run.
#[derive(Clone)]
pub struct CapletSetup {
    pub reset: f64,
    pub kappa: f64,
    pub steps: usize,
    pub paths: usize,
    pub seed: u64,
    /// Kernel support radius as a multiple of the grid spacing.
    pub scale_factor: f64,
    pub mode: PricingMode,
    pub convention: DiscountConvention,
    pub initial: CurveFn,
}

impl CapletSetup {
    /// Ten-year reset at strike 4% on `n` steps.
    pub fn standard(steps: usize, paths: usize, seed: u64) -> Self {
        Self {
            reset: 10.0,
            kappa: 0.04,
            steps,
            paths,
            seed,
            scale_factor: 5.0,
            mode: PricingMode::ResetOnly,
            convention: DiscountConvention::default(),
            initial: default_initial_curve(),
        }
    }

    pub fn spec(&self, theta1: f64, theta2: f64) -> Result<CapletSpec> {
        CapletSpec::new(self.reset, self.kappa, theta1, theta2)
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::uniform(self.reset, self.steps)
    }

    /// Operator evaluating the curve only at the LIBOR maturities.
    pub fn operator(&self) -> Result<InterpolationOperator> {
        caplet_operator(self.scale_factor, GammaELayout::Explicit(LIBOR_NODES.to_vec()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceCell {
    pub theta1: f64,
    pub theta2: f64,
    pub estimate: PriceEstimate,
}

fn price_on(
    setup: &CapletSetup,
    op: &InterpolationOperator,
    grid: &TimeGrid,
    theta1: f64,
    theta2: f64,
    exec: Execution,
) -> Result<PriceEstimate> {
    let spec = setup.spec(theta1, theta2)?;
    let model = caplet_model(&spec, setup.initial.clone());
    let samples = simulate_caplet_samples(op, &model, grid, setup.paths, setup.seed, exec)?;
    price_from_samples(&spec, &samples, setup.mode, &setup.convention)
}

pub fn price_caplet(setup: &CapletSetup, theta1: f64, theta2: f64, exec: Execution) -> Result<PriceEstimate> {
    price_on(setup, &setup.operator()?, &setup.grid()?, theta1, theta2, exec)
}

/// Prices on the grid `theta1s × theta2s`, rows ordered by `theta1` then
/// `theta2`. Every cell reuses the same increments.
pub fn caplet_surface(
    setup: &CapletSetup,
    theta1s: &[f64],
    theta2s: &[f64],
    exec: Execution,
) -> Result<Vec<SurfaceCell>> {
    let op = setup.operator()?;
    let grid = setup.grid()?;
    let mut cells = Vec::with_capacity(theta1s.len() * theta2s.len());
    for &theta1 in theta1s {
        for &theta2 in theta2s {
            let estimate = price_on(setup, &op, &grid, theta1, theta2, exec)?;
            cells.push(SurfaceCell {
                theta1,
                theta2,
                estimate,
            });
        }
    }
    Ok(cells)
}
