//! Exact Vasicek solution driven by the simulator's increments, and the
//! RMSE study built on it.
//!
//! The mild solution is
//! `r(t,x) = r_0(t+x) + σ²/(2λ²) (2e^{-λx}(1-e^{-λt}) - e^{-2λx}(1-e^{-2λt})) + σ e^{-λx} U(t)`
//! with `U(t) = ∫_0^t e^{-λ(t-s)} dW(s)`, so the stochastic part of a whole
//! curve is one scalar per path. Over a step `U` evolves exactly as
//! `U_{k+1} = e^{-λΔt} U_k + ζ_k`; how `ζ_k` is built from the Euler
//! increment `ΔW_k` is the [`Coupling`].

use crate::error::{Error, Result};
use crate::interpolation::{build_gamma, build_gamma_e, GammaELayout, GammaLayout, InterpolationOperator};
use crate::kernel::build_wendland;
use crate::model::{vasicek_initial_curve, vasicek_model};
use crate::numerics::stats::mean_and_std_error;
use crate::parallel::Execution;
use crate::simulate::{IncrementSource, PathRecorder, PathState, Simulator, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Coupling {
    /// `ζ_k = e^{-λΔt} ΔW_k`.
    SharedIncrementLeft,
    /// `ζ_k = sqrt((1 - e^{-2λΔt}) / (2λΔt)) ΔW_k`, exact in law.
    ExactVariance,
}

impl Coupling {
    pub const ALL: [Coupling; 2] = [Coupling::SharedIncrementLeft, Coupling::ExactVariance];

    pub fn name(self) -> &'static str {
        match self {
            Coupling::SharedIncrementLeft => "shared-increment-left",
            Coupling::ExactVariance => "exact-variance",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VasicekExact {
    pub sigma: f64,
    pub lambda: f64,
    pub b: f64,
    pub r0: f64,
    pub coupling: Coupling,
}

/// Stochastic state `U(t)` of the exact solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactState {
    pub t: f64,
    pub u: f64,
}

impl ExactState {
    pub fn origin() -> Self {
        Self { t: 0.0, u: 0.0 }
    }
}

impl VasicekExact {
    /// Parameters of the error study: `σ = 0.1, λ = 1, b = r_0 = 0.02`.
    pub fn standard(coupling: Coupling) -> Self {
        Self {
            sigma: 0.1,
            lambda: 1.0,
            b: 0.02,
            r0: 0.02,
            coupling,
        }
    }

    pub fn initial_curve(&self, x: f64) -> f64 {
        vasicek_initial_curve(self.sigma, self.lambda, self.b, self.r0)(x)
    }

    /// Deterministic part of `r(t, x)`, which is also its mean.
    pub fn deterministic(&self, t: f64, x: f64) -> f64 {
        let (s, l) = (self.sigma, self.lambda);
        let ex = (-l * x).exp();
        self.initial_curve(t + x)
            + s * s / (2.0 * l * l) * (2.0 * ex * (-(-l * t).exp_m1()) - ex * ex * (-(-2.0 * l * t).exp_m1()))
    }

    /// Multiplier turning `ΔW_k` into `ζ_k`.
    pub fn zeta_factor(&self, dt: f64) -> f64 {
        let l = self.lambda;
        match self.coupling {
            Coupling::SharedIncrementLeft => (-l * dt).exp(),
            Coupling::ExactVariance => (-(-2.0 * l * dt).exp_m1() / (2.0 * l * dt)).sqrt(),
        }
    }

    pub fn advance(&self, state: ExactState, dt: f64, dw: f64) -> ExactState {
        ExactState {
            t: state.t + dt,
            u: (-self.lambda * dt).exp() * state.u + self.zeta_factor(dt) * dw,
        }
    }

    /// `σ e^{-λx} U`.
    pub fn stochastic_part(&self, state: ExactState, x: f64) -> f64 {
        self.sigma * (-self.lambda * x).exp() * state.u
    }

    pub fn value(&self, state: ExactState, x: f64) -> f64 {
        self.deterministic(state.t, x) + self.stochastic_part(state, x)
    }

    /// `Var r(t, x) = σ² e^{-2λx} (1 - e^{-2λt}) / (2λ)`.
    pub fn stochastic_variance(&self, t: f64, x: f64) -> f64 {
        let (s, l) = (self.sigma, self.lambda);
        s * s * (-2.0 * l * x).exp() * (-(-2.0 * l * t).exp_m1()) / (2.0 * l)
    }
}

/// Exact trajectory on `xs` from `start`, one row per grid time.
pub fn exact_path_from(
    m: &VasicekExact,
    grid: &TimeGrid,
    increments: &[f64],
    xs: &[f64],
    start: ExactState,
) -> Result<(Vec<Vec<f64>>, ExactState)> {
    if increments.len() != grid.steps() {
        return Err(Error::Mismatch(format!(
            "{} increments for a grid of {} steps",
            increments.len(),
            grid.steps()
        )));
    }
    let mut state = start;
    let row = |s: ExactState| xs.iter().map(|&x| m.value(s, x)).collect::<Vec<f64>>();
    let mut out = Vec::with_capacity(grid.steps() + 1);
    out.push(row(state));
    for (k, &dw) in increments.iter().enumerate() {
        state = m.advance(state, grid.dt(k), dw);
        out.push(row(state));
    }
    Ok((out, state))
}

pub fn exact_path(m: &VasicekExact, grid: &TimeGrid, increments: &[f64], xs: &[f64]) -> Result<Vec<Vec<f64>>> {
    exact_path_from(m, grid, increments, xs, ExactState::origin()).map(|(p, _)| p)
}

/// Settings of one RMSE measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct RmseConfig {
    pub n_points: usize,
    pub n_steps: usize,
    pub tau: usize,
    pub samples: usize,
    pub eval_points: usize,
    /// Kernel support radius as a multiple of the grid spacing.
    pub scale_factor: f64,
    pub horizon: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub b: f64,
    pub r0: f64,
    pub seed: u64,
}

impl RmseConfig {
    /// Error-study defaults: `T = 1`, 100 evaluation points, 10000 samples.
    pub fn standard(n_points: usize, n_steps: usize, seed: u64) -> Self {
        Self {
            n_points,
            n_steps,
            tau: 4,
            samples: 10_000,
            eval_points: 100,
            scale_factor: 5.0,
            horizon: 1.0,
            sigma: 0.1,
            lambda: 1.0,
            b: 0.02,
            r0: 0.02,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmseReport {
    pub n_points: usize,
    pub radius: f64,
    pub n_steps: usize,
    pub samples: usize,
    pub aborted: usize,
    /// RMSE for each coupling, in [`Coupling::ALL`] order.
    pub rmse: [f64; 2],
    /// Standard error of each mean squared error estimate.
    pub mse_std_error: [f64; 2],
}

impl RmseReport {
    pub fn rmse_for(&self, c: Coupling) -> f64 {
        self.rmse[Coupling::ALL.iter().position(|&x| x == c).unwrap_or(0)]
    }
}

/// Operator of the error study: uniform interior grid, Sobol' evaluation points.
pub fn study_operator(cfg: &RmseConfig) -> Result<InterpolationOperator> {
    let set = build_gamma(cfg.n_points, GammaLayout::UniformInterior { tau: cfg.tau })?;
    let set = build_gamma_e(&set, GammaELayout::SobolMid { m: cfg.eval_points })?;
    let kernel = build_wendland(cfg.tau, cfg.scale_factor * set.fill_distance())?;
    InterpolationOperator::build(kernel, set)
}

struct ErrorRecorder<'a> {
    exact: [VasicekExact; 2],
    deterministic: &'a [Vec<f64>],
    decay: Vec<f64>,
    times: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct ErrorAcc {
    u: [f64; 2],
    sse: [f64; 2],
}

impl PathRecorder for ErrorRecorder<'_> {
    type Acc = ErrorAcc;

    fn start(&self, _path: usize, _state: &PathState) -> ErrorAcc {
        // r^h and r agree at t = 0
        ErrorAcc {
            u: [0.0; 2],
            sse: [0.0; 2],
        }
    }

    fn record(&self, acc: &mut ErrorAcc, state: &PathState, dw: &[f64]) {
        let dt = self.times[state.k] - self.times[state.k - 1];
        let det = &self.deterministic[state.k];
        for c in 0..2 {
            let e = &self.exact[c];
            acc.u[c] = (-e.lambda * dt).exp() * acc.u[c] + e.zeta_factor(dt) * dw[0];
            let su = e.sigma * acc.u[c];
            acc.sse[c] += state
                .r_gamma_e
                .iter()
                .zip(det)
                .zip(&self.decay)
                .map(|((approx, d), g)| {
                    let err = d + su * g - approx;
                    err * err
                })
                .sum::<f64>();
        }
    }
}

/// Root mean squared error of the collocation scheme against the exact
/// Vasicek solution, over all grid times and evaluation points.
pub fn rmse_experiment(cfg: &RmseConfig, exec: Execution) -> Result<RmseReport> {
    if cfg.samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let op = study_operator(cfg)?;
    let model = vasicek_model(cfg.sigma, cfg.lambda, cfg.b, cfg.r0);
    let grid = TimeGrid::uniform(cfg.horizon, cfg.n_steps)?;
    let exact = Coupling::ALL.map(|coupling| VasicekExact {
        sigma: cfg.sigma,
        lambda: cfg.lambda,
        b: cfg.b,
        r0: cfg.r0,
        coupling,
    });
    let xs = op.set().gamma_e();
    let deterministic: Vec<Vec<f64>> = grid
        .times()
        .iter()
        .map(|&t| xs.iter().map(|&x| exact[0].deterministic(t, x)).collect())
        .collect();
    let recorder = ErrorRecorder {
        exact,
        deterministic: &deterministic,
        decay: xs.iter().map(|&x| (-cfg.lambda * x).exp()).collect(),
        times: grid.times().to_vec(),
    };
    let sim = Simulator::new(&op, &model)?;
    let out = sim.run(&grid, cfg.samples, &IncrementSource::Seeded(cfg.seed), exec, &recorder)?;
    let used = out.completed.len();
    let cells = (used * xs.len() * (cfg.n_steps + 1)) as f64;
    let per_path_cells = (xs.len() * (cfg.n_steps + 1)) as f64;
    let mut rmse = [0.0; 2];
    let mut mse_std_error = [0.0; 2];
    for c in 0..2 {
        let per_path: Vec<f64> = out.completed.iter().map(|(_, a)| a.sse[c] / per_path_cells).collect();
        let total: f64 = out.completed.iter().map(|(_, a)| a.sse[c]).sum();
        rmse[c] = (total / cells).sqrt();
        mse_std_error[c] = mean_and_std_error(&per_path).1;
    }
    Ok(RmseReport {
        n_points: cfg.n_points,
        radius: op.set().radius(),
        n_steps: cfg.n_steps,
        samples: used,
        aborted: out.aborted.len(),
        rmse,
        mse_std_error,
    })
}
