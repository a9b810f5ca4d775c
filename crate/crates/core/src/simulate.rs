//! Euler–Maruyama integration of the collocated SDE.
//!
//! With `c_k = K⁻¹ r^h_k` the nodal update is
//! `r^h_{k+1} = r^h_k + (K₁ c_k + α(t_k, I(r^h_k))) Δt + σ(t_k, I(r^h_k)) ΔW`
//! and the evaluation points follow the same update with `K₁ₑ` in place of
//! `K₁`, driven by the same coefficients `c_k`. The coefficients are solved
//! once per step and cached in [`PathState`].

use std::ops::Range;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::interpolation::{IntegralCache, InterpolantCurve, InterpolationOperator};
use crate::model::{LevelFn, ModelSpec, Volatility, VolatilityFunctional, DRIFT_QUADRATURE_TOL};
use crate::numerics::quadrature::{curve_functional_rule, integrate_adaptive};
use crate::numerics::rng::RngStream;
use crate::parallel::Execution;

/// Largest tolerated fraction of aborted paths in a batch.
pub const MAX_ABORT_FRACTION: f64 = 1e-3;

/// `0 = t_0 < t_1 < … < t_n = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn uniform(horizon: f64, steps: usize) -> Result<Self> {
        if steps == 0 || !(horizon > 0.0) {
            return Err(Error::InvalidInput(format!(
                "uniform grid needs T > 0 and n >= 1, got T = {horizon}, n = {steps}"
            )));
        }
        let dt = horizon / steps as f64;
        let mut times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
        times[steps] = horizon;
        Ok(Self { times })
    }

    pub fn from_times(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 || times[0] != 0.0 {
            return Err(Error::InvalidInput("time grid must start at 0 with at least one step".into()));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidInput("time grid must be strictly increasing".into()));
        }
        Ok(Self { times })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.times[self.steps()]
    }

    /// `t_{k+1} - t_k`.
    pub fn dt(&self, k: usize) -> f64 {
        self.times[k + 1] - self.times[k]
    }

    pub fn delta_t_max(&self) -> f64 {
        (0..self.steps()).map(|k| self.dt(k)).fold(0.0, f64::max)
    }

    /// Splits at step `k` into `[t_0, t_k]` and `[t_k, t_n]` shifted to start at 0.
    pub fn split(&self, k: usize) -> Result<(TimeGrid, TimeGrid)> {
        if k == 0 || k >= self.steps() {
            return Err(Error::InvalidInput(format!("split index {k} out of range")));
        }
        let head = self.times[..=k].to_vec();
        let t0 = self.times[k];
        let tail = self.times[k..].iter().map(|t| t - t0).collect();
        Ok((TimeGrid { times: head }, TimeGrid { times: tail }))
    }
}

/// Curve state at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct PathState {
    pub k: usize,
    pub t: f64,
    /// `r^h(t_k, x_j)` on the collocation points.
    pub r_gamma: Vec<f64>,
    /// `r^h(t_k, ξ_j)` on the evaluation points.
    pub r_gamma_e: Vec<f64>,
    /// `K⁻¹ r_gamma`.
    pub coeffs: Vec<f64>,
}

enum Factor {
    Separable {
        level: LevelFn,
        sigma_gamma: Vec<f64>,
        sigma_gamma_e: Vec<f64>,
        // profile(x) · ∫_0^x profile
        drift_gamma: Vec<f64>,
        drift_gamma_e: Vec<f64>,
    },
    General(Arc<dyn VolatilityFunctional>),
}

/// Euler–Maruyama stepper bound to one operator and model.
pub struct Simulator<'a> {
    op: &'a InterpolationOperator,
    model: &'a ModelSpec,
    factors: Vec<Factor>,
    cache: IntegralCache,
}

struct Scratch {
    deriv_gamma: Vec<f64>,
    deriv_gamma_e: Vec<f64>,
    dw: Vec<f64>,
}

impl<'a> Simulator<'a> {
    pub fn new(op: &'a InterpolationOperator, model: &'a ModelSpec) -> Result<Self> {
        if model.d() == 0 {
            return Err(Error::InvalidInput("model has no Brownian factors".into()));
        }
        let gamma = op.set().gamma();
        let gamma_e = op.set().gamma_e();
        let mut factors = Vec::with_capacity(model.d());
        for f in &model.factors {
            factors.push(match f {
                Volatility::Separable(s) => {
                    let tabulate = |xs: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> {
                        let mut sig = Vec::with_capacity(xs.len());
                        let mut drift = Vec::with_capacity(xs.len());
                        for &x in xs {
                            let g = (s.profile)(x);
                            let cum = match &s.cumulative {
                                Some(c) => c(x),
                                None => integrate_adaptive(|y| (s.profile)(y), 0.0, x, DRIFT_QUADRATURE_TOL)?,
                            };
                            sig.push(g);
                            drift.push(g * cum);
                        }
                        Ok((sig, drift))
                    };
                    let (sigma_gamma, drift_gamma) = tabulate(gamma)?;
                    let (sigma_gamma_e, drift_gamma_e) = tabulate(gamma_e)?;
                    Factor::Separable {
                        level: s.level.clone(),
                        sigma_gamma,
                        sigma_gamma_e,
                        drift_gamma,
                        drift_gamma_e,
                    }
                }
                Volatility::General(g) => Factor::General(g.clone()),
            });
        }
        let cache = IntegralCache::new(op, 0.0, model.horizon, curve_functional_rule());
        Ok(Self {
            op,
            model,
            factors,
            cache,
        })
    }

    pub fn operator(&self) -> &InterpolationOperator {
        self.op
    }

    pub fn model(&self) -> &ModelSpec {
        self.model
    }

    pub fn initial_state(&self) -> PathState {
        let r_gamma: Vec<f64> = self.op.set().gamma().iter().map(|&x| self.model.r0(x)).collect();
        let r_gamma_e = self.op.set().gamma_e().iter().map(|&x| self.model.r0(x)).collect();
        let coeffs = self.op.solve(&r_gamma);
        PathState {
            k: 0,
            t: 0.0,
            r_gamma,
            r_gamma_e,
            coeffs,
        }
    }

    fn scratch(&self) -> Scratch {
        Scratch {
            deriv_gamma: vec![0.0; self.op.n()],
            deriv_gamma_e: vec![0.0; self.op.m()],
            dw: vec![0.0; self.model.d()],
        }
    }

    /// Advances `state` by `dt` with Brownian increments `dw`.
    pub fn step(&self, state: &mut PathState, dt: f64, dw: &[f64]) -> Result<()> {
        let mut scratch = self.scratch();
        self.step_with(state, dt, dw, &mut scratch)
    }

    fn step_with(&self, state: &mut PathState, dt: f64, dw: &[f64], scratch: &mut Scratch) -> Result<()> {
        if dw.len() != self.model.d() {
            return Err(Error::Mismatch(format!(
                "{} increments for {} factors",
                dw.len(),
                self.model.d()
            )));
        }
        let op = self.op;
        let t = state.t;
        op.k1().mul_into(&state.coeffs, &mut scratch.deriv_gamma);
        op.k1e().mul_into(&state.coeffs, &mut scratch.deriv_gamma_e);
        for v in scratch.deriv_gamma.iter_mut().chain(scratch.deriv_gamma_e.iter_mut()) {
            *v *= dt;
        }
        let curve = InterpolantCurve::new(op, &state.coeffs).with_cache(&self.cache);
        for (factor, &dwi) in self.factors.iter().zip(dw) {
            match factor {
                Factor::Separable {
                    level,
                    sigma_gamma,
                    sigma_gamma_e,
                    drift_gamma,
                    drift_gamma_e,
                } => {
                    let l = level(t, &curve);
                    let (a, b) = (l * l * dt, l * dwi);
                    for ((inc, d), s) in scratch.deriv_gamma.iter_mut().zip(drift_gamma).zip(sigma_gamma) {
                        *inc += a * d + b * s;
                    }
                    for ((inc, d), s) in scratch.deriv_gamma_e.iter_mut().zip(drift_gamma_e).zip(sigma_gamma_e) {
                        *inc += a * d + b * s;
                    }
                }
                Factor::General(g) => {
                    let points = op.set().gamma().iter().zip(scratch.deriv_gamma.iter_mut());
                    let points_e = op.set().gamma_e().iter().zip(scratch.deriv_gamma_e.iter_mut());
                    for (&x, inc) in points.chain(points_e) {
                        let s = g.value(t, &curve, x);
                        let cum = integrate_adaptive(|y| g.value(t, &curve, y), 0.0, x, DRIFT_QUADRATURE_TOL)?;
                        *inc += s * cum * dt + s * dwi;
                    }
                }
            }
        }
        for (r, inc) in state.r_gamma.iter_mut().zip(&scratch.deriv_gamma) {
            *r += inc;
        }
        for (r, inc) in state.r_gamma_e.iter_mut().zip(&scratch.deriv_gamma_e) {
            *r += inc;
        }
        if !state.r_gamma.iter().chain(&state.r_gamma_e).all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("in path state after step {}", state.k + 1),
            });
        }
        state.coeffs.copy_from_slice(&state.r_gamma);
        op.factorization().solve_in_place(&mut state.coeffs);
        state.k += 1;
        state.t += dt;
        Ok(())
    }

    /// Runs paths `0..n_paths`, feeding every state to `recorder`. Paths that
    /// hit a non-finite state are dropped; more than [`MAX_ABORT_FRACTION`]
    /// of them is an error.
    pub fn run<R: PathRecorder>(
        &self,
        grid: &TimeGrid,
        n_paths: usize,
        increments: &IncrementSource<'_>,
        exec: Execution,
        recorder: &R,
    ) -> Result<RunOutput<R::Acc>> {
        self.run_range(grid, 0..n_paths, increments, exec, recorder)
    }

    pub fn run_range<R: PathRecorder>(
        &self,
        grid: &TimeGrid,
        paths: Range<usize>,
        increments: &IncrementSource<'_>,
        exec: Execution,
        recorder: &R,
    ) -> Result<RunOutput<R::Acc>> {
        if paths.is_empty() {
            return Err(Error::InvalidInput("need at least one path".into()));
        }
        increments.validate(grid, self.model.d(), &paths)?;
        let first = paths.start;
        let results = exec.map(paths.len(), |i| self.run_one(grid, first + i, increments, recorder));
        let total = results.len();
        let mut completed = Vec::with_capacity(total);
        let mut aborted = Vec::new();
        for (i, r) in results.into_iter().enumerate() {
            match r {
                Ok(acc) => completed.push((first + i, acc)),
                Err(Error::PathAborted { path, step }) => aborted.push((path, step)),
                Err(e) => return Err(e),
            }
        }
        if aborted.len() as f64 > MAX_ABORT_FRACTION * total as f64 {
            let (first_path, first_step) = aborted[0];
            return Err(Error::TooManyAborts {
                aborted: aborted.len(),
                total,
                first_path,
                first_step,
            });
        }
        Ok(RunOutput { completed, aborted })
    }

    fn run_one<R: PathRecorder>(
        &self,
        grid: &TimeGrid,
        path: usize,
        increments: &IncrementSource<'_>,
        recorder: &R,
    ) -> Result<R::Acc> {
        let d = self.model.d();
        let mut state = self.initial_state();
        let mut acc = recorder.start(path, &state);
        let mut scratch = self.scratch();
        let mut streams: Vec<RngStream> = match increments {
            IncrementSource::Seeded(seed) => (0..d).map(|i| RngStream::for_path(*seed, path as u64, i as u64)).collect(),
            IncrementSource::Provided(_) => Vec::new(),
        };
        let mut dw = std::mem::take(&mut scratch.dw);
        for k in 0..grid.steps() {
            let dt = grid.dt(k);
            match increments {
                IncrementSource::Seeded(_) => {
                    let sd = dt.sqrt();
                    for (w, s) in dw.iter_mut().zip(streams.iter_mut()) {
                        *w = sd * s.gaussian();
                    }
                }
                IncrementSource::Provided(all) => {
                    dw.copy_from_slice(&all[path][k * d..(k + 1) * d]);
                }
            }
            match self.step_with(&mut state, dt, &dw, &mut scratch) {
                Ok(()) => {}
                Err(Error::NonFinite { .. }) => return Err(Error::PathAborted { path, step: k + 1 }),
                Err(e) => return Err(e),
            }
            recorder.record(&mut acc, &state, &dw);
        }
        Ok(acc)
    }
}

/// Where the Brownian increments come from.
#[derive(Debug, Clone, Copy)]
pub enum IncrementSource<'a> {
    /// Per-path streams derived from the base seed.
    Seeded(u64),
    /// `increments[path][k * d + i]` is `ΔW_i` over step `k`.
    Provided(&'a [Vec<f64>]),
}

impl IncrementSource<'_> {
    fn validate(&self, grid: &TimeGrid, d: usize, paths: &Range<usize>) -> Result<()> {
        if let IncrementSource::Provided(all) = self {
            if all.len() < paths.end {
                return Err(Error::Mismatch(format!(
                    "increments for {} paths, {} requested",
                    all.len(),
                    paths.end
                )));
            }
            if let Some(p) = all[paths.clone()].iter().position(|v| v.len() != grid.steps() * d) {
                return Err(Error::Mismatch(format!(
                    "path {} has {} increments, grid needs {}",
                    paths.start + p,
                    all[paths.start + p].len(),
                    grid.steps() * d
                )));
            }
        }
        Ok(())
    }
}

/// Per-path accumulation of simulated states.
pub trait PathRecorder: Sync {
    type Acc: Send;
    /// Called with the initial state of `path`.
    fn start(&self, path: usize, state: &PathState) -> Self::Acc;
    /// Called after every step with the increments that drove it.
    fn record(&self, acc: &mut Self::Acc, state: &PathState, dw: &[f64]);
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput<T> {
    /// `(path index, accumulator)` in path order.
    pub completed: Vec<(usize, T)>,
    /// `(path index, step)` of every aborted path.
    pub aborted: Vec<(usize, usize)>,
}

/// Full trajectory of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub index: usize,
    /// `(n+1) × M` values, row `k` holding `r^h(t_k, ξ_·)`.
    pub r_gamma_e: Vec<f64>,
    /// `(n+1) × N` nodal values when requested.
    pub r_gamma: Option<Vec<f64>>,
    /// `n × d` increments, row `k` holding `ΔW(t_{k+1})`.
    pub increments: Vec<f64>,
}

/// Trajectories of a batch of paths.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBatch {
    pub seed: u64,
    pub times: Vec<f64>,
    pub gamma: Vec<f64>,
    pub gamma_e: Vec<f64>,
    pub d: usize,
    pub paths: Vec<PathRecord>,
    pub aborted: Vec<(usize, usize)>,
}

impl PathBatch {
    pub fn m(&self) -> usize {
        self.gamma_e.len()
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    /// `r^h(t_k, ξ_j)` on path slot `p`.
    pub fn value(&self, p: usize, k: usize, j: usize) -> f64 {
        self.paths[p].r_gamma_e[k * self.m() + j]
    }

    /// Increments as consumed by [`IncrementSource::Provided`].
    pub fn increment_table(&self) -> Vec<Vec<f64>> {
        self.paths.iter().map(|p| p.increments.clone()).collect()
    }
}

struct BatchRecorder {
    store_gamma: bool,
}

impl PathRecorder for BatchRecorder {
    type Acc = PathRecord;

    fn start(&self, path: usize, state: &PathState) -> PathRecord {
        PathRecord {
            index: path,
            r_gamma_e: state.r_gamma_e.clone(),
            r_gamma: self.store_gamma.then(|| state.r_gamma.clone()),
            increments: Vec::new(),
        }
    }

    fn record(&self, acc: &mut PathRecord, state: &PathState, dw: &[f64]) {
        acc.r_gamma_e.extend_from_slice(&state.r_gamma_e);
        if let Some(g) = acc.r_gamma.as_mut() {
            g.extend_from_slice(&state.r_gamma);
        }
        acc.increments.extend_from_slice(dw);
    }
}

/// Simulates and stores `n_paths` full trajectories.
pub fn simulate_paths(
    op: &InterpolationOperator,
    m: &ModelSpec,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
    store_gamma: bool,
    exec: Execution,
) -> Result<PathBatch> {
    simulate_paths_with(op, m, grid, n_paths, &IncrementSource::Seeded(seed), seed, store_gamma, exec)
}

#[allow(clippy::too_many_arguments)]
pub fn simulate_paths_with(
    op: &InterpolationOperator,
    m: &ModelSpec,
    grid: &TimeGrid,
    n_paths: usize,
    increments: &IncrementSource<'_>,
    seed: u64,
    store_gamma: bool,
    exec: Execution,
) -> Result<PathBatch> {
    let sim = Simulator::new(op, m)?;
    let out = sim.run(grid, n_paths, increments, exec, &BatchRecorder { store_gamma })?;
    Ok(PathBatch {
        seed,
        times: grid.times().to_vec(),
        gamma: op.set().gamma().to_vec(),
        gamma_e: op.set().gamma_e().to_vec(),
        d: m.d(),
        paths: out.completed.into_iter().map(|(_, r)| r).collect(),
        aborted: out.aborted,
    })
}

/// One Euler–Maruyama step from `state`.
pub fn euler_step(
    op: &InterpolationOperator,
    m: &ModelSpec,
    state: &PathState,
    dt: f64,
    dw: &[f64],
) -> Result<PathState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
    }
    let sim = Simulator::new(op, m)?;
    let mut next = state.clone();
    sim.step(&mut next, dt, dw)?;
    Ok(next)
}
