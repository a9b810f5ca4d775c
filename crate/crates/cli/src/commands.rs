//! The subcommands. Each one computes a [`Table`] and the JSON echo of the
//! parameters it ran with.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde_json::{json, Value};

use hjmm_colloc::interpolation::{
    build_gamma, build_gamma_e, uniform_interior_radius, uniform_to_radius_radius, CollocationSet, GammaELayout,
    GammaLayout, InterpolationOperator,
};
use hjmm_colloc::kernel::build_wendland;
use hjmm_colloc::model::{vasicek_model, yield_dependent_model, ModelSpec};
use hjmm_colloc::oracle::{rmse_experiment, Coupling, RmseConfig};
use hjmm_colloc::pricing::{
    caplet_surface, default_initial_curve, price_caplet, CapletSetup, DiscountConvention, PricingMode, SumRange,
};
use hjmm_colloc::simulate::{simulate_paths, TimeGrid};
use hjmm_colloc::{Error, Execution};

use crate::config::{ExperimentConfig, ModelConfig};
use crate::report::{Cell, Table};
use crate::CliError;

pub struct Outcome {
    pub config: Value,
    pub table: Table,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses `a,b,c` or `start:stop:count` (inclusive, evenly spaced).
pub fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let values = if parts.len() == 3 {
        let start: f64 = parts[0].trim().parse().map_err(|_| format!("bad grid start in {text:?}"))?;
        let stop: f64 = parts[1].trim().parse().map_err(|_| format!("bad grid stop in {text:?}"))?;
        let count: usize = parts[2].trim().parse().map_err(|_| format!("bad grid count in {text:?}"))?;
        match count {
            0 => return Err(format!("empty grid {text:?}")),
            1 => vec![start],
            _ => (0..count)
                .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
                .collect(),
        }
    } else if parts.len() == 1 {
        text.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| format!("bad grid value {s:?}")))
            .collect::<Result<Vec<_>, _>>()?
    } else {
        return Err(format!("grid {text:?} is neither a list nor start:stop:count"));
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(format!("grid {text:?} has non-finite values"));
    }
    Ok(values)
}

fn parse_usize_list(text: &str) -> Result<Vec<usize>, String> {
    text.split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| format!("bad integer {s:?}")))
        .collect()
}

#[derive(Debug, Args)]
pub struct KernelTableArgs {
    #[arg(long, default_value_t = 4)]
    pub tau: usize,
    /// Derivative order, 0 to 3.
    #[arg(long, default_value_t = 0)]
    pub order: usize,
    #[arg(long, default_value_t = 201)]
    pub samples: usize,
    /// Support radius.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, default_value = "kernel-table.csv")]
    pub out: PathBuf,
}

pub fn kernel_table(a: &KernelTableArgs) -> Result<Outcome, CliError> {
    if a.samples < 2 {
        return Err(usage("--samples must be at least 2"));
    }
    let k = build_wendland(a.tau, a.scale)?;
    let mut table = Table::new(vec!["x", "value"]);
    for i in 0..a.samples {
        let x = -a.scale + 2.0 * a.scale * i as f64 / (a.samples - 1) as f64;
        table.push(vec![x.into(), k.eval(x, a.order)?.into()]);
    }
    let config = json!({
        "subcommand": "kernel-table",
        "tau": a.tau,
        "order": a.order,
        "samples": a.samples,
        "scale": a.scale,
    });
    Ok(Outcome { config, table })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    /// Uniform interior grid with low-discrepancy evaluation points.
    Vasicek,
    /// Grid reaching the radius with evaluation points from zero.
    Caplet,
}

#[derive(Debug, Args)]
pub struct CheckAssumptionArgs {
    #[arg(long, default_value_t = 1)]
    pub n_min: usize,
    #[arg(long, default_value_t = 1000)]
    pub n_max: usize,
    #[arg(long, default_value_t = 25.0)]
    pub c1: f64,
    #[arg(long, default_value_t = 25.0)]
    pub c2: f64,
    #[arg(long, default_value_t = 4)]
    pub tau: usize,
    #[arg(long, value_enum, default_value_t = Family::Vasicek)]
    pub family: Family,
    #[arg(long, default_value_t = 5.0)]
    pub kernel_scale: f64,
    #[arg(long, default_value_t = 100)]
    pub eval_points: usize,
    #[arg(long, default_value = "check-assumption.csv")]
    pub out: PathBuf,
}

/// Operator of one member of an assumption-check family.
pub fn family_operator(
    family: Family,
    n: usize,
    tau: usize,
    kernel_scale: f64,
    eval_points: usize,
) -> Result<InterpolationOperator, Error> {
    let set = if n == 1 {
        let radius = match family {
            Family::Vasicek => uniform_interior_radius(1, tau),
            Family::Caplet => uniform_to_radius_radius(1),
        };
        CollocationSet::new(vec![radius / 2.0], radius)?
    } else {
        match family {
            Family::Vasicek => build_gamma(n, GammaLayout::UniformInterior { tau })?,
            Family::Caplet => build_gamma(n, GammaLayout::UniformToRadius)?,
        }
    };
    let set = match family {
        Family::Vasicek => build_gamma_e(&set, GammaELayout::SobolMid { m: eval_points })?,
        Family::Caplet => build_gamma_e(&set, GammaELayout::UniformFromZero)?,
    };
    let kernel = build_wendland(tau, kernel_scale * set.fill_distance())?;
    InterpolationOperator::build(kernel, set)
}

pub fn check_assumption(a: &CheckAssumptionArgs, exec: Execution) -> Result<Outcome, CliError> {
    if a.n_min < 1 || a.n_max < a.n_min {
        return Err(usage("need 1 <= --n-min <= --n-max"));
    }
    let ns: Vec<usize> = (a.n_min..=a.n_max).collect();
    let rows = exec.map(ns.len(), |i| -> Result<(usize, f64, usize), Error> {
        let op = family_operator(a.family, ns[i], a.tau, a.kernel_scale, a.eval_points)?;
        Ok((ns[i], op.set().radius(), op.iota_diagnostic(a.c1, 2)))
    });
    let mut table = Table::new(vec!["N", "R", "iota", "c2_bound"]);
    for r in rows {
        let (n, radius, iota) = r?;
        table.push(vec![n.into(), radius.into(), iota.into(), (a.c2 * radius.sqrt()).into()]);
    }
    let config = json!({
        "subcommand": "check-assumption",
        "n_min": a.n_min,
        "n_max": a.n_max,
        "c1": a.c1,
        "c2": a.c2,
        "tau": a.tau,
        "family": format!("{:?}", a.family).to_lowercase(),
        "kernel_scale": a.kernel_scale,
        "eval_points": a.eval_points,
    });
    Ok(Outcome { config, table })
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `output.paths` of the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Operator and model described by a configuration.
pub fn configured_setup(cfg: &ExperimentConfig) -> Result<(InterpolationOperator, ModelSpec), Error> {
    let n = &cfg.numerics;
    let (set, model) = match cfg.model {
        ModelConfig::Vasicek { sigma, lambda, b, r0 } => {
            let set = build_gamma(n.points, GammaLayout::UniformInterior { tau: n.tau })?;
            let set = build_gamma_e(&set, GammaELayout::SobolMid { m: n.eval_points })?;
            (set, vasicek_model(sigma, lambda, b, r0))
        }
        ModelConfig::Yield5y { theta1, theta2 } => {
            let set = build_gamma(n.points, GammaLayout::FifthSteps)?;
            let set = build_gamma_e(&set, GammaELayout::UniformFromZero)?;
            (set, yield_dependent_model(theta1, theta2, default_initial_curve()))
        }
    };
    let kernel = build_wendland(n.tau, n.kernel_scale * set.fill_distance())?;
    Ok((InterpolationOperator::build(kernel, set)?, model))
}

pub fn simulate(cfg: &ExperimentConfig, exec: Execution) -> Result<Outcome, CliError> {
    let (op, model) = configured_setup(cfg)?;
    let n = &cfg.numerics;
    let grid = TimeGrid::uniform(n.horizon, n.steps)?;
    let batch = simulate_paths(&op, &model, &grid, n.paths, n.seed, false, exec)?;
    let mut table = Table::new(vec!["path", "t", "xi", "value"]);
    for (p, rec) in batch.paths.iter().enumerate() {
        for (k, &t) in batch.times.iter().enumerate() {
            for (j, &xi) in batch.gamma_e.iter().enumerate() {
                table.push(vec![rec.index.into(), t.into(), xi.into(), batch.value(p, k, j).into()]);
            }
        }
    }
    Ok(Outcome {
        config: cfg.to_json(),
        table,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CouplingChoice {
    Left,
    ExactVariance,
    Both,
}

impl CouplingChoice {
    fn modes(self) -> Vec<Coupling> {
        match self {
            CouplingChoice::Left => vec![Coupling::SharedIncrementLeft],
            CouplingChoice::ExactVariance => vec![Coupling::ExactVariance],
            CouplingChoice::Both => Coupling::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Args)]
pub struct VasicekRmseArgs {
    #[arg(long = "N-list", default_value = "64,128,256", value_parser = parse_usize_list)]
    pub n_points: std::vec::Vec<usize>,
    #[arg(long = "n-list", default_value = "16,64,256", value_parser = parse_usize_list)]
    pub n_steps: std::vec::Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub tau: usize,
    #[arg(long, default_value_t = 100)]
    pub eval_points: usize,
    #[arg(long, default_value_t = 5.0)]
    pub kernel_scale: f64,
    #[arg(long, value_enum, default_value_t = CouplingChoice::Left)]
    pub coupling: CouplingChoice,
    #[arg(long, default_value = "vasicek-rmse.csv")]
    pub out: PathBuf,
}

pub fn vasicek_rmse(a: &VasicekRmseArgs, exec: Execution) -> Result<Outcome, CliError> {
    if a.n_points.is_empty() || a.n_steps.is_empty() {
        return Err(usage("--N-list and --n-list must not be empty"));
    }
    let mut table = Table::new(vec!["N", "R", "n", "coupling", "rmse"]);
    for &n_points in &a.n_points {
        for &n_steps in &a.n_steps {
            let mut cfg = RmseConfig::standard(n_points, n_steps, a.seed);
            cfg.samples = a.samples;
            cfg.tau = a.tau;
            cfg.eval_points = a.eval_points;
            cfg.scale_factor = a.kernel_scale;
            let rep = rmse_experiment(&cfg, exec)?;
            for c in a.coupling.modes() {
                table.push(vec![
                    n_points.into(),
                    rep.radius.into(),
                    n_steps.into(),
                    c.name().into(),
                    rep.rmse_for(c).into(),
                ]);
            }
        }
    }
    let config = json!({
        "subcommand": "vasicek-rmse",
        "N_list": a.n_points,
        "n_list": a.n_steps,
        "samples": a.samples,
        "seed": a.seed,
        "tau": a.tau,
        "eval_points": a.eval_points,
        "kernel_scale": a.kernel_scale,
        "coupling": format!("{:?}", a.coupling),
    });
    Ok(Outcome { config, table })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeChoice {
    ResetOnly,
    ThroughPayment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RangeChoice {
    Left,
    Inclusive,
}

#[derive(Debug, Args)]
pub struct PricingArgs {
    #[arg(long, default_value_t = 0.04)]
    pub kappa: f64,
    #[arg(long, default_value_t = 1000)]
    pub paths: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Reset date of the caplet.
    #[arg(long, default_value_t = 10.0)]
    pub reset: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub dt: f64,
    #[arg(long, value_enum, default_value_t = ModeChoice::ResetOnly)]
    pub mode: ModeChoice,
    /// Multiplier of the discount sum in place of the step length.
    #[arg(long)]
    pub exponent_factor: Option<f64>,
    #[arg(long, value_enum, default_value_t = RangeChoice::Left)]
    pub sum_range: RangeChoice,
    #[arg(long, default_value_t = 5.0)]
    pub kernel_scale: f64,
}

impl PricingArgs {
    fn setup(&self) -> Result<CapletSetup, CliError> {
        let mut bad = Vec::new();
        if !(self.dt > 0.0) {
            bad.push("--dt must be positive".to_string());
        }
        if !(self.reset > 0.0) {
            bad.push("--reset must be positive".to_string());
        }
        if self.paths == 0 {
            bad.push("--paths must be at least 1".to_string());
        }
        if !(self.kernel_scale > 0.0) {
            bad.push("--kernel-scale must be positive".to_string());
        }
        if !bad.is_empty() {
            return Err(usage(bad.join("; ")));
        }
        let steps = (self.reset / self.dt).round();
        if steps < 1.0 || ((steps * self.dt - self.reset) / self.reset).abs() > 1e-9 {
            return Err(usage(format!("--dt {} does not divide --reset {}", self.dt, self.reset)));
        }
        let mut s = CapletSetup::standard(steps as usize, self.paths, self.seed);
        s.reset = self.reset;
        s.kappa = self.kappa;
        s.scale_factor = self.kernel_scale;
        s.mode = match self.mode {
            ModeChoice::ResetOnly => PricingMode::ResetOnly,
            ModeChoice::ThroughPayment => PricingMode::ThroughPayment,
        };
        s.convention = DiscountConvention {
            factor: self.exponent_factor,
            range: match self.sum_range {
                RangeChoice::Left => SumRange::Left,
                RangeChoice::Inclusive => SumRange::Inclusive,
            },
        };
        Ok(s)
    }

    fn echo(&self) -> serde_json::Map<String, Value> {
        let v = json!({
            "kappa": self.kappa,
            "paths": self.paths,
            "seed": self.seed,
            "reset": self.reset,
            "dt": self.dt,
            "mode": format!("{:?}", self.mode),
            "exponent_factor": self.exponent_factor,
            "sum_range": format!("{:?}", self.sum_range),
            "kernel_scale": self.kernel_scale,
        });
        match v {
            Value::Object(m) => m,
            _ => unreachable!(),
        }
    }
}

#[derive(Debug, Args)]
pub struct CapletPriceArgs {
    #[arg(long)]
    pub theta1: f64,
    #[arg(long)]
    pub theta2: f64,
    #[command(flatten)]
    pub pricing: PricingArgs,
    #[arg(long, default_value = "caplet-price.csv")]
    pub out: PathBuf,
}

pub fn caplet_price(a: &CapletPriceArgs, exec: Execution) -> Result<Outcome, CliError> {
    let setup = a.pricing.setup()?;
    let est = price_caplet(&setup, a.theta1, a.theta2, exec)?;
    let mut table = Table::new(vec!["theta1", "theta2", "kappa", "price", "stderr", "paths"]);
    table.push(vec![
        a.theta1.into(),
        a.theta2.into(),
        a.pricing.kappa.into(),
        est.price.into(),
        est.std_error.into(),
        est.paths.into(),
    ]);
    let mut config = a.pricing.echo();
    config.insert("subcommand".into(), json!("caplet-price"));
    config.insert("theta1".into(), json!(a.theta1));
    config.insert("theta2".into(), json!(a.theta2));
    Ok(Outcome {
        config: Value::Object(config),
        table,
    })
}

#[derive(Debug, Args)]
pub struct CapletSurfaceArgs {
    /// `a,b,c` or `start:stop:count`.
    #[arg(long, default_value = "0.05:2.5:5", value_parser = parse_grid)]
    pub theta1_grid: std::vec::Vec<f64>,
    #[arg(long, default_value = "0.05:1.5:5", value_parser = parse_grid)]
    pub theta2_grid: std::vec::Vec<f64>,
    #[command(flatten)]
    pub pricing: PricingArgs,
    #[arg(long, default_value = "surface.csv")]
    pub out: PathBuf,
}

pub fn caplet_surface_cmd(a: &CapletSurfaceArgs, exec: Execution) -> Result<Outcome, CliError> {
    let setup = a.pricing.setup()?;
    let cells = caplet_surface(&setup, &a.theta1_grid, &a.theta2_grid, exec)?;
    let mut table = Table::new(vec!["theta1", "theta2", "price", "stderr"]);
    for c in cells {
        table.push(vec![
            Cell::from(c.theta1),
            c.theta2.into(),
            c.estimate.price.into(),
            c.estimate.std_error.into(),
        ]);
    }
    let mut config = a.pricing.echo();
    config.insert("subcommand".into(), json!("caplet-surface"));
    config.insert("theta1_grid".into(), json!(a.theta1_grid));
    config.insert("theta2_grid".into(), json!(a.theta2_grid));
    Ok(Outcome {
        config: Value::Object(config),
        table,
    })
}
