//! Experiment configuration files.
//!
//! ```toml
//! version = 1
//!
//! [model]
//! name = "vasicek"
//! sigma = 0.1
//! lambda = 1.0
//! b = 0.02
//! r0 = 0.02
//!
//! [numerics]
//! points = 64
//! steps = 16
//! horizon = 1.0
//! kernel-scale = 5.0
//! tau = 4
//! seed = 1
//! paths = 100
//! eval-points = 100
//!
//! [output]
//! paths = "paths.csv"
//! ```

use std::fmt;

use toml::{Table, Value};

pub const SCHEMA_VERSION: i64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelConfig {
    Vasicek { sigma: f64, lambda: f64, b: f64, r0: f64 },
    Yield5y { theta1: f64, theta2: f64 },
}

impl ModelConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ModelConfig::Vasicek { .. } => "vasicek",
            ModelConfig::Yield5y { .. } => "yield5y",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumericsConfig {
    pub points: usize,
    pub steps: usize,
    pub horizon: f64,
    pub kernel_scale: f64,
    pub tau: usize,
    pub seed: u64,
    pub paths: usize,
    /// Evaluation points of the Vasicek layout; the yield model always uses
    /// `ξ_j = (j-1)/5`.
    pub eval_points: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputConfig {
    pub paths: Option<String>,
    pub report: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub numerics: NumericsConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub key: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

/// All problems found in one configuration file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "invalid configuration: {}", parts.join("; "))
    }
}

impl std::error::Error for ConfigError {}

struct Checker {
    violations: Vec<Violation>,
}

impl Checker {
    fn fail(&mut self, key: &str, message: impl Into<String>) {
        self.violations.push(Violation {
            key: key.to_string(),
            message: message.into(),
        });
    }

    fn section<'a>(&mut self, root: &'a Table, key: &str) -> Option<&'a Table> {
        match root.get(key) {
            Some(Value::Table(t)) => Some(t),
            Some(_) => {
                self.fail(key, "must be a table");
                None
            }
            None => {
                self.fail(key, "missing");
                None
            }
        }
    }

    fn unknown(&mut self, table: &Table, prefix: &str, known: &[&str]) {
        for k in table.keys() {
            if !known.contains(&k.as_str()) {
                self.fail(&join(prefix, k), "unknown key");
            }
        }
    }

    fn float(&mut self, table: &Table, prefix: &str, key: &str, default: Option<f64>) -> Option<f64> {
        let path = join(prefix, key);
        match table.get(key) {
            Some(Value::Float(v)) if v.is_finite() => Some(*v),
            Some(Value::Integer(v)) => Some(*v as f64),
            Some(_) => {
                self.fail(&path, "must be a finite number");
                None
            }
            None => default.or_else(|| {
                self.fail(&path, "missing");
                None
            }),
        }
    }

    fn uint(&mut self, table: &Table, prefix: &str, key: &str, default: Option<u64>) -> Option<u64> {
        let path = join(prefix, key);
        match table.get(key) {
            Some(Value::Integer(v)) if *v >= 0 => Some(*v as u64),
            Some(_) => {
                self.fail(&path, "must be a nonnegative integer");
                None
            }
            None => default.or_else(|| {
                self.fail(&path, "missing");
                None
            }),
        }
    }

    fn string(&mut self, table: &Table, prefix: &str, key: &str) -> Option<Option<String>> {
        match table.get(key) {
            Some(Value::String(s)) => Some(Some(s.clone())),
            Some(_) => {
                self.fail(&join(prefix, key), "must be a string");
                None
            }
            None => Some(None),
        }
    }

    fn require(&mut self, ok: bool, path: &str, message: &str) {
        if !ok {
            self.fail(path, message);
        }
    }
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let root: Table = text.parse().map_err(|e: toml::de::Error| ConfigError {
            violations: vec![Violation {
                key: "<file>".into(),
                message: e.message().to_string(),
            }],
        })?;
        let mut c = Checker { violations: Vec::new() };
        c.unknown(&root, "", &["version", "model", "numerics", "output"]);
        match root.get("version") {
            Some(Value::Integer(SCHEMA_VERSION)) => {}
            Some(_) => c.fail("version", format!("unsupported schema version, expected {SCHEMA_VERSION}")),
            None => c.fail("version", "missing"),
        }

        let model = c.section(&root, "model").and_then(|t| parse_model(&mut c, t));
        let numerics = c.section(&root, "numerics").and_then(|t| parse_numerics(&mut c, t));
        let output = match root.get("output") {
            None => Some(OutputConfig::default()),
            Some(Value::Table(t)) => {
                c.unknown(t, "output", &["paths", "report"]);
                let paths = c.string(t, "output", "paths");
                let report = c.string(t, "output", "report");
                paths.zip(report).map(|(paths, report)| OutputConfig { paths, report })
            }
            Some(_) => {
                c.fail("output", "must be a table");
                None
            }
        };
        match (model, numerics, output) {
            (Some(model), Some(numerics), Some(output)) if c.violations.is_empty() => Ok(Self {
                model,
                numerics,
                output,
            }),
            _ => Err(ConfigError {
                violations: c.violations,
            }),
        }
    }

    /// Canonical text form; parsing it gives back the same configuration.
    pub fn to_toml(&self) -> String {
        let mut s = format!("version = {SCHEMA_VERSION}\n\n[model]\nname = \"{}\"\n", self.model.name());
        for (k, v) in self.model_params() {
            s.push_str(&format!("{k} = {}\n", toml_float(v)));
        }
        let n = &self.numerics;
        s.push_str(&format!(
            "\n[numerics]\npoints = {}\nsteps = {}\nhorizon = {}\nkernel-scale = {}\ntau = {}\nseed = {}\npaths = {}\neval-points = {}\n",
            n.points,
            n.steps,
            toml_float(n.horizon),
            toml_float(n.kernel_scale),
            n.tau,
            n.seed,
            n.paths,
            n.eval_points
        ));
        let o = &self.output;
        if o.paths.is_some() || o.report.is_some() {
            s.push_str("\n[output]\n");
            if let Some(p) = &o.paths {
                s.push_str(&format!("paths = {}\n", Value::String(p.clone())));
            }
            if let Some(p) = &o.report {
                s.push_str(&format!("report = {}\n", Value::String(p.clone())));
            }
        }
        s
    }

    pub fn model_params(&self) -> Vec<(&'static str, f64)> {
        match self.model {
            ModelConfig::Vasicek { sigma, lambda, b, r0 } => {
                vec![("sigma", sigma), ("lambda", lambda), ("b", b), ("r0", r0)]
            }
            ModelConfig::Yield5y { theta1, theta2 } => vec![("theta1", theta1), ("theta2", theta2)],
        }
    }

    /// Every configuration field as JSON.
    pub fn to_json(&self) -> serde_json::Value {
        let mut model = serde_json::Map::new();
        model.insert("name".into(), self.model.name().into());
        for (k, v) in self.model_params() {
            model.insert(k.into(), v.into());
        }
        let n = &self.numerics;
        serde_json::json!({
            "version": SCHEMA_VERSION,
            "model": model,
            "numerics": {
                "points": n.points,
                "steps": n.steps,
                "horizon": n.horizon,
                "kernel-scale": n.kernel_scale,
                "tau": n.tau,
                "seed": n.seed,
                "paths": n.paths,
                "eval-points": n.eval_points,
            },
            "output": {
                "paths": self.output.paths,
                "report": self.output.report,
            }
        })
    }
}

// `{:?}` always keeps a decimal point or exponent, so the value stays a TOML float
fn toml_float(v: f64) -> String {
    format!("{v:?}")
}

fn parse_model(c: &mut Checker, t: &Table) -> Option<ModelConfig> {
    let name = match t.get("name") {
        Some(Value::String(s)) => s.as_str(),
        Some(_) => {
            c.fail("model.name", "must be a string");
            return None;
        }
        None => {
            c.fail("model.name", "missing");
            return None;
        }
    };
    match name {
        "vasicek" => {
            c.unknown(t, "model", &["name", "sigma", "lambda", "b", "r0"]);
            let sigma = c.float(t, "model", "sigma", Some(0.1));
            let lambda = c.float(t, "model", "lambda", Some(1.0));
            let b = c.float(t, "model", "b", Some(0.02));
            let r0 = c.float(t, "model", "r0", Some(0.02));
            if let Some(s) = sigma {
                c.require(s >= 0.0, "model.sigma", "must be nonnegative");
            }
            if let Some(l) = lambda {
                c.require(l > 0.0, "model.lambda", "must be positive");
            }
            Some(ModelConfig::Vasicek {
                sigma: sigma?,
                lambda: lambda?,
                b: b?,
                r0: r0?,
            })
        }
        "yield5y" => {
            c.unknown(t, "model", &["name", "theta1", "theta2"]);
            let theta1 = c.float(t, "model", "theta1", None);
            let theta2 = c.float(t, "model", "theta2", None);
            if let Some(v) = theta1 {
                c.require(v >= 0.0, "model.theta1", "must be nonnegative");
            }
            if let Some(v) = theta2 {
                c.require(v > 0.0, "model.theta2", "must be positive");
            }
            Some(ModelConfig::Yield5y {
                theta1: theta1?,
                theta2: theta2?,
            })
        }
        other => {
            c.fail("model.name", format!("unknown model {other:?}, expected \"vasicek\" or \"yield5y\""));
            None
        }
    }
}

fn parse_numerics(c: &mut Checker, t: &Table) -> Option<NumericsConfig> {
    const P: &str = "numerics";
    c.unknown(
        t,
        P,
        &["points", "steps", "horizon", "kernel-scale", "tau", "seed", "paths", "eval-points"],
    );
    let points = c.uint(t, P, "points", None);
    let steps = c.uint(t, P, "steps", None);
    let horizon = c.float(t, P, "horizon", None);
    let kernel_scale = c.float(t, P, "kernel-scale", Some(5.0));
    let tau = c.uint(t, P, "tau", Some(4));
    let seed = c.uint(t, P, "seed", None);
    let paths = c.uint(t, P, "paths", Some(1));
    let eval_points = c.uint(t, P, "eval-points", Some(100));
    if let Some(v) = points {
        c.require(v >= 2, "numerics.points", "must be at least 2");
    }
    if let Some(v) = steps {
        c.require(v >= 1, "numerics.steps", "must be at least 1");
    }
    if let Some(v) = horizon {
        c.require(v > 0.0, "numerics.horizon", "must be positive");
    }
    if let Some(v) = kernel_scale {
        c.require(v > 0.0, "numerics.kernel-scale", "must be positive");
    }
    if let Some(v) = tau {
        c.require((2..=10).contains(&v), "numerics.tau", "must be between 2 and 10");
    }
    if let Some(v) = paths {
        c.require(v >= 1, "numerics.paths", "must be at least 1");
    }
    if let Some(v) = eval_points {
        c.require(v >= 1, "numerics.eval-points", "must be at least 1");
    }
    Some(NumericsConfig {
        points: points? as usize,
        steps: steps? as usize,
        horizon: horizon?,
        kernel_scale: kernel_scale?,
        tau: tau? as usize,
        seed: seed?,
        paths: paths? as usize,
        eval_points: eval_points? as usize,
    })
}
