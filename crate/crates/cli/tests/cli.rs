use std::path::Path;
use std::process::{Command, Output};

use hjmm_cli::config::{ExperimentConfig, ModelConfig, NumericsConfig, OutputConfig};
use hjmm_cli::report::config_hash;
use proptest::prelude::*;

fn hjmm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hjmm"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

const SIMULATE: &str = r#"version = 1

[model]
name = "vasicek"

[numerics]
points = 16
steps = 8
horizon = 1.0
seed = 3
paths = 2
eval-points = 4

[output]
paths = "paths.csv"
report = "report.json"
"#;

#[test]
fn simulate_writes_hashed_csv_and_report() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), SIMULATE).unwrap();
    let out = hjmm(dir.path(), &["simulate", "--config", "run.toml"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let (header, rows) = read_csv(&dir.path().join("paths.csv"));
    assert_eq!(header, ["path", "t", "xi", "value", "config_hash"]);
    assert_eq!(rows.len(), 2 * 9 * 4);

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let hash = report["config_hash"].as_str().unwrap();
    assert_eq!(hash, config_hash(&report["config"]));
    assert!(rows.iter().all(|r| r[4] == hash));
    let metrics = report["metrics"].as_array().unwrap();
    assert_eq!(metrics.len(), rows.len());
    assert!(metrics.iter().all(|m| m["config_hash"] == hash));

    for row in &rows {
        let v: f64 = row[3].parse().unwrap();
        assert!(v.is_finite());
        let mantissa = row[3].trim_start_matches('-').split('e').next().unwrap();
        assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
    }
    let first: f64 = rows[0][3].parse().unwrap();
    assert_eq!(first, metrics[0]["value"].as_f64().unwrap());
}

#[test]
fn output_location_does_not_change_hash() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), SIMULATE).unwrap();
    assert!(hjmm(dir.path(), &["simulate", "--config", "run.toml"]).status.success());
    assert!(hjmm(dir.path(), &["simulate", "--config", "run.toml", "--out", "other.csv"]).status.success());
    let a = std::fs::read(dir.path().join("paths.csv")).unwrap();
    let b = std::fs::read(dir.path().join("other.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn config_violations_exit_two_and_are_all_listed() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("bad.toml"),
        "version = 2\ncolour = 1\n[model]\nname = \"vasicek\"\nsigma = -1\n[numerics]\npoints = 0\nsteps = 8\nhorizon = 1.0\nseed = 1\nfoo = 2\n",
    )
    .unwrap();
    let out = hjmm(dir.path(), &["simulate", "--config", "bad.toml"]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "config");
    let mut keys: Vec<&str> = err["violations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["key"].as_str().unwrap())
        .collect();
    keys.sort_unstable();
    assert_eq!(keys, ["colour", "model.sigma", "numerics.foo", "numerics.points", "version"]);
    assert!(!dir.path().join("paths.csv").exists());
}

#[test]
fn bad_flags_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(hjmm(dir.path(), &["kernel-table", "--bogus"]).status.code(), Some(2));
    assert_eq!(hjmm(dir.path(), &["kernel-table", "--order", "7"]).status.code(), Some(2));
    assert_eq!(hjmm(dir.path(), &["--workers", "0", "kernel-table"]).status.code(), Some(2));
    assert_eq!(
        hjmm(dir.path(), &["caplet-price", "--theta1", "1", "--theta2", "0.5", "--dt", "0.3"]).status.code(),
        Some(2)
    );
    assert_eq!(hjmm(dir.path(), &["simulate", "--config", "missing.toml"]).status.code(), Some(2));
}

#[test]
fn blow_up_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), SIMULATE.replace("name = \"vasicek\"", "name = \"vasicek\"\nsigma = 1e200")).unwrap();
    let out = hjmm(dir.path(), &["simulate", "--config", "run.toml"]);
    assert_eq!(out.status.code(), Some(3));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "numerical");
}

#[test]
fn caplet_flags_reach_the_price() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["caplet-price", "--theta1", "0", "--theta2", "0.5", "--paths", "1", "--dt", "0.005"];
    let price = |extra: &[&str]| -> f64 {
        let mut args = base.to_vec();
        args.extend_from_slice(extra);
        let out = hjmm(dir.path(), &args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let (header, rows) = read_csv(&dir.path().join("caplet-price.csv"));
        rows[0][header.iter().position(|h| h == "price").unwrap()].parse().unwrap()
    };
    let reset_only = price(&[]);
    let through = price(&["--mode", "through-payment"]);
    let fixed = price(&["--exponent-factor", "1e-5"]);
    assert!(reset_only > 0.0);
    assert!(through < reset_only);
    assert!(fixed > reset_only);
    assert_eq!(price(&["--kappa", "1e6"]), 0.0);
}

#[test]
fn surface_grid_syntax() {
    let dir = tempfile::tempdir().unwrap();
    let out = hjmm(
        dir.path(),
        &["caplet-surface", "--theta1-grid", "0:1:3", "--theta2-grid", "0.5,1.5", "--paths", "2", "--dt", "0.005"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("surface.csv"));
    assert_eq!(header, ["theta1", "theta2", "price", "stderr", "config_hash"]);
    let cells: Vec<(f64, f64)> = rows.iter().map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap())).collect();
    assert_eq!(cells, [(0.0, 0.5), (0.0, 1.5), (0.5, 0.5), (0.5, 1.5), (1.0, 0.5), (1.0, 1.5)]);
}

#[test]
fn check_assumption_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = hjmm(dir.path(), &["check-assumption", "--n-max", "12", "--family", "caplet"]);
    assert!(out.status.success());
    let (_, rows) = read_csv(&dir.path().join("check-assumption.csv"));
    assert_eq!(rows.len(), 12);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[0], (i + 1).to_string());
        let radius: f64 = r[1].parse().unwrap();
        let expected = 0.4 * ((i + 1) as f64).powf(25f64.ln() / 50f64.ln());
        assert!((radius - expected).abs() < 1e-12 * expected);
    }
}

fn arb_config() -> impl Strategy<Value = ExperimentConfig> {
    let model = prop_oneof![
        (0.0f64..1.0, 0.01f64..5.0, -0.1f64..0.1, -0.1f64..0.1)
            .prop_map(|(sigma, lambda, b, r0)| ModelConfig::Vasicek { sigma, lambda, b, r0 }),
        (0.0f64..3.0, 0.01f64..2.0).prop_map(|(theta1, theta2)| ModelConfig::Yield5y { theta1, theta2 }),
    ];
    let numerics = (2usize..500, 1usize..10_000, 0.01f64..20.0, 0.1f64..20.0, 2usize..=10, 0u64..1 << 40, 1usize..10_000, 1usize..500)
        .prop_map(|(points, steps, horizon, kernel_scale, tau, seed, paths, eval_points)| NumericsConfig {
            points,
            steps,
            horizon,
            kernel_scale,
            tau,
            seed,
            paths,
            eval_points,
        });
    let output = (proptest::option::of("[a-z/._\" ]{1,12}"), proptest::option::of("[a-z./]{1,12}"))
        .prop_map(|(paths, report)| OutputConfig { paths, report });
    (model, numerics, output).prop_map(|(model, numerics, output)| ExperimentConfig { model, numerics, output })
}

proptest! {
    #[test]
    fn config_text_round_trips(cfg in arb_config()) {
        let text = cfg.to_toml();
        let back = ExperimentConfig::parse(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(config_hash(&back.to_json()), config_hash(&cfg.to_json()));
    }
}

fn mutations(cfg: &ExperimentConfig) -> Vec<ExperimentConfig> {
    let mut out = Vec::new();
    let mut push = |f: &dyn Fn(&mut ExperimentConfig)| {
        let mut c = cfg.clone();
        f(&mut c);
        out.push(c);
    };
    push(&|c| match &mut c.model {
        ModelConfig::Vasicek { sigma, .. } => *sigma += 0.01,
        ModelConfig::Yield5y { theta1, .. } => *theta1 += 0.01,
    });
    push(&|c| match &mut c.model {
        ModelConfig::Vasicek { r0, .. } => *r0 += 1e-9,
        ModelConfig::Yield5y { theta2, .. } => *theta2 += 1e-9,
    });
    push(&|c| c.numerics.points += 1);
    push(&|c| c.numerics.steps += 1);
    push(&|c| c.numerics.horizon *= 1.5);
    push(&|c| c.numerics.kernel_scale += 0.5);
    push(&|c| c.numerics.tau = if c.numerics.tau == 4 { 5 } else { 4 });
    push(&|c| c.numerics.seed += 1);
    push(&|c| c.numerics.paths += 1);
    push(&|c| c.numerics.eval_points += 1);
    push(&|c| c.output.paths = Some(format!("{}x", c.output.paths.clone().unwrap_or_default())));
    push(&|c| c.output.report = Some(format!("{}x", c.output.report.clone().unwrap_or_default())));
    out
}

proptest! {
    #[test]
    fn hash_tracks_every_field(cfg in arb_config()) {
        let base = config_hash(&cfg.to_json());
        for m in mutations(&cfg) {
            prop_assert_ne!(config_hash(&m.to_json()), base.clone());
        }
        prop_assert_eq!(config_hash(&cfg.clone().to_json()), base);
    }
}
