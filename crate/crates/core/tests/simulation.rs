use hjmm_colloc::interpolation::{build_gamma, build_gamma_e, GammaELayout, GammaLayout, InterpolationOperator};
use hjmm_colloc::kernel::build_wendland;
use hjmm_colloc::model::vasicek_model;
use hjmm_colloc::numerics::stats::{mean_and_std_error, sample_variance};
use hjmm_colloc::oracle::{rmse_experiment, RmseConfig};
use hjmm_colloc::simulate::{simulate_paths, simulate_paths_with, IncrementSource, TimeGrid};
use hjmm_colloc::{Execution, ModelSpec, PathBatch};

fn operator(n: usize, m: usize) -> InterpolationOperator {
    let set = build_gamma(n, GammaLayout::UniformInterior { tau: 4 }).unwrap();
    let set = build_gamma_e(&set, GammaELayout::SobolMid { m }).unwrap();
    let kernel = build_wendland(4, 5.0 * set.fill_distance()).unwrap();
    InterpolationOperator::build(kernel, set).unwrap()
}

fn vasicek() -> ModelSpec {
    vasicek_model(0.1, 1.0, 0.02, 0.02)
}

fn run(op: &InterpolationOperator, grid: &TimeGrid, increments: &[Vec<f64>]) -> PathBatch {
    simulate_paths_with(
        op,
        &vasicek(),
        grid,
        increments.len(),
        &IncrementSource::Provided(increments),
        0,
        false,
        Execution::Sequential,
    )
    .unwrap()
}

// Vasicek noise is additive, so the scheme is affine in the increments.
#[test]
fn sample_mean_matches_noise_free_run() {
    let op = operator(16, 8);
    let grid = TimeGrid::uniform(1.0, 16).unwrap();
    let batch = simulate_paths(&op, &vasicek(), &grid, 4000, 11, false, Execution::default()).unwrap();
    let quiet = run(&op, &grid, &[vec![0.0; 16]]);
    for k in [4, 16] {
        for j in 0..op.m() {
            let xs: Vec<f64> = (0..batch.paths.len()).map(|p| batch.value(p, k, j)).collect();
            let (mean, se) = mean_and_std_error(&xs);
            let target = quiet.value(0, k, j);
            assert!((mean - target).abs() <= 5.0 * se, "k {k} j {j}: {mean} vs {target} (se {se})");
        }
    }
}

#[test]
fn response_to_noise_is_additive() {
    let op = operator(16, 8);
    let grid = TimeGrid::uniform(1.0, 8).unwrap();
    let a: Vec<f64> = (0..8).map(|k| 0.1 * ((k as f64) * 1.7).sin()).collect();
    let b: Vec<f64> = (0..8).map(|k| 0.07 * ((k as f64) * 0.3).cos()).collect();
    let ab: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
    let batch = run(&op, &grid, &[vec![0.0; 8], a, b, ab]);
    for k in 0..=8 {
        for j in 0..op.m() {
            let zero = batch.value(0, k, j);
            let lhs = batch.value(3, k, j) - zero;
            let rhs = (batch.value(1, k, j) - zero) + (batch.value(2, k, j) - zero);
            assert!((lhs - rhs).abs() <= 1e-12, "k {k} j {j}");
        }
    }
}

#[test]
fn increments_have_step_variance() {
    let op = operator(8, 4);
    let grid = TimeGrid::uniform(2.0, 8).unwrap();
    let batch = simulate_paths(&op, &vasicek(), &grid, 3000, 5, false, Execution::default()).unwrap();
    let table = batch.increment_table();
    let n = table.len() as f64;
    for k in 0..8 {
        let xs: Vec<f64> = table.iter().map(|row| row[k]).collect();
        let var = sample_variance(&xs);
        let dt = grid.dt(k);
        // standard error of a Gaussian sample variance
        let se = dt * (2.0 / (n - 1.0)).sqrt();
        assert!((var - dt).abs() <= 5.0 * se, "step {k}: {var} vs {dt}");
        let (mean, se_mean) = mean_and_std_error(&xs);
        assert!(mean.abs() <= 5.0 * se_mean);
    }
}

#[test]
fn stored_increments_replay_bitwise() {
    let op = operator(16, 8);
    let grid = TimeGrid::uniform(1.0, 16).unwrap();
    let batch = simulate_paths(&op, &vasicek(), &grid, 20, 3, false, Execution::default()).unwrap();
    let replay = run(&op, &grid, &batch.increment_table());
    for (a, b) in batch.paths.iter().zip(&replay.paths) {
        assert_eq!(a.r_gamma_e, b.r_gamma_e);
    }
}

#[test]
fn batches_do_not_depend_on_execution() {
    let op = operator(16, 8);
    let grid = TimeGrid::uniform(1.0, 16).unwrap();
    let seq = simulate_paths(&op, &vasicek(), &grid, 50, 9, true, Execution::Sequential).unwrap();
    for workers in [2, 8] {
        let par = simulate_paths(&op, &vasicek(), &grid, 50, 9, true, Execution::with_workers(workers)).unwrap();
        assert_eq!(seq, par);
    }
}

#[test]
fn rmse_is_reproducible_and_stable_across_seeds() {
    let mut cfg = RmseConfig::standard(16, 4, 1);
    cfg.samples = 400;
    cfg.eval_points = 10;
    let a = rmse_experiment(&cfg, Execution::Sequential).unwrap();
    let b = rmse_experiment(&cfg, Execution::with_workers(4)).unwrap();
    assert_eq!(a, b);
    cfg.seed = 2;
    let c = rmse_experiment(&cfg, Execution::Sequential).unwrap();
    for i in 0..2 {
        assert_ne!(a.rmse[i], c.rmse[i]);
        let (ma, mc) = (a.rmse[i].powi(2), c.rmse[i].powi(2));
        let se = a.mse_std_error[i].hypot(c.mse_std_error[i]);
        assert!((ma - mc).abs() <= 5.0 * se, "coupling {i}: {ma} vs {mc} (se {se})");
    }
}
