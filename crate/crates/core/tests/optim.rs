use xva_pinn_core::geometry::build_grid_1d;
use xva_pinn_core::models::presets;
use xva_pinn_core::network::{Architecture, NetworkParams};
use xva_pinn_core::optim::{
    adam_run, lbfgs_run, lr_at, train, Decay, Objective, PinnObjective, Stage, Status, TrainConfig,
};
use xva_pinn_core::{Error, Result};

struct Rosenbrock;

impl Objective for Rosenbrock {
    fn dim(&self) -> usize {
        2
    }

    fn value_grad(&mut self, x: &[f64], g: &mut [f64]) -> Result<f64> {
        let (a, b) = (x[0], x[1]);
        g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
        g[1] = 200.0 * (b - a * a);
        Ok((1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2))
    }
}

/// `sum (x_i - 3)^2`, blowing up once `x_0` passes `limit`.
struct Fragile {
    limit: f64,
}

impl Objective for Fragile {
    fn dim(&self) -> usize {
        2
    }

    fn value_grad(&mut self, x: &[f64], g: &mut [f64]) -> Result<f64> {
        if x[0] > self.limit {
            return Err(Error::NonFinite { region: "test".into(), index: 0 });
        }
        for i in 0..2 {
            g[i] = 2.0 * (x[i] - 3.0);
        }
        Ok(x.iter().map(|v| (v - 3.0).powi(2)).sum())
    }
}

fn config(adam_steps: usize, lbfgs_steps: usize) -> TrainConfig {
    TrainConfig { adam_steps, lbfgs_steps, log_every: 10, ..TrainConfig::default() }
}

fn pinn(seed: u64) -> (PinnObjective, Vec<f64>) {
    let spec = presets::bs1d_put(0.04);
    let grid = build_grid_1d(&spec.domain, 8, 10).unwrap();
    let arch = Architecture::new(2, 2, 6).unwrap().with_unit_box_scaling(&spec.domain.input_bounds()).unwrap();
    let params = NetworkParams::init(arch, seed).unwrap();
    let x = params.flat().to_vec();
    (PinnObjective::new(&spec, &grid, params).unwrap(), x)
}

#[test]
fn learning_rate_schedule() {
    let mut cfg = TrainConfig { lr0: 1e-3, ..TrainConfig::default() };
    assert_eq!(lr_at(&cfg, 0), 1e-3);
    assert_eq!(lr_at(&cfg, 12345), 1e-3);
    cfg.decay = Some(Decay { delta: 0.75, a: 5000 });
    assert_eq!(lr_at(&cfg, 0), 1e-3);
    assert!((lr_at(&cfg, 5000) - 5.7143e-4).abs() < 1e-8);
    cfg.decay = Some(Decay { delta: 0.5, a: 10000 });
    assert!((lr_at(&cfg, 10000) - 6.6667e-4).abs() < 1e-8);
}

#[test]
fn invalid_configs_are_rejected() {
    let mut x = vec![0.0, 0.0];
    for cfg in [
        TrainConfig { lr0: 0.0, ..config(1, 0) },
        TrainConfig { decay: Some(Decay { delta: 0.5, a: 0 }), ..config(1, 0) },
        TrainConfig { lbfgs_memory: 0, ..config(0, 1) },
    ] {
        assert!(adam_run(&mut Rosenbrock, &mut x, &cfg, 0, &mut |_| {}).is_err());
    }
    let mut short = vec![0.0];
    assert!(lbfgs_run(&mut Rosenbrock, &mut short, &config(0, 5), 0, &mut |_| {}).is_err());
}

#[test]
fn lbfgs_on_rosenbrock() {
    let mut x = vec![-1.2, 1.0];
    let report = lbfgs_run(&mut Rosenbrock, &mut x, &config(0, 100), 0, &mut |_| {}).unwrap();
    assert!(report.final_value <= 1e-8, "{report:?}");
    assert!(report.iterations <= 100);
    let values: Vec<f64> = report.trajectory.iter().map(|p| p.total).collect();
    assert!(values.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn training_a_small_pinn_is_reproducible_and_monotone_in_lbfgs() {
    let cfg = config(200, 100);
    let (mut a, mut xa) = pinn(3);
    let (mut b, mut xb) = pinn(3);
    let mut seen = Vec::new();
    let ra = train(&mut a, &mut xa, &cfg, &mut |p| seen.push(p.total)).unwrap();
    let rb = train(&mut b, &mut xb, &cfg, &mut |_| {}).unwrap();
    assert_eq!(xa, xb);
    assert_eq!(ra, rb);
    assert_eq!(seen, ra.trajectory().map(|p| p.total).collect::<Vec<_>>());

    let lbfgs = ra.lbfgs.as_ref().unwrap();
    assert!(lbfgs.final_value <= ra.adam.final_value);
    let values: Vec<f64> = lbfgs.trajectory.iter().map(|p| p.total).collect();
    assert!(values.windows(2).all(|w| w[1] <= w[0]), "{values:?}");
    assert!(ra.final_value < 1e-2 * ra.adam.initial_value);
    // trajectory points carry one term per region and a global step count
    let first_lbfgs = lbfgs.trajectory.first().unwrap();
    assert_eq!(first_lbfgs.stage, Stage::Lbfgs);
    assert_eq!(first_lbfgs.step, 200);
    assert_eq!(first_lbfgs.terms.len(), 4);
    let total: f64 = first_lbfgs.terms.iter().sum();
    assert!((total - first_lbfgs.total).abs() <= 1e-12 * total);
}

#[test]
fn zero_steps_return_the_initialization() {
    let (mut obj, mut x) = pinn(1);
    let start = x.clone();
    let report = train(&mut obj, &mut x, &config(0, 0), &mut |_| {}).unwrap();
    assert_eq!(x, start);
    assert_eq!(report.adam.initial_value, report.final_value);
    assert!(report.lbfgs.is_none());
}

#[test]
fn non_finite_loss_stops_adam_at_the_last_good_point() {
    let mut obj = Fragile { limit: 0.05 };
    let mut x = vec![0.0, 0.0];
    let cfg = TrainConfig { lr0: 0.02, ..config(100, 0) };
    let report = adam_run(&mut obj, &mut x, &cfg, 0, &mut |_| {}).unwrap();
    assert_eq!(report.status, Status::NonFinite);
    assert!(x[0] <= 0.05 && x[0] > 0.0);
    assert!(report.iterations < 100);
}

#[test]
fn lbfgs_line_search_backs_off_from_bad_regions() {
    // the full Newton step overshoots into the failing region
    let mut obj = Fragile { limit: 2.0 };
    let mut x = vec![0.0, 0.0];
    let report = lbfgs_run(&mut obj, &mut x, &config(0, 50), 0, &mut |_| {}).unwrap();
    assert!(report.final_value < report.initial_value);
    assert!(x[0] <= 2.0);
}
