//! What the subcommands do, as library calls returning structured results.

use std::path::{Path, PathBuf};

use serde::Serialize;
use xva_pinn_core::geometry::{build_grid, tensor_grid, trapezoid_weights};
use xva_pinn_core::metrics::{clamped_error, relative_error, relative_norms, ErrorReport};
use xva_pinn_core::models::ModelSpec;
use xva_pinn_core::network::NetworkParams;
use xva_pinn_core::optim::{train, PinnObjective, TrainReport};
use xva_pinn_core::reference::{fd_solve, risky_bs_greeks, risky_bs_price, FdConfig, SolutionSurface};

use crate::checkpoint::Checkpoint;
use crate::config::{ExperimentConfig, Kind};
use crate::error::{CliError, Result};
use crate::io::{self, Manifest, Table};

/// Progress sink; the binary prints to stderr, tests ignore it.
pub type Log<'a> = &'a mut dyn FnMut(&str);

/// Ground truth for one pricing problem.
pub enum Oracle {
    ClosedForm(ModelSpec),
    Surface(SolutionSurface),
}

impl Oracle {
    /// Closed form for the one-asset model, a finite-difference solve otherwise.
    pub fn for_spec(spec: &ModelSpec, fd: &FdConfig) -> Result<Self> {
        Ok(match Kind::from_core(spec.kind()) {
            Kind::Bs1d => Oracle::ClosedForm(spec.clone()),
            _ => Oracle::Surface(solve_checked(spec, fd)?),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Oracle::ClosedForm(_) => "closed-form",
            Oracle::Surface(_) => "finite-difference",
        }
    }

    pub fn value(&self, p: &[f64]) -> Result<f64> {
        match self {
            Oracle::ClosedForm(spec) => Ok(risky_bs_price(spec, p[0], p[1])?),
            Oracle::Surface(s) => Ok(s.interpolate(p)),
        }
    }

    /// Closed-form `(delta, gamma)` where available.
    pub fn greeks(&self, p: &[f64]) -> Option<(f64, f64)> {
        match self {
            Oracle::ClosedForm(spec) => risky_bs_greeks(spec, p[0], p[1]).ok().map(|g| (g.delta, g.gamma)),
            Oracle::Surface(_) => None,
        }
    }
}

/// A finite-difference solve whose fixed point must have converged.
pub fn solve_checked(spec: &ModelSpec, fd: &FdConfig) -> Result<SolutionSurface> {
    let surface = fd_solve(spec, fd)?;
    if !surface.meta.converged {
        return Err(CliError::Numeric(format!(
            "fixed-point iteration did not converge within {} sweeps",
            fd.max_iters
        )));
    }
    Ok(surface)
}

/// Trapezoid weights of a tensor grid given by its axes.
pub fn tensor_weights(axes: &[Vec<f64>]) -> Result<Vec<f64>> {
    let mut w = vec![1.0];
    for axis in axes {
        let a = trapezoid_weights(axis)?;
        w = w.iter().flat_map(|x| a.iter().map(move |y| x * y)).collect();
    }
    Ok(w)
}

/// Coordinates that measure moneyness: both assets of a basket, the spot of
/// the other models.
fn price_axes(kind: Kind) -> &'static [usize] {
    match kind {
        Kind::BasketAverage | Kind::BasketWorstOf => &[0, 1],
        Kind::Bs1d | Kind::Heston => &[0],
    }
}

/// Whether every price coordinate of `p = (t, x..)` lies within `band * K` of the strike.
pub fn near_strike(kind: Kind, strike: f64, band: f64, p: &[f64]) -> bool {
    price_axes(kind).iter().all(|&a| (p[a + 1] - strike).abs() <= band * strike * (1.0 + 1e-12))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NearStrikeRow {
    pub point: Vec<f64>,
    pub reference: f64,
    pub approx: f64,
    pub price_rel_err: f64,
    /// `d/dx_1` of the network; the oracle's value when it has one.
    pub delta: f64,
    pub delta_ref: Option<f64>,
    pub delta_rel_err: Option<f64>,
    pub gamma: f64,
    pub gamma_ref: Option<f64>,
    pub gamma_rel_err: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub oracle: String,
    pub steps: Vec<usize>,
    /// Trapezoid-weighted norms over the whole domain.
    pub whole: ErrorReport,
    pub whole_unweighted: ErrorReport,
    /// Weighted norms restricted to the near-strike band; `None` when no
    /// evaluation node falls inside it.
    pub near_strike: Option<ErrorReport>,
    pub near_strike_band: f64,
    pub max_clamped: f64,
    pub max_clamped_near_strike: f64,
    pub table: Vec<NearStrikeRow>,
}

/// Points of the near-strike table at maturity.
pub fn near_strike_points(cfg: &ExperimentConfig) -> Vec<Vec<f64>> {
    let (k, t) = (cfg.model.strike, cfg.model.maturity);
    let spots = &cfg.evaluation.near_strike_spots;
    match cfg.kind() {
        Kind::Bs1d => spots.iter().map(|m| vec![t, m * k]).collect(),
        Kind::BasketAverage | Kind::BasketWorstOf => spots.iter().map(|m| vec![t, m * k, m * k]).collect(),
        Kind::Heston => {
            cfg.evaluation.nu_slices.iter().flat_map(|&nu| spots.iter().map(move |m| vec![t, m * k, nu])).collect()
        }
    }
}

/// Compares a network against an oracle on the evaluation grid. Also
/// returns the per-point comparison table.
pub fn evaluate(cfg: &ExperimentConfig, params: &NetworkParams, oracle: &Oracle) -> Result<(Evaluation, Table)> {
    let domain = cfg.domain()?;
    let dim = domain.spatial_dim();
    let steps = cfg.evaluation_steps();
    let (points, weights) = tensor_grid(&domain, &steps)?;
    let (kind, strike, band) = (cfg.kind(), cfg.model.strike, cfg.evaluation.near_strike_band);
    let clamp = cfg.evaluation.clamp_threshold;

    let mut approx = Vec::with_capacity(weights.len());
    let mut reference = Vec::with_capacity(weights.len());
    let mut table = Table::new(io::comparison_header(dim));
    let (mut near_a, mut near_r, mut near_w) = (Vec::new(), Vec::new(), Vec::new());
    let (mut max_clamped, mut max_clamped_near) = (0.0f64, 0.0f64);
    for (p, &w) in points.chunks(dim + 1).zip(&weights) {
        let a = params.forward(p)?;
        let r = oracle.value(p)?;
        let c = clamped_error(a, r, clamp);
        max_clamped = max_clamped.max(c);
        if near_strike(kind, strike, band, p) {
            near_a.push(a);
            near_r.push(r);
            near_w.push(w);
            max_clamped_near = max_clamped_near.max(c);
        }
        table.push(p.iter().copied().chain([r, a, relative_error(a, r), c]));
        approx.push(a);
        reference.push(r);
    }
    let tag = |mut e: ErrorReport| {
        e.clamp_threshold = clamp;
        e
    };
    let whole = tag(relative_norms(&approx, &reference, Some(&weights))?);
    let whole_unweighted = tag(relative_norms(&approx, &reference, None)?);
    let near = if near_a.is_empty() { None } else { Some(tag(relative_norms(&near_a, &near_r, Some(&near_w))?)) };

    let mut rows = Vec::new();
    for p in near_strike_points(cfg) {
        let jet = params.input_jet(&p)?;
        let r = oracle.value(&p)?;
        let g = oracle.greeks(&p);
        rows.push(NearStrikeRow {
            reference: r,
            approx: jet.value,
            price_rel_err: relative_error(jet.value, r),
            delta: jet.d_x[0],
            delta_ref: g.map(|g| g.0),
            delta_rel_err: g.map(|g| relative_error(jet.d_x[0], g.0)),
            gamma: jet.d_xx[0][0],
            gamma_ref: g.map(|g| g.1),
            gamma_rel_err: g.map(|g| relative_error(jet.d_xx[0][0], g.1)),
            point: p,
        });
    }
    let eval = Evaluation {
        oracle: oracle.name().into(),
        steps,
        whole,
        whole_unweighted,
        near_strike: near,
        near_strike_band: band,
        max_clamped,
        max_clamped_near_strike: max_clamped_near,
        table: rows,
    };
    Ok((eval, table))
}

fn near_strike_table(dim: usize, rows: &[(f64, NearStrikeRow)], with_lambda: bool) -> Table {
    let mut header: Vec<String> = if with_lambda { vec!["lambda_b".into()] } else { Vec::new() };
    header.push("t".into());
    header.extend(io::axis_columns(dim));
    header.extend(
        ["ref", "approx", "price_rel_err", "delta", "delta_rel_err", "gamma", "gamma_rel_err"].map(String::from),
    );
    let mut t = Table::new(header);
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    for (lambda_b, r) in rows {
        let mut cells: Vec<String> = if with_lambda { vec![lambda_b.to_string()] } else { Vec::new() };
        cells.extend(r.point.iter().map(|v| v.to_string()));
        cells.extend([r.reference.to_string(), r.approx.to_string(), r.price_rel_err.to_string()]);
        cells.extend([r.delta.to_string(), opt(r.delta_rel_err), r.gamma.to_string(), opt(r.gamma_rel_err)]);
        t.push_cells(cells);
    }
    t
}

/// One training run from a fresh initialization.
pub struct TrainedNetwork {
    pub params: NetworkParams,
    pub report: TrainReport,
    pub region_names: Vec<String>,
}

pub fn train_network(cfg: &ExperimentConfig, spec: &ModelSpec, seed: u64, log: Log) -> Result<TrainedNetwork> {
    let grid = build_grid(&spec.domain, &cfg.grid.steps)?;
    let arch = cfg.architecture()?;
    let params = NetworkParams::init(arch.clone(), seed)?;
    let mut x = params.flat().to_vec();
    let mut obj = PinnObjective::new(spec, &grid, params)?;
    for (id, w) in cfg.region_weights() {
        obj.evaluator_mut().set_region_weight(id, w, &grid)?;
    }
    let region_names: Vec<String> = obj.evaluator_mut().region_ids().iter().map(ToString::to_string).collect();
    let tc = cfg.train_config(seed);
    let lambda_b = spec.xva.lambda_b;
    let report = train(&mut obj, &mut x, &tc, &mut |p| {
        log(&format!("lambda_b={lambda_b} seed={seed} {:?} step {} loss {:.6e}", p.stage, p.step, p.total))
    })?;
    let params = NetworkParams::from_flat(arch, x)?.with_seed(Some(seed));
    Ok(TrainedNetwork { params, report, region_names })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub seed: u64,
    pub status: String,
    pub initial_loss: Option<f64>,
    pub final_loss: Option<f64>,
    pub evaluations: usize,
    pub error: Option<String>,
}

pub struct CaseOutcome {
    pub lambda_b: f64,
    pub directory: PathBuf,
    pub trials: Vec<TrialOutcome>,
    pub best_seed: u64,
    pub best: Checkpoint,
    pub evaluation: Evaluation,
}

pub struct TrainSummary {
    pub cases: Vec<CaseOutcome>,
    pub manifest: Manifest,
}

pub fn case_directory(out: &Path, lambda_b: f64) -> PathBuf {
    out.join(format!("lambda_b_{lambda_b:.4}"))
}

/// Trains every seed for every swept `lambda_B`, keeps the trial with the
/// lowest final loss, and evaluates it against the oracle. A failing trial
/// is recorded and the sweep goes on; a case fails only if all trials do.
pub fn run_train(cfg: &ExperimentConfig, out: &Path, log: Log) -> Result<TrainSummary> {
    let config_json = cfg.to_json();
    let mut written = Vec::new();
    let config_path = out.join("config.json");
    io::write_text(&config_path, &config_json)?;
    written.push(config_path);
    let seeds = cfg.seeds();
    let dim = cfg.kind().spatial_dim();
    if cfg.output.write_grid {
        let spec = cfg.spec(cfg.model.xva.lambda_b[0])?;
        let path = out.join("grid.csv");
        io::grid_table(&build_grid(&spec.domain, &cfg.grid.steps)?).write(&path)?;
        written.push(path);
    }

    let mut cases = Vec::new();
    let mut summary_rows = Vec::new();
    for &lambda_b in &cfg.model.xva.lambda_b {
        let spec = cfg.spec(lambda_b)?;
        let dir = case_directory(out, lambda_b);
        let mut trials = Vec::new();
        let mut best: Option<(f64, u64, NetworkParams)> = None;
        for &seed in &seeds {
            match train_network(cfg, &spec, seed, log) {
                Ok(run) => {
                    let seed_dir = dir.join(format!("seed_{seed}"));
                    let points: Vec<_> = run.report.trajectory().collect();
                    let path = seed_dir.join("trajectory.csv");
                    io::trajectory_table(&run.region_names, &points).write(&path)?;
                    written.push(path);
                    let final_loss = run.report.final_value;
                    if cfg.output.save_all_checkpoints {
                        let ck = Checkpoint {
                            params: run.params.clone(),
                            model: Some(cfg.kind()),
                            final_loss: Some(final_loss),
                        };
                        let path = seed_dir.join("checkpoint.json");
                        ck.save(&path)?;
                        written.push(path);
                    }
                    trials.push(TrialOutcome {
                        seed,
                        status: run.report.status.to_string(),
                        initial_loss: Some(run.report.adam.initial_value),
                        final_loss: Some(final_loss),
                        evaluations: run.report.adam.evaluations
                            + run.report.lbfgs.as_ref().map_or(0, |r| r.evaluations),
                        error: None,
                    });
                    log(&format!(
                        "lambda_b={lambda_b} seed={seed} finished: {} loss {final_loss:.6e}",
                        run.report.status
                    ));
                    // a non-finite abort still leaves the last finite iterate
                    if final_loss.is_finite() && best.as_ref().map_or(true, |b| final_loss < b.0) {
                        best = Some((final_loss, seed, run.params));
                    }
                }
                Err(CliError::Numeric(msg)) => {
                    log(&format!("lambda_b={lambda_b} seed={seed} failed: {msg}"));
                    trials.push(TrialOutcome {
                        seed,
                        status: "failed".into(),
                        initial_loss: None,
                        final_loss: None,
                        evaluations: 0,
                        error: Some(msg),
                    });
                }
                Err(other) => return Err(other),
            }
        }
        let Some((final_loss, best_seed, params)) = best else {
            return Err(CliError::Numeric(format!("every trial failed for lambda_b = {lambda_b}")));
        };
        let best = Checkpoint { params, model: Some(cfg.kind()), final_loss: Some(final_loss) };
        let path = dir.join("best_checkpoint.json");
        best.save(&path)?;
        written.push(path);

        let mut trial_table = Table::new(["seed", "status", "initial_loss", "final_loss", "evaluations", "best"]);
        for t in &trials {
            let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
            trial_table.push_cells([
                t.seed.to_string(),
                t.status.clone(),
                opt(t.initial_loss),
                opt(t.final_loss),
                t.evaluations.to_string(),
                (t.seed == best_seed).to_string(),
            ]);
        }
        let path = dir.join("trials.csv");
        trial_table.write(&path)?;
        written.push(path);

        log(&format!("lambda_b={lambda_b}: evaluating seed {best_seed}"));
        let oracle = Oracle::for_spec(&spec, &cfg.reference_config())?;
        let (evaluation, comparison) = evaluate(cfg, &best.params, &oracle)?;
        let path = dir.join("comparison.csv");
        comparison.write(&path)?;
        written.push(path);
        let path = dir.join("near_strike.csv");
        let rows: Vec<_> = evaluation.table.iter().map(|r| (lambda_b, r.clone())).collect();
        near_strike_table(dim, &rows, false).write(&path)?;
        written.push(path);
        let path = dir.join("report.json");
        io::write_json(&path, &evaluation)?;
        written.push(path);
        log(&format!(
            "lambda_b={lambda_b}: log10 rel L1/L2/Linf {:.3}/{:.3}/{:.3}",
            evaluation.whole.log10_l1, evaluation.whole.log10_l2, evaluation.whole.log10_linf
        ));
        summary_rows.extend(evaluation.table.iter().map(|r| (lambda_b, r.clone())));
        cases.push(CaseOutcome { lambda_b, directory: dir, trials, best_seed, best, evaluation });
    }

    let path = out.join("near_strike_summary.csv");
    near_strike_table(dim, &summary_rows, true).write(&path)?;
    written.push(path);

    let mut manifest = Manifest::new("train", &config_json);
    manifest.seeds = seeds;
    manifest.lambda_b = cfg.model.xva.lambda_b.clone();
    manifest.mode = mode_name(cfg);
    for f in &written {
        manifest.record(out, f)?;
    }
    manifest.write(out)?;
    Ok(TrainSummary { cases, manifest })
}

fn mode_name(cfg: &ExperimentConfig) -> String {
    serde_json::to_value(cfg.model.mode).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

pub fn axis_names(cfg: &ExperimentConfig) -> Result<Vec<String>> {
    Ok(cfg.domain()?.axes.iter().map(|a| a.name.clone()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FdCase {
    pub lambda_b: f64,
    pub surface: PathBuf,
    pub rows: usize,
    pub max_fixed_point_iterations: usize,
    pub feller: Option<bool>,
    /// Against the closed form, for the one-asset model.
    pub closed_form: Option<ErrorReport>,
}

/// Reference surfaces for every swept `lambda_B`.
pub fn run_fd(cfg: &ExperimentConfig, out: &Path, log: Log) -> Result<Vec<FdCase>> {
    let config_json = cfg.to_json();
    let fd = cfg.reference_config();
    let names = axis_names(cfg)?;
    let mut written = Vec::new();
    let mut cases = Vec::new();
    for &lambda_b in &cfg.model.xva.lambda_b {
        let spec = cfg.spec(lambda_b)?;
        log(&format!("lambda_b={lambda_b}: solving on steps {:?}", fd.steps));
        let surface = solve_checked(&spec, &fd)?;
        let path = out.join(format!("surface_lambda_b_{lambda_b:.4}.csv"));
        let rows = io::write_surface(&path, &surface, &names)?;
        written.push(io::sidecar_path(&path));
        written.push(path.clone());
        if let Some(f) = surface.meta.feller {
            log(&format!("lambda_b={lambda_b}: feller={f}"));
        }
        let closed_form = if cfg.kind() == Kind::Bs1d {
            let reference: Vec<f64> = (0..surface.values.len())
                .map(|i| {
                    let p = surface.point(i);
                    risky_bs_price(&spec, p[0], p[1])
                })
                .collect::<std::result::Result<_, _>>()?;
            let weights = tensor_weights(&surface.axes)?;
            let report = relative_norms(&surface.values, &reference, Some(&weights))?;
            log(&format!("lambda_b={lambda_b}: log10 rel L2 against the closed form {:.3}", report.log10_l2));
            let rpath = out.join(format!("surface_lambda_b_{lambda_b:.4}_vs_closed_form.json"));
            io::write_json(&rpath, &report)?;
            written.push(rpath);
            Some(report)
        } else {
            None
        };
        cases.push(FdCase {
            lambda_b,
            surface: path,
            rows,
            max_fixed_point_iterations: surface.meta.max_fixed_point_iterations,
            feller: surface.meta.feller,
            closed_form,
        });
    }
    let mut manifest = Manifest::new("fd", &config_json);
    manifest.lambda_b = cfg.model.xva.lambda_b.clone();
    manifest.mode = mode_name(cfg);
    for f in &written {
        manifest.record(out, f)?;
    }
    manifest.write(out)?;
    Ok(cases)
}

/// The field under test in a comparison.
pub enum Approx {
    Network(Checkpoint),
    Surface(SolutionSurface),
}

/// The reference side of a comparison.
pub enum Reference {
    Surface(SolutionSurface),
    ClosedForm(ModelSpec),
}

fn surface_kind(s: &SolutionSurface) -> Result<Kind> {
    Kind::parse(&s.meta.model)
        .ok_or_else(|| CliError::validation(format!("surface has unknown model `{}`", s.meta.model)))
}

/// Compares a network or surface against a surface or the closed form at
/// the reference grid nodes (or, for a network against the closed form, on
/// `fallback_steps` over `fallback_domain`). Writes `report.json` and
/// `clamped_map.csv` under `out`.
pub fn run_compare(
    approx: &Approx,
    reference: &Reference,
    fallback: Option<(&ExperimentConfig, Vec<usize>)>,
    clamp: f64,
    out: &Path,
) -> Result<ErrorReport> {
    let ref_kind = match reference {
        Reference::Surface(s) => surface_kind(s)?,
        Reference::ClosedForm(spec) => Kind::from_core(spec.kind()),
    };
    let (approx_kind, approx_dim) = match approx {
        Approx::Network(ck) => (ck.model, ck.params.architecture().spatial_dim()),
        Approx::Surface(s) => (Some(surface_kind(s)?), s.spatial_dim()),
    };
    if let Some(k) = approx_kind {
        if k != ref_kind {
            return Err(CliError::validation(format!(
                "model kinds differ: approximation is {}, reference is {}",
                k.name(),
                ref_kind.name()
            )));
        }
    }
    if approx_dim != ref_kind.spatial_dim() {
        return Err(CliError::validation(format!(
            "dimension mismatch: approximation has {approx_dim} spatial inputs, reference model has {}",
            ref_kind.spatial_dim()
        )));
    }

    let (points, weights): (Vec<Vec<f64>>, Vec<f64>) = match (reference, approx) {
        (Reference::Surface(s), _) | (Reference::ClosedForm(_), Approx::Surface(s)) => {
            ((0..s.values.len()).map(|i| s.point(i)).collect(), tensor_weights(&s.axes)?)
        }
        (Reference::ClosedForm(_), Approx::Network(_)) => {
            let (cfg, steps) =
                fallback.ok_or_else(|| CliError::validation("a config is needed to grid the closed-form reference"))?;
            let domain = cfg.domain()?;
            let (pts, w) = tensor_grid(&domain, &steps)?;
            (pts.chunks(domain.spatial_dim() + 1).map(<[f64]>::to_vec).collect(), w)
        }
    };
    if let (Reference::Surface(r), Approx::Surface(a)) = (reference, approx) {
        if r.axes != a.axes {
            return Err(CliError::validation("grid mismatch: the two surfaces have different axes"));
        }
    }

    let dim = approx_dim;
    let mut table = Table::new(io::comparison_header(dim));
    let mut a_vals = Vec::with_capacity(points.len());
    let mut r_vals = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        let r = match reference {
            Reference::Surface(s) => s.values[i],
            Reference::ClosedForm(spec) => risky_bs_price(spec, p[0], p[1])?,
        };
        let a = match approx {
            Approx::Network(ck) => ck.params.forward(p)?,
            // both sides share the node ordering, checked above
            Approx::Surface(s) => s.values[i],
        };
        table.push(p.iter().copied().chain([r, a, relative_error(a, r), clamped_error(a, r, clamp)]));
        a_vals.push(a);
        r_vals.push(r);
    }
    let mut report = relative_norms(&a_vals, &r_vals, Some(&weights))?;
    report.clamp_threshold = clamp;
    table.write(&out.join("clamped_map.csv"))?;
    io::write_json(&out.join("report.json"), &report)?;
    Ok(report)
}

/// Greek column names for a model, after `t,axis..,price`.
fn greek_columns(kind: Option<Kind>, dim: usize) -> Vec<&'static str> {
    match (kind, dim) {
        (Some(Kind::Heston), _) => vec!["delta", "gamma", "vega"],
        (Some(Kind::BasketAverage | Kind::BasketWorstOf), _) => {
            vec!["delta1", "delta2", "gamma11", "gamma12", "gamma22"]
        }
        (_, 1) => vec!["delta", "gamma"],
        _ => vec!["d_x1", "d_x2", "d_x1x1", "d_x1x2", "d_x2x2"],
    }
}

/// Price and input-derivative Greeks of a network at `points`, from its jets.
pub fn greeks_table(ck: &Checkpoint, points: &[Vec<f64>]) -> Result<Table> {
    let dim = ck.params.architecture().spatial_dim();
    let cols = greek_columns(ck.model, dim);
    let mut header = vec!["t".to_string()];
    header.extend(io::axis_columns(dim));
    header.push("price".into());
    header.extend(cols.iter().map(|c| c.to_string()));
    let mut table = Table::new(header);
    for p in points {
        if p.len() != dim + 1 {
            return Err(CliError::validation(format!(
                "dimension mismatch: point has {} coordinates, network takes {}",
                p.len(),
                dim + 1
            )));
        }
        let j = ck.params.input_jet(p)?;
        let greeks: Vec<f64> = match (ck.model, dim) {
            (Some(Kind::Heston), _) => vec![j.d_x[0], j.d_xx[0][0], j.d_x[1]],
            (_, 1) => vec![j.d_x[0], j.d_xx[0][0]],
            _ => vec![j.d_x[0], j.d_x[1], j.d_xx[0][0], j.d_xx[0][1], j.d_xx[1][1]],
        };
        table.push(p.iter().copied().chain([j.value]).chain(greeks));
    }
    Ok(table)
}

/// Reads `t,axis1[,axis2]` rows (with a header line).
pub fn read_points(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader =
        csv::Reader::from_path(path).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    let mut points = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec?;
        let p = rec
            .iter()
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| CliError::validation(format!("{}: row {row}: {e}", path.display())))?;
        points.push(p);
    }
    Ok(points)
}

/// Closed-form risky prices and Greeks for the one-asset model, one row
/// per swept `lambda_B` and point.
pub fn price_table(cfg: &ExperimentConfig, points: &[Vec<f64>]) -> Result<Table> {
    if cfg.kind() != Kind::Bs1d {
        return Err(CliError::validation(format!(
            "model.kind: closed-form prices exist only for bs1d, not {}",
            cfg.kind().name()
        )));
    }
    let mut table = Table::new(["lambda_b", "t", "axis1", "price", "delta", "gamma", "theta"]);
    for &lambda_b in &cfg.model.xva.lambda_b {
        let spec = cfg.spec(lambda_b)?;
        for p in points {
            if p.len() != 2 {
                return Err(CliError::validation(format!(
                    "dimension mismatch: point has {} coordinates, expected 2",
                    p.len()
                )));
            }
            let g = risky_bs_greeks(&spec, p[0], p[1])?;
            table.push([lambda_b, p[0], p[1], g.price, g.delta, g.gamma, g.theta]);
        }
    }
    Ok(table)
}
