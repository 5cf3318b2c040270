//! Full-batch Adam followed by L-BFGS with a strong Wolfe line search.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::geometry::CollocationSet;
use crate::loss::{LossBreakdown, LossEvaluator};
use crate::math;
use crate::models::ModelSpec;
use crate::network::NetworkParams;

/// Inverse time decay `lr0 / (1 + delta k / a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Decay {
    pub delta: f64,
    pub a: u64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainConfig {
    pub adam_steps: usize,
    pub lbfgs_steps: usize,
    pub lr0: f64,
    pub decay: Option<Decay>,
    pub lbfgs_memory: usize,
    pub seed: u64,
    /// Trajectory sampling period; 0 records only the end points.
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            adam_steps: 10_000,
            lbfgs_steps: 2_500,
            lr0: 1e-3,
            decay: None,
            lbfgs_memory: 10,
            seed: 0,
            log_every: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr0 > 0.0 && self.lr0.is_finite()) {
            return Err(Error::InvalidArgument(alloc::format!("lr0 must be positive, got {}", self.lr0)));
        }
        if let Some(d) = self.decay {
            if d.a == 0 || !(d.delta >= 0.0) {
                return Err(Error::InvalidArgument("decay needs a > 0 and delta >= 0".into()));
            }
        }
        if self.lbfgs_memory == 0 {
            return Err(Error::InvalidArgument("lbfgs_memory must be at least 1".into()));
        }
        Ok(())
    }
}

/// Learning rate at Adam step `k`.
pub fn lr_at(config: &TrainConfig, k: usize) -> f64 {
    match config.decay {
        Some(d) => config.lr0 / (1.0 + d.delta * k as f64 / d.a as f64),
        None => config.lr0,
    }
}

/// A differentiable function of a flat parameter vector.
pub trait Objective {
    fn dim(&self) -> usize;
    /// Returns `f(x)` and overwrites `grad` with its gradient.
    fn value_grad(&mut self, x: &[f64], grad: &mut [f64]) -> Result<f64>;
    /// Per-component terms of the most recent evaluation, if any.
    fn last_terms(&self) -> Vec<f64> {
        Vec::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Stage {
    Adam,
    Lbfgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Status {
    Converged,
    StepLimit,
    LineSearchFailure,
    NonFinite,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Converged => "converged",
            Status::StepLimit => "step-limit",
            Status::LineSearchFailure => "line-search-failure",
            Status::NonFinite => "non-finite",
        })
    }
}

/// One logged optimizer state.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrajectoryPoint {
    pub stage: Stage,
    /// Global step counter across both stages.
    pub step: usize,
    pub total: f64,
    pub terms: Vec<f64>,
    /// Adam learning rate, or the accepted L-BFGS step length.
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub status: Status,
    pub iterations: usize,
    pub evaluations: usize,
    pub initial_value: f64,
    pub final_value: f64,
    pub trajectory: Vec<TrajectoryPoint>,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
const GRAD_TOL: f64 = 1e-10;

fn is_non_finite(e: &Error) -> bool {
    matches!(e, Error::NonFinite { .. })
}

fn norm(v: &[f64]) -> f64 {
    math::sqrt(v.iter().map(|x| x * x).sum())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn should_log(log_every: usize, k: usize) -> bool {
    log_every > 0 && k % log_every == 0
}

/// Runs `config.adam_steps` Adam steps from `x`, updating it in place.
/// `step_offset` shifts the logged step numbers.
pub fn adam_run<O: Objective + ?Sized>(
    objective: &mut O,
    x: &mut [f64],
    config: &TrainConfig,
    step_offset: usize,
    callback: &mut dyn FnMut(&TrajectoryPoint),
) -> Result<RunReport> {
    config.validate()?;
    let n = x.len();
    if objective.dim() != n {
        return Err(Error::DimensionMismatch { expected: objective.dim(), found: n });
    }
    let mut m = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut trajectory = Vec::new();
    let mut initial_value = f64::NAN;
    let mut last_good = x.to_vec();
    let mut b1 = 1.0;
    let mut b2 = 1.0;
    let mut evaluations = 0;
    for k in 0..config.adam_steps {
        let f = match objective.value_grad(x, &mut g) {
            Ok(f) if f.is_finite() => f,
            Ok(_) => return Ok(abort(x, &last_good, initial_value, k, evaluations, trajectory)),
            Err(e) if is_non_finite(&e) => return Ok(abort(x, &last_good, initial_value, k, evaluations, trajectory)),
            Err(e) => return Err(e),
        };
        evaluations += 1;
        if k == 0 {
            initial_value = f;
        }
        last_good.copy_from_slice(x);
        let lr = lr_at(config, k);
        if should_log(config.log_every, k) {
            let point = TrajectoryPoint {
                stage: Stage::Adam,
                step: step_offset + k,
                total: f,
                terms: objective.last_terms(),
                lr,
            };
            callback(&point);
            trajectory.push(point);
        }
        b1 *= BETA1;
        b2 *= BETA2;
        for i in 0..n {
            m[i] = BETA1 * m[i] + (1.0 - BETA1) * g[i];
            v[i] = BETA2 * v[i] + (1.0 - BETA2) * g[i] * g[i];
            let m_hat = m[i] / (1.0 - b1);
            let v_hat = v[i] / (1.0 - b2);
            x[i] -= lr * m_hat / (math::sqrt(v_hat) + ADAM_EPS);
        }
    }
    let k = config.adam_steps;
    let f = match objective.value_grad(x, &mut g) {
        Ok(f) if f.is_finite() => f,
        Ok(_) => return Ok(abort(x, &last_good, initial_value, k, evaluations, trajectory)),
        Err(e) if is_non_finite(&e) => return Ok(abort(x, &last_good, initial_value, k, evaluations, trajectory)),
        Err(e) => return Err(e),
    };
    evaluations += 1;
    if k == 0 {
        initial_value = f;
    }
    let point = TrajectoryPoint {
        stage: Stage::Adam,
        step: step_offset + k,
        total: f,
        terms: objective.last_terms(),
        lr: lr_at(config, k),
    };
    callback(&point);
    trajectory.push(point);
    Ok(RunReport { status: Status::StepLimit, iterations: k, evaluations, initial_value, final_value: f, trajectory })
}

fn abort(
    x: &mut [f64],
    last_good: &[f64],
    initial_value: f64,
    k: usize,
    evaluations: usize,
    trajectory: Vec<TrajectoryPoint>,
) -> RunReport {
    x.copy_from_slice(last_good);
    let final_value = trajectory.last().map(|p| p.total).unwrap_or(initial_value);
    RunReport { status: Status::NonFinite, iterations: k, evaluations, initial_value, final_value, trajectory }
}

struct Probe {
    alpha: f64,
    f: f64,
    slope: f64,
}

/// Evaluates `f(x + alpha d)`; failures to produce a finite value read as `+inf`.
fn probe<O: Objective + ?Sized>(
    objective: &mut O,
    x: &[f64],
    d: &[f64],
    alpha: f64,
    trial: &mut [f64],
    g: &mut [f64],
    evaluations: &mut usize,
) -> Result<Probe> {
    for i in 0..x.len() {
        trial[i] = x[i] + alpha * d[i];
    }
    *evaluations += 1;
    match objective.value_grad(trial, g) {
        Ok(f) if f.is_finite() => Ok(Probe { alpha, f, slope: dot(g, d) }),
        Ok(_) => Ok(Probe { alpha, f: f64::INFINITY, slope: f64::NAN }),
        Err(e) if is_non_finite(&e) => Ok(Probe { alpha, f: f64::INFINITY, slope: f64::NAN }),
        Err(e) => Err(e),
    }
}

/// Minimizer of the cubic through two points with slopes, kept inside the
/// central 80% of the bracket; bisection when the fit is unusable.
fn interpolate(lo: &Probe, hi: &Probe) -> f64 {
    let (a, b) = (lo.alpha, hi.alpha);
    let width = b - a;
    let fallback = 0.5 * (a + b);
    let mut t = fallback;
    if hi.f.is_finite() && hi.slope.is_finite() {
        let d1 = lo.slope + hi.slope - 3.0 * (lo.f - hi.f) / (a - b);
        let disc = d1 * d1 - lo.slope * hi.slope;
        if disc >= 0.0 {
            let d2 = math::sqrt(disc) * if b > a { 1.0 } else { -1.0 };
            let denom = hi.slope - lo.slope + 2.0 * d2;
            if denom != 0.0 {
                t = b - (b - a) * (hi.slope + d2 - d1) / denom;
            }
        }
    }
    let (l, h) = (a.min(b), a.max(b));
    let margin = 0.1 * width.abs();
    if !t.is_finite() || t < l + margin || t > h - margin {
        fallback
    } else {
        t
    }
}

enum Search {
    Accepted(Probe),
    Failed(Option<Probe>),
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;

#[allow(clippy::too_many_arguments)]
fn strong_wolfe<O: Objective + ?Sized>(
    objective: &mut O,
    x: &[f64],
    d: &[f64],
    f0: f64,
    slope0: f64,
    alpha_init: f64,
    trial: &mut [f64],
    g_trial: &mut [f64],
    g_best: &mut [f64],
    evaluations: &mut usize,
) -> Result<Search> {
    let mut best: Option<Probe> = None;
    let keep_best = |p: &Probe, g: &[f64], best: &mut Option<Probe>, g_best: &mut [f64]| {
        if p.f < f0 + C1 * p.alpha * slope0 && best.as_ref().map_or(true, |b| p.f < b.f) {
            g_best.copy_from_slice(g);
            *best = Some(Probe { alpha: p.alpha, f: p.f, slope: p.slope });
        }
    };
    let mut prev = Probe { alpha: 0.0, f: f0, slope: slope0 };
    let mut alpha = alpha_init;
    let mut bracket: Option<(Probe, Probe)> = None;
    for i in 0..25 {
        let p = probe(objective, x, d, alpha, trial, g_trial, evaluations)?;
        keep_best(&p, g_trial, &mut best, g_best);
        if p.f > f0 + C1 * alpha * slope0 || (i > 0 && p.f >= prev.f) {
            bracket = Some((prev, p));
            break;
        }
        if p.slope.abs() <= -C2 * slope0 {
            g_best.copy_from_slice(g_trial);
            return Ok(Search::Accepted(p));
        }
        if p.slope >= 0.0 {
            bracket = Some((p, prev));
            break;
        }
        prev = p;
        alpha *= 2.0;
    }
    let Some((mut lo, mut hi)) = bracket else {
        return Ok(Search::Failed(best));
    };
    for _ in 0..30 {
        let a = interpolate(&lo, &hi);
        if (hi.alpha - lo.alpha).abs() <= 1e-16 * lo.alpha.abs().max(1e-300) {
            break;
        }
        let p = probe(objective, x, d, a, trial, g_trial, evaluations)?;
        keep_best(&p, g_trial, &mut best, g_best);
        if p.f > f0 + C1 * a * slope0 || p.f >= lo.f {
            hi = p;
        } else {
            if p.slope.abs() <= -C2 * slope0 {
                g_best.copy_from_slice(g_trial);
                return Ok(Search::Accepted(p));
            }
            if p.slope * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = p;
        }
    }
    Ok(Search::Failed(best))
}

/// Runs at most `config.lbfgs_steps` L-BFGS iterations from `x`.
pub fn lbfgs_run<O: Objective + ?Sized>(
    objective: &mut O,
    x: &mut [f64],
    config: &TrainConfig,
    step_offset: usize,
    callback: &mut dyn FnMut(&TrajectoryPoint),
) -> Result<RunReport> {
    config.validate()?;
    let n = x.len();
    if objective.dim() != n {
        return Err(Error::DimensionMismatch { expected: objective.dim(), found: n });
    }
    let mut g = vec![0.0; n];
    let mut evaluations = 1;
    let mut f = match objective.value_grad(x, &mut g) {
        Ok(f) if f.is_finite() => f,
        Ok(_) => return Ok(RunReport::non_finite(0, 1)),
        Err(e) if is_non_finite(&e) => return Ok(RunReport::non_finite(0, 1)),
        Err(e) => return Err(e),
    };
    let initial_value = f;
    let mut trajectory = Vec::new();
    let mut record = |step: usize, f: f64, lr: f64, terms: Vec<f64>, trajectory: &mut Vec<TrajectoryPoint>| {
        let point = TrajectoryPoint { stage: Stage::Lbfgs, step: step_offset + step, total: f, terms, lr };
        callback(&point);
        trajectory.push(point);
    };
    let mut last_terms = objective.last_terms();
    record(0, f, 0.0, last_terms.clone(), &mut trajectory);

    let m = config.lbfgs_memory;
    let mut s_hist: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut y_hist: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rho_hist: Vec<f64> = Vec::with_capacity(m);
    let mut d = vec![0.0; n];
    let mut alpha_buf = vec![0.0; m];
    let mut trial = vec![0.0; n];
    let mut g_trial = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut status = Status::StepLimit;
    let mut iterations = 0;
    let mut last_logged = 0;

    if norm(&g) < GRAD_TOL {
        status = Status::Converged;
    } else {
        for it in 1..=config.lbfgs_steps {
            // two-loop recursion
            d.copy_from_slice(&g);
            let k = s_hist.len();
            for j in (0..k).rev() {
                let a = rho_hist[j] * dot(&s_hist[j], &d);
                alpha_buf[j] = a;
                for i in 0..n {
                    d[i] -= a * y_hist[j][i];
                }
            }
            if k > 0 {
                let gamma = dot(&s_hist[k - 1], &y_hist[k - 1]) / dot(&y_hist[k - 1], &y_hist[k - 1]);
                d.iter_mut().for_each(|v| *v *= gamma);
            }
            for j in 0..k {
                let b = rho_hist[j] * dot(&y_hist[j], &d);
                for i in 0..n {
                    d[i] += s_hist[j][i] * (alpha_buf[j] - b);
                }
            }
            d.iter_mut().for_each(|v| *v = -*v);
            let mut slope0 = dot(&g, &d);
            if !(slope0 < 0.0) {
                s_hist.clear();
                y_hist.clear();
                rho_hist.clear();
                for i in 0..n {
                    d[i] = -g[i];
                }
                slope0 = dot(&g, &d);
            }
            let alpha_init = if s_hist.is_empty() { (1.0 / norm(&g)).min(1.0) } else { 1.0 };
            let search = strong_wolfe(
                objective,
                x,
                &d,
                f,
                slope0,
                alpha_init,
                &mut trial,
                &mut g_trial,
                &mut g_new,
                &mut evaluations,
            )?;
            let (p, failed) = match search {
                Search::Accepted(p) => (p, false),
                Search::Failed(Some(p)) => (p, true),
                Search::Failed(None) => {
                    status = Status::LineSearchFailure;
                    break;
                }
            };
            let mut s = vec![0.0; n];
            let mut y = vec![0.0; n];
            for i in 0..n {
                s[i] = p.alpha * d[i];
                y[i] = g_new[i] - g[i];
                x[i] += s[i];
            }
            let f_old = f;
            f = p.f;
            g.copy_from_slice(&g_new);
            iterations = it;
            let sy = dot(&s, &y);
            if sy > 1e-12 * norm(&s) * norm(&y) && sy > 0.0 {
                if s_hist.len() == m {
                    s_hist.remove(0);
                    y_hist.remove(0);
                    rho_hist.remove(0);
                }
                rho_hist.push(1.0 / sy);
                s_hist.push(s);
                y_hist.push(y);
            }
            if failed {
                last_terms = Vec::new();
            } else {
                last_terms = objective.last_terms();
            }
            if should_log(config.log_every, it) {
                record(it, f, p.alpha, last_terms.clone(), &mut trajectory);
                last_logged = it;
            }
            if failed {
                status = Status::LineSearchFailure;
                break;
            }
            if norm(&g) < GRAD_TOL || f_old - f <= 1e-15 * f_old.abs() {
                status = Status::Converged;
                break;
            }
        }
    }
    if iterations > 0 && last_logged != iterations {
        record(iterations, f, 0.0, last_terms, &mut trajectory);
    }
    Ok(RunReport { status, iterations, evaluations, initial_value, final_value: f, trajectory })
}

impl RunReport {
    fn non_finite(iterations: usize, evaluations: usize) -> Self {
        RunReport {
            status: Status::NonFinite,
            iterations,
            evaluations,
            initial_value: f64::NAN,
            final_value: f64::NAN,
            trajectory: Vec::new(),
        }
    }
}

/// Result of [`train`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub adam: RunReport,
    pub lbfgs: Option<RunReport>,
    pub final_value: f64,
    pub status: Status,
}

impl TrainReport {
    pub fn trajectory(&self) -> impl Iterator<Item = &TrajectoryPoint> {
        self.adam.trajectory.iter().chain(self.lbfgs.iter().flat_map(|r| r.trajectory.iter()))
    }
}

/// Adam then L-BFGS on `x`.
pub fn train<O: Objective + ?Sized>(
    objective: &mut O,
    x: &mut [f64],
    config: &TrainConfig,
    callback: &mut dyn FnMut(&TrajectoryPoint),
) -> Result<TrainReport> {
    let adam = adam_run(objective, x, config, 0, callback)?;
    if adam.status == Status::NonFinite {
        return Ok(TrainReport { final_value: adam.final_value, status: Status::NonFinite, adam, lbfgs: None });
    }
    if config.lbfgs_steps == 0 {
        return Ok(TrainReport { final_value: adam.final_value, status: adam.status, adam, lbfgs: None });
    }
    let lbfgs = lbfgs_run(objective, x, config, config.adam_steps, callback)?;
    let (final_value, status) = if lbfgs.status == Status::NonFinite {
        (adam.final_value, Status::NonFinite)
    } else {
        (lbfgs.final_value, lbfgs.status)
    };
    Ok(TrainReport { adam, lbfgs: Some(lbfgs), final_value, status })
}

/// The network loss as an [`Objective`] over the flat parameter vector.
pub struct PinnObjective {
    evaluator: LossEvaluator,
    params: NetworkParams,
    last: Option<LossBreakdown>,
}

impl PinnObjective {
    pub fn new(spec: &ModelSpec, grid: &CollocationSet, params: NetworkParams) -> Result<Self> {
        Ok(PinnObjective { evaluator: LossEvaluator::new(spec, grid)?, params, last: None })
    }

    pub fn from_evaluator(evaluator: LossEvaluator, params: NetworkParams) -> Self {
        PinnObjective { evaluator, params, last: None }
    }

    pub fn params(&self) -> &NetworkParams {
        &self.params
    }

    pub fn evaluator_mut(&mut self) -> &mut LossEvaluator {
        &mut self.evaluator
    }

    pub fn last_breakdown(&self) -> Option<&LossBreakdown> {
        self.last.as_ref()
    }

    /// Breakdown at `x` without the gradient.
    pub fn breakdown_at(&mut self, x: &[f64]) -> Result<LossBreakdown> {
        self.params.set_flat(x)?;
        self.evaluator.evaluate(&self.params)
    }

    pub fn into_params(self) -> NetworkParams {
        self.params
    }
}

impl Objective for PinnObjective {
    fn dim(&self) -> usize {
        self.params.len()
    }

    fn value_grad(&mut self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        self.params.set_flat(x)?;
        let loss = self.evaluator.evaluate_with_gradient(&self.params, grad)?;
        let total = loss.total;
        self.last = Some(loss);
        Ok(total)
    }

    fn last_terms(&self) -> Vec<f64> {
        self.last.as_ref().map(|l| l.terms.iter().map(|(_, v)| *v).collect()).unwrap_or_default()
    }
}
