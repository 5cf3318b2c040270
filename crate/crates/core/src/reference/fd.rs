//! Crank-Nicolson finite differences on uniform grids with a fixed-point
//! treatment of the nonlinear source.
//!
//! Node rows are either the discretized equation (centered differences,
//! one-sided second-order first derivatives on degenerate lower edges, the
//! 4-point stencil for the mixed term) or an algebraic boundary row:
//! a Dirichlet value, the linearity condition `V_N - 2 V_{N-1} + V_{N-2} = 0`,
//! or the Neumann condition `3 V_N - 4 V_{N-1} + V_{N-2} = 0`. The first few
//! steps can be replaced by pairs of implicit Euler half steps to damp the
//! payoff kink.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::banded::{BandedLu, BandedMatrix};
use super::surface::{SolutionSurface, SurfaceMeta};
use crate::error::{Error, Result};
use crate::models::{source_term, Market, ModelSpec};

/// Finite-difference settings.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FdConfig {
    /// `[N_T, N_1, ..., N_d]`.
    pub steps: Vec<usize>,
    pub fixed_point_tol: f64,
    pub max_iters: usize,
    /// Leading time steps done as two implicit Euler half steps.
    pub rannacher_steps: usize,
}

impl FdConfig {
    pub fn new(steps: Vec<usize>) -> Self {
        FdConfig { steps, fixed_point_tol: 1e-10, max_iters: 50, rannacher_steps: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Row {
    Pde,
    Dirichlet(usize),
    Extrapolate(usize),
    Neumann(usize),
}

struct Grid {
    /// Steps per spatial axis.
    n: Vec<usize>,
    h: Vec<f64>,
    origin: Vec<f64>,
    stride: Vec<usize>,
    nodes: usize,
}

impl Grid {
    fn index_of(&self, mut flat: usize) -> [usize; 2] {
        let mut idx = [0usize; 2];
        for a in (0..self.n.len()).rev() {
            idx[a] = flat % (self.n[a] + 1);
            flat /= self.n[a] + 1;
        }
        idx
    }

    fn coords(&self, idx: &[usize; 2]) -> [f64; 2] {
        let mut x = [0.0; 2];
        for a in 0..self.n.len() {
            x[a] = self.origin[a] + idx[a] as f64 * self.h[a];
        }
        x
    }
}

fn row_kind(spec: &ModelSpec, grid: &Grid, idx: &[usize; 2]) -> Row {
    let n = &grid.n;
    match spec.market {
        Market::Bs1d(_) => {
            if idx[0] == 0 {
                Row::Dirichlet(0)
            } else if idx[0] == n[0] {
                Row::Extrapolate(0)
            } else {
                Row::Pde
            }
        }
        Market::BasketAverage(_) | Market::BasketWorstOf(_) => {
            if idx[0] == 0 {
                Row::Dirichlet(0)
            } else if idx[1] == 0 {
                Row::Dirichlet(1)
            } else if idx[0] == n[0] {
                Row::Extrapolate(0)
            } else if idx[1] == n[1] {
                Row::Extrapolate(1)
            } else {
                Row::Pde
            }
        }
        Market::Heston(_) => {
            if idx[0] == n[0] {
                Row::Extrapolate(0)
            } else if idx[1] == n[1] {
                Row::Neumann(1)
            } else {
                Row::Pde
            }
        }
    }
}

/// Stencil of the spatial operator `sum a_ij d_ij + sum b_i d_i - r` at a node.
fn operator_row(spec: &ModelSpec, grid: &Grid, flat: usize, idx: &[usize; 2]) -> Result<Vec<(usize, f64)>> {
    let d = grid.n.len();
    let x = grid.coords(idx);
    let (a, b) = spec.coefficients(&x[..d]);
    let mut row: Vec<(usize, f64)> = vec![(flat, -spec.xva.r)];
    let off = |k: usize, delta: isize| -> usize { (flat as isize + delta * grid.stride[k] as isize) as usize };
    for k in 0..d {
        let h = grid.h[k];
        let interior = idx[k] > 0 && idx[k] < grid.n[k];
        if a[k][k] != 0.0 {
            if !interior {
                return Err(Error::InvalidGrid(format!(
                    "diffusion along axis {k} does not vanish on the edge at node {flat}"
                )));
            }
            let c = a[k][k] / (h * h);
            row.push((off(k, -1), c));
            row.push((flat, -2.0 * c));
            row.push((off(k, 1), c));
        }
        if b[k] != 0.0 {
            let c = b[k] / (2.0 * h);
            if interior {
                row.push((off(k, -1), -c));
                row.push((off(k, 1), c));
            } else if idx[k] == 0 {
                row.push((flat, -3.0 * c));
                row.push((off(k, 1), 4.0 * c));
                row.push((off(k, 2), -c));
            } else {
                row.push((flat, 3.0 * c));
                row.push((off(k, -1), -4.0 * c));
                row.push((off(k, -2), c));
            }
        }
    }
    if d == 2 && a[0][1] != 0.0 {
        let interior = (0..2).all(|k| idx[k] > 0 && idx[k] < grid.n[k]);
        if !interior {
            return Err(Error::InvalidGrid(format!("mixed term does not vanish on the edge at node {flat}")));
        }
        let c = 2.0 * a[0][1] / (4.0 * grid.h[0] * grid.h[1]);
        let (s0, s1) = (grid.stride[0] as isize, grid.stride[1] as isize);
        let f = flat as isize;
        row.push(((f + s0 + s1) as usize, c));
        row.push(((f + s0 - s1) as usize, -c));
        row.push(((f - s0 + s1) as usize, -c));
        row.push(((f - s0 - s1) as usize, c));
    }
    Ok(row)
}

struct Stepper {
    rows: Vec<Row>,
    ops: Vec<Vec<(usize, f64)>>,
    kl: usize,
    ku: usize,
}

impl Stepper {
    fn system(&self, grid: &Grid, theta_dt: f64) -> Result<BandedLu> {
        let n = grid.nodes;
        let mut m = BandedMatrix::zeros(n, self.kl, self.ku);
        for i in 0..n {
            match self.rows[i] {
                Row::Pde => {
                    m.add(i, i, 1.0);
                    for &(j, c) in &self.ops[i] {
                        m.add(i, j, -theta_dt * c);
                    }
                }
                Row::Dirichlet(_) => m.set(i, i, 1.0),
                Row::Extrapolate(k) => {
                    let s = grid.stride[k];
                    m.set(i, i, 1.0);
                    m.set(i, i - s, -2.0);
                    m.set(i, i - 2 * s, 1.0);
                }
                Row::Neumann(k) => {
                    let s = grid.stride[k];
                    m.set(i, i, 3.0);
                    m.set(i, i - s, -4.0);
                    m.set(i, i - 2 * s, 1.0);
                }
            }
        }
        m.factor()
    }

    fn apply_op(&self, i: usize, v: &[f64]) -> f64 {
        self.ops[i].iter().map(|&(j, c)| c * v[j]).sum()
    }
}

/// Solves the model on `[0, T] x domain` with the given resolution.
pub fn fd_solve(spec: &ModelSpec, cfg: &FdConfig) -> Result<SolutionSurface> {
    spec.validate()?;
    let d = spec.spatial_dim();
    if cfg.steps.len() != d + 1 {
        return Err(Error::DimensionMismatch { expected: d + 1, found: cfg.steps.len() });
    }
    if let Some(&n) = cfg.steps.iter().find(|&&n| n < 4) {
        return Err(Error::InvalidGrid(format!("finite differences need at least 4 steps per axis, got {n}")));
    }
    if !(cfg.fixed_point_tol > 0.0) || cfg.max_iters == 0 {
        return Err(Error::InvalidArgument("fixed-point tolerance and iteration cap must be positive".into()));
    }
    let n_t = cfg.steps[0];
    let n: Vec<usize> = cfg.steps[1..].to_vec();
    let h: Vec<f64> = spec.domain.axes.iter().zip(&n).map(|(a, &m)| a.length() / m as f64).collect();
    let origin: Vec<f64> = spec.domain.axes.iter().map(|a| a.min).collect();
    let mut stride = vec![1usize; d];
    for k in (0..d.saturating_sub(1)).rev() {
        stride[k] = stride[k + 1] * (n[k + 1] + 1);
    }
    let nodes: usize = n.iter().map(|m| m + 1).product();
    let grid = Grid { n: n.clone(), h, origin, stride, nodes };

    let mut rows = Vec::with_capacity(nodes);
    let mut ops = Vec::with_capacity(nodes);
    let mut coords = Vec::with_capacity(nodes);
    for flat in 0..nodes {
        let idx = grid.index_of(flat);
        let row = row_kind(spec, &grid, &idx);
        ops.push(if row == Row::Pde { operator_row(spec, &grid, flat, &idx)? } else { Vec::new() });
        rows.push(row);
        coords.push(grid.coords(&idx));
    }
    let s0 = grid.stride[0];
    let stepper = Stepper { rows, ops, kl: 2 * s0, ku: (s0 + 1).max(2) };

    let dt = spec.domain.maturity / n_t as f64;
    // a Crank-Nicolson step of size dt and an implicit Euler step of size
    // dt/2 share the matrix I - (dt/2) L
    let lu = stepper.system(&grid, 0.5 * dt)?;

    let payoff: Vec<f64> = coords.iter().map(|x| spec.payoff(&x[..d])).collect();
    let mut values = Vec::with_capacity((n_t + 1) * nodes);
    values.extend_from_slice(&payoff);
    let mut v = payoff;
    let mut max_iters_used = 0;
    let mut converged = true;
    let mut tau = 0.0;

    for step in 0..n_t {
        let substeps: &[(f64, f64)] =
            if step < cfg.rannacher_steps { &[(1.0, 0.5), (1.0, 0.5)] } else { &[(0.5, 1.0)] };
        for &(theta, frac) in substeps {
            let h_t = frac * dt;
            let tau_new = tau + h_t;
            let (used, ok) = advance(spec, &grid, &stepper, &lu, &coords, &mut v, theta, h_t, tau_new, cfg)?;
            max_iters_used = max_iters_used.max(used);
            converged &= ok;
            tau = tau_new;
        }
        tau = (step + 1) as f64 * dt;
        values.extend_from_slice(&v);
    }

    let mut axes = vec![(0..=n_t).map(|i| i as f64 * dt).collect::<Vec<f64>>()];
    for k in 0..d {
        axes.push((0..=n[k]).map(|i| grid.origin[k] + i as f64 * grid.h[k]).collect());
    }
    let meta = SurfaceMeta {
        model: model_name(spec),
        scheme: String::from(if cfg.rannacher_steps > 0 { "crank-nicolson+rannacher" } else { "crank-nicolson" }),
        steps: cfg.steps.clone(),
        max_fixed_point_iterations: max_iters_used,
        converged,
        feller: spec.feller_check().ok(),
    };
    SolutionSurface::new(axes, values, meta)
}

fn model_name(spec: &ModelSpec) -> String {
    String::from(match spec.market {
        Market::Bs1d(_) => "bs1d",
        Market::BasketAverage(_) => "basket_average",
        Market::BasketWorstOf(_) => "basket_worst_of",
        Market::Heston(_) => "heston",
    })
}

/// One theta-scheme step with fixed-point iteration on the source term.
#[allow(clippy::too_many_arguments)]
fn advance(
    spec: &ModelSpec,
    grid: &Grid,
    stepper: &Stepper,
    lu: &BandedLu,
    coords: &[[f64; 2]],
    v: &mut Vec<f64>,
    theta: f64,
    h_t: f64,
    tau_new: f64,
    cfg: &FdConfig,
) -> Result<(usize, bool)> {
    let d = spec.spatial_dim();
    let n = grid.nodes;
    let xva = &spec.xva;
    let explicit = (1.0 - theta) * h_t;
    let mut base = vec![0.0; n];
    for i in 0..n {
        base[i] = match stepper.rows[i] {
            Row::Pde => {
                let mut r = v[i];
                if explicit != 0.0 {
                    r += explicit * (stepper.apply_op(i, v) - source_term(v[i], xva));
                }
                r
            }
            Row::Dirichlet(axis) => {
                let mut p = [tau_new, 0.0, 0.0];
                p[1..=d].copy_from_slice(&coords[i][..d]);
                spec.dirichlet_value(axis, &p[..=d])
            }
            Row::Extrapolate(_) | Row::Neumann(_) => 0.0,
        };
    }
    let implicit = theta * h_t;
    let mut guess = v.clone();
    let mut next = vec![0.0; n];
    let linear = xva.is_risk_free();
    for it in 1..=cfg.max_iters {
        next.copy_from_slice(&base);
        if !linear {
            for i in 0..n {
                if stepper.rows[i] == Row::Pde {
                    next[i] -= implicit * source_term(guess[i], xva);
                }
            }
        }
        lu.solve(&mut next);
        let diff = next.iter().zip(&guess).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        core::mem::swap(&mut guess, &mut next);
        if let Some(i) = guess.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { region: "fd".into(), index: i });
        }
        if linear || diff < cfg.fixed_point_tol {
            *v = guess;
            return Ok((it, true));
        }
    }
    *v = guess;
    Ok((cfg.max_iters, false))
}

/// One-asset solve with `N_S` space and `N_T` time steps.
pub fn fd_solve_1d(
    spec: &ModelSpec,
    n_s: usize,
    n_t: usize,
    fixed_point_tol: f64,
    max_iters: usize,
) -> Result<SolutionSurface> {
    if spec.spatial_dim() != 1 {
        return Err(Error::WrongModelKind("fd_solve_1d needs a one-asset model"));
    }
    let cfg = FdConfig { fixed_point_tol, max_iters, ..FdConfig::new(vec![n_t, n_s]) };
    fd_solve(spec, &cfg)
}

/// Two-factor solve with `N_1 x N_2` space and `N_T` time steps.
pub fn fd_solve_2d(
    spec: &ModelSpec,
    n_1: usize,
    n_2: usize,
    n_t: usize,
    fixed_point_tol: f64,
    max_iters: usize,
) -> Result<SolutionSurface> {
    if spec.spatial_dim() != 2 {
        return Err(Error::WrongModelKind("fd_solve_2d needs a two-factor model"));
    }
    let cfg = FdConfig { fixed_point_tol, max_iters, ..FdConfig::new(vec![n_t, n_1, n_2]) };
    fd_solve(spec, &cfg)
}
