//! The volume-normalized trapezoidal loss
//! `sum_r lambda_r / |r| * sum_{p in r} w_p R_r(p)^2`.
//!
//! [`LossEvaluator`] is the fast path used for training: it evaluates jets in
//! batches and seeds the reverse sweep with `dL/dJ` directly. [`FullLoss`]
//! evaluates the same quantity point by point through the generic scalar
//! path and serves as an independent check.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::autodiff::{BatchJets, JetLayout, JetNetwork, JetObjective, Scalar};
use crate::error::{Error, Result};
use crate::geometry::{CollocationSet, RegionId};
use crate::models::{source_slope, source_term, ModelSpec};
use crate::network::NetworkParams;

/// Per-region loss terms and their sum.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossBreakdown {
    pub terms: Vec<(RegionId, f64)>,
    pub total: f64,
}

impl LossBreakdown {
    pub fn term(&self, id: RegionId) -> Option<f64> {
        self.terms.iter().find(|(r, _)| *r == id).map(|(_, v)| *v)
    }

    pub fn region_names(&self) -> Vec<String> {
        self.terms.iter().map(|(r, _)| format!("{r}")).collect()
    }
}

struct CompiledRegion {
    id: RegionId,
    points: Vec<f64>,
    weights: Vec<f64>,
    /// `lambda / volume`.
    scale: f64,
    coeffs: Vec<f64>,
    source: bool,
    targets: Vec<f64>,
}

/// Default number of points per batch.
pub const DEFAULT_CHUNK: usize = 256;

/// Loss of one model on one grid, reusable across parameter vectors.
pub struct LossEvaluator {
    spec: ModelSpec,
    regions: Vec<CompiledRegion>,
    layout: JetLayout,
    input_dim: usize,
    chunk: usize,
    batch: Option<BatchJets>,
    adjoint: Vec<f64>,
}

fn check_regions(spec: &ModelSpec, grid: &CollocationSet) -> Result<()> {
    if grid.domain.spatial_dim() != spec.spatial_dim() {
        return Err(Error::DimensionMismatch { expected: spec.spatial_dim(), found: grid.domain.spatial_dim() });
    }
    let ops = spec.residuals();
    if ops.ops.len() != grid.regions.len() {
        return Err(Error::UnknownRegion(format!(
            "grid has {} regions, model defines {}",
            grid.regions.len(),
            ops.ops.len()
        )));
    }
    for r in &grid.regions {
        ops.get(r.id)?;
    }
    Ok(())
}

impl LossEvaluator {
    pub fn new(spec: &ModelSpec, grid: &CollocationSet) -> Result<Self> {
        check_regions(spec, grid)?;
        let ops = spec.residuals();
        let layout = spec.layout();
        let c = layout.len();
        let mut regions = Vec::with_capacity(grid.regions.len());
        for r in &grid.regions {
            let op = ops.get(r.id)?;
            let mut coeffs = Vec::with_capacity(r.len() * c);
            let mut targets = Vec::with_capacity(r.len());
            let mut source = false;
            for (p, _) in r.iter() {
                let pr = spec.point_residual_for(r.id, op, p);
                coeffs.extend_from_slice(&pr.coeffs);
                targets.push(pr.target);
                source = pr.source;
            }
            regions.push(CompiledRegion {
                id: r.id,
                points: r.points.clone(),
                weights: r.weights.clone(),
                scale: 1.0 / r.volume,
                coeffs,
                source,
                targets,
            });
        }
        // a fixed reduction order, whatever order the grid lists its regions in
        regions.sort_by_key(|r| r.id);
        Ok(LossEvaluator {
            spec: spec.clone(),
            regions,
            layout,
            input_dim: spec.spatial_dim() + 1,
            chunk: DEFAULT_CHUNK,
            batch: None,
            adjoint: Vec::new(),
        })
    }

    pub fn with_chunk(mut self, chunk: usize) -> Self {
        self.chunk = chunk.max(1);
        self
    }

    /// Replaces the unit weight of one region.
    pub fn set_region_weight(&mut self, id: RegionId, lambda: f64, grid: &CollocationSet) -> Result<()> {
        let volume = grid.region(id).ok_or_else(|| Error::UnknownRegion(format!("{id}")))?.volume;
        let r = self.regions.iter_mut().find(|r| r.id == id).ok_or_else(|| Error::UnknownRegion(format!("{id}")))?;
        r.scale = lambda / volume;
        Ok(())
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn region_ids(&self) -> Vec<RegionId> {
        self.regions.iter().map(|r| r.id).collect()
    }

    pub fn total_points(&self) -> usize {
        self.regions.iter().map(|r| r.weights.len()).sum()
    }

    fn check_params(&self, params: &NetworkParams) -> Result<()> {
        let found = params.architecture().input_dim;
        if found != self.input_dim {
            return Err(Error::DimensionMismatch { expected: self.input_dim, found });
        }
        if let Some(i) = params.flat().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { region: "parameters".into(), index: i });
        }
        Ok(())
    }

    /// Loss terms without the gradient.
    pub fn evaluate(&mut self, params: &NetworkParams) -> Result<LossBreakdown> {
        self.run(params, None)
    }

    /// Loss terms; the gradient is written to `grad` (overwritten).
    pub fn evaluate_with_gradient(&mut self, params: &NetworkParams, grad: &mut [f64]) -> Result<LossBreakdown> {
        if grad.len() != params.len() {
            return Err(Error::DimensionMismatch { expected: params.len(), found: grad.len() });
        }
        grad.iter_mut().for_each(|g| *g = 0.0);
        self.run(params, Some(grad))
    }

    fn run(&mut self, params: &NetworkParams, mut grad: Option<&mut [f64]>) -> Result<LossBreakdown> {
        self.check_params(params)?;
        let batch = match &mut self.batch {
            Some(b) if b.fits(params) => b,
            slot => slot.insert(BatchJets::new(params)),
        };
        let c = self.layout.len();
        let xva = self.spec.xva;
        let mut terms = Vec::with_capacity(self.regions.len());
        let mut total = 0.0;
        for region in &self.regions {
            let n = region.weights.len();
            let mut sum = 0.0;
            let mut start = 0;
            while start < n {
                let end = (start + self.chunk).min(n);
                let pts = &region.points[start * self.input_dim..end * self.input_dim];
                let jets = batch.forward(params, pts);
                if grad.is_some() {
                    self.adjoint.clear();
                    self.adjoint.resize((end - start) * c, 0.0);
                }
                for p in start..end {
                    let u = &jets[(p - start) * c..(p - start + 1) * c];
                    let a = &region.coeffs[p * c..(p + 1) * c];
                    let mut r = -region.targets[p];
                    for k in 0..c {
                        r += a[k] * u[k];
                    }
                    if region.source {
                        r += source_term(u[0], &xva);
                    }
                    if !r.is_finite() {
                        return Err(Error::NonFinite { region: format!("{}", region.id), index: p });
                    }
                    let w = region.weights[p];
                    sum += w * r * r;
                    if grad.is_some() {
                        let seed = 2.0 * region.scale * w * r;
                        let adj = &mut self.adjoint[(p - start) * c..(p - start + 1) * c];
                        for k in 0..c {
                            adj[k] = seed * a[k];
                        }
                        if region.source {
                            adj[0] += seed * source_slope(u[0], &xva);
                        }
                    }
                }
                if let Some(g) = grad.as_deref_mut() {
                    batch.backward(params, &self.adjoint, g);
                }
                start = end;
            }
            let term = region.scale * sum;
            terms.push((region.id, term));
            total += term;
        }
        if let Some(g) = grad.as_deref() {
            if let Some(i) = g.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { region: "gradient".into(), index: i });
            }
        }
        Ok(LossBreakdown { terms, total })
    }
}

/// Loss of `params` for `spec` on `grid`.
pub fn assemble(spec: &ModelSpec, params: &NetworkParams, grid: &CollocationSet) -> Result<LossBreakdown> {
    LossEvaluator::new(spec, grid)?.evaluate(params)
}

/// Loss and its parameter gradient.
pub fn assemble_with_gradient(
    spec: &ModelSpec,
    params: &NetworkParams,
    grid: &CollocationSet,
) -> Result<(LossBreakdown, Vec<f64>)> {
    let mut grad = vec![0.0; params.len()];
    let loss = LossEvaluator::new(spec, grid)?.evaluate_with_gradient(params, &mut grad)?;
    Ok((loss, grad))
}

/// Per-region terms for an arbitrary field given by its jets, e.g. a closed
/// form solution. `field(point)` returns the jet at `(t, x_1, ..., x_d)`.
pub fn assemble_field<F>(spec: &ModelSpec, grid: &CollocationSet, mut field: F) -> Result<LossBreakdown>
where
    F: FnMut(&[f64]) -> crate::autodiff::Jet2,
{
    check_regions(spec, grid)?;
    let ops = spec.residuals();
    let mut terms = Vec::new();
    let mut total = 0.0;
    let mut regions: Vec<_> = grid.regions.iter().collect();
    regions.sort_by_key(|r| r.id);
    for r in regions {
        let op = ops.get(r.id)?;
        let mut sum = 0.0;
        for (i, (p, w)) in r.iter().enumerate() {
            let res = spec.point_residual_for(r.id, op, p).apply(&field(p), &spec.xva);
            if !res.is_finite() {
                return Err(Error::NonFinite { region: format!("{}", r.id), index: i });
            }
            sum += w * res * res;
        }
        let term = sum / r.volume;
        terms.push((r.id, term));
        total += term;
    }
    Ok(LossBreakdown { terms, total })
}

/// The loss as a [`JetObjective`]: one jet per point through the generic
/// scalar path. Slow; meant for checking [`LossEvaluator`].
pub struct FullLoss<'a> {
    pub spec: &'a ModelSpec,
    pub grid: &'a CollocationSet,
}

impl JetObjective for FullLoss<'_> {
    fn evaluate<S: Scalar>(&self, net: &JetNetwork<'_, S>) -> Result<S> {
        check_regions(self.spec, self.grid)?;
        let ops = self.spec.residuals();
        let mut total = net.constant(0.0);
        let mut regions: Vec<_> = self.grid.regions.iter().collect();
        regions.sort_by_key(|r| r.id);
        for r in regions {
            let op = ops.get(r.id)?;
            let mut sum = net.constant(0.0);
            for (i, (p, w)) in r.iter().enumerate() {
                let jet = net.jet(p)?;
                let res = self.spec.point_residual_for(r.id, op, p).apply(&jet, &self.spec.xva);
                if !res.value().is_finite() {
                    return Err(Error::NonFinite { region: format!("{}", r.id), index: i });
                }
                sum = sum + res.square() * w;
            }
            total = total + sum * (1.0 / r.volume);
        }
        Ok(total)
    }
}
