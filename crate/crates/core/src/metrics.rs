//! Relative error norms and the clamped relative error map.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Value reported for `log10(0)`.
pub const LOG10_ZERO: f64 = -999.0;

/// Default clamp threshold: below it errors are absolute, scaled by it.
pub const DEFAULT_CLAMP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ErrorReport {
    pub rel_l1: f64,
    pub rel_l2: f64,
    pub rel_linf: f64,
    pub log10_l1: f64,
    pub log10_l2: f64,
    pub log10_linf: f64,
    /// Whether quadrature weights entered the L1/L2 sums.
    pub weighted: bool,
    pub points: usize,
    pub clamp_threshold: f64,
}

/// `log10`, with [`LOG10_ZERO`] for zero.
pub fn log10_or_sentinel(x: f64) -> f64 {
    if x == 0.0 {
        LOG10_ZERO
    } else {
        math::log10(x)
    }
}

/// `||a - r||_p / ||r||_p` for `p = 1, 2` (weighted when `weights` is given)
/// and the ratio of maxima for `p = inf`.
pub fn relative_norms(approx: &[f64], reference: &[f64], weights: Option<&[f64]>) -> Result<ErrorReport> {
    if approx.len() != reference.len() {
        return Err(Error::DimensionMismatch { expected: reference.len(), found: approx.len() });
    }
    if let Some(w) = weights {
        if w.len() != reference.len() {
            return Err(Error::DimensionMismatch { expected: reference.len(), found: w.len() });
        }
    }
    let (mut e1, mut r1, mut e2, mut r2, mut einf, mut rinf) = (0.0, 0.0, 0.0, 0.0, 0.0f64, 0.0f64);
    for i in 0..reference.len() {
        let w = weights.map_or(1.0, |w| w[i]);
        let e = (approx[i] - reference[i]).abs();
        let r = reference[i].abs();
        if !e.is_finite() {
            return Err(Error::NonFinite { region: "comparison".into(), index: i });
        }
        e1 += w * e;
        r1 += w * r;
        e2 += w * e * e;
        r2 += w * r * r;
        einf = einf.max(e);
        rinf = rinf.max(r);
    }
    if r1 == 0.0 || r2 == 0.0 || rinf == 0.0 {
        return Err(Error::ZeroReferenceNorm);
    }
    let rel_l1 = e1 / r1;
    let rel_l2 = math::sqrt(e2 / r2);
    let rel_linf = einf / rinf;
    Ok(ErrorReport {
        rel_l1,
        rel_l2,
        rel_linf,
        log10_l1: log10_or_sentinel(rel_l1),
        log10_l2: log10_or_sentinel(rel_l2),
        log10_linf: log10_or_sentinel(rel_linf),
        weighted: weights.is_some(),
        points: reference.len(),
        clamp_threshold: DEFAULT_CLAMP,
    })
}

/// `|a - r| / |r|` when `|r| >= threshold`, else `|a - r| / threshold`.
pub fn clamped_error(approx: f64, reference: f64, threshold: f64) -> f64 {
    let e = (approx - reference).abs();
    if reference.abs() >= threshold {
        e / reference.abs()
    } else {
        e / threshold
    }
}

pub fn clamped_error_map(approx: &[f64], reference: &[f64], threshold: f64) -> Result<Vec<f64>> {
    if approx.len() != reference.len() {
        return Err(Error::DimensionMismatch { expected: reference.len(), found: approx.len() });
    }
    if !(threshold > 0.0) {
        return Err(Error::InvalidArgument("clamp threshold must be positive".into()));
    }
    Ok(approx.iter().zip(reference).map(|(&a, &r)| clamped_error(a, r, threshold)).collect())
}

/// `|a - r| / |r|`.
pub fn relative_error(approx: f64, reference: f64) -> f64 {
    (approx - reference).abs() / reference.abs()
}
