use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Metadata of a finite-difference solution.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SurfaceMeta {
    pub model: String,
    pub scheme: String,
    /// `[N_T, N_1, ..., N_d]`.
    pub steps: Vec<usize>,
    /// Largest number of fixed-point sweeps needed by any time step.
    pub max_fixed_point_iterations: usize,
    pub converged: bool,
    pub feller: Option<bool>,
}

/// Values on a tensor grid of time to maturity and spatial coordinates.
/// `values` is row-major with time slowest.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolutionSurface {
    /// Time axis first, then one axis per spatial coordinate.
    pub axes: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub meta: SurfaceMeta,
}

impl SolutionSurface {
    pub fn new(axes: Vec<Vec<f64>>, values: Vec<f64>, meta: SurfaceMeta) -> Result<Self> {
        let expected: usize = axes.iter().map(Vec::len).product();
        if axes.len() < 2 || expected != values.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for axes of lengths {:?}",
                values.len(),
                axes.iter().map(Vec::len).collect::<Vec<_>>()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { region: "surface".into(), index: i });
        }
        Ok(SolutionSurface { axes, values, meta })
    }

    pub fn spatial_dim(&self) -> usize {
        self.axes.len() - 1
    }

    /// Number of spatial nodes per time level.
    pub fn slice_len(&self) -> usize {
        self.axes[1..].iter().map(Vec::len).product()
    }

    pub fn time_levels(&self) -> usize {
        self.axes[0].len()
    }

    /// Values at time level `n`.
    pub fn slice(&self, n: usize) -> &[f64] {
        let m = self.slice_len();
        &self.values[n * m..(n + 1) * m]
    }

    /// Value at grid indices `(n, i_1, ..., i_d)`.
    pub fn at(&self, idx: &[usize]) -> f64 {
        let mut flat = 0;
        for (axis, &i) in self.axes.iter().zip(idx) {
            flat = flat * axis.len() + i;
        }
        self.values[flat]
    }

    /// Grid coordinates `(t, x_1, ..., x_d)` of a flat index.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut idx = Vec::with_capacity(self.axes.len());
        let mut rest = flat;
        for axis in self.axes.iter().rev() {
            idx.push(axis[rest % axis.len()]);
            rest /= axis.len();
        }
        idx.reverse();
        idx
    }

    /// Multilinear interpolation at `(t, x_1, ..., x_d)`; points outside
    /// the grid are clamped to it.
    pub fn interpolate(&self, point: &[f64]) -> f64 {
        let dims = self.axes.len();
        let mut lo = [0usize; 4];
        let mut frac = [0.0f64; 4];
        for a in 0..dims {
            let (i, w) = bracket(&self.axes[a], point[a]);
            lo[a] = i;
            frac[a] = w;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << dims) {
            let mut weight = 1.0;
            let mut flat = 0;
            for a in 0..dims {
                let up = (corner >> a) & 1 == 1;
                let len = self.axes[a].len();
                let i = if up { (lo[a] + 1).min(len - 1) } else { lo[a] };
                weight *= if up { frac[a] } else { 1.0 - frac[a] };
                flat = flat * len + i;
            }
            if weight != 0.0 {
                acc += weight * self.values[flat];
            }
        }
        acc
    }
}

/// Index of the cell containing `x` and the fractional position inside it.
fn bracket(axis: &[f64], x: f64) -> (usize, f64) {
    let n = axis.len();
    if n == 1 || x <= axis[0] {
        return (0, 0.0);
    }
    if x >= axis[n - 1] {
        return (n - 1, 0.0);
    }
    let i = axis.partition_point(|&a| a <= x) - 1;
    (i, (x - axis[i]) / (axis[i + 1] - axis[i]))
}
