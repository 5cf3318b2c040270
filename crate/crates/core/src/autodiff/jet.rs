use core::ops::{Add, Mul};

use super::Scalar;

/// Largest number of spatial coordinates a [`Jet2`] can carry.
pub const MAX_SPATIAL_DIM: usize = 3;

/// Value, time derivative, spatial gradient and spatial Hessian of a scalar
/// field at one space-time point.
///
/// Only the leading `dim` entries of `d_x` and the leading `dim x dim` block
/// of `d_xx` are meaningful; the rest stay zero. The Hessian block is kept
/// exactly symmetric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2<S = f64> {
    pub dim: usize,
    pub value: S,
    pub d_t: S,
    pub d_x: [S; MAX_SPATIAL_DIM],
    pub d_xx: [[S; MAX_SPATIAL_DIM]; MAX_SPATIAL_DIM],
}

impl<S: Copy> Jet2<S> {
    /// A jet whose every entry equals `zero`.
    pub fn filled(dim: usize, zero: S) -> Self {
        assert!(dim <= MAX_SPATIAL_DIM, "spatial dimension {dim} exceeds {MAX_SPATIAL_DIM}");
        Jet2 {
            dim,
            value: zero,
            d_t: zero,
            d_x: [zero; MAX_SPATIAL_DIM],
            d_xx: [[zero; MAX_SPATIAL_DIM]; MAX_SPATIAL_DIM],
        }
    }

    /// Entry at a flat [`JetLayout`] index.
    pub fn component(&self, index: usize) -> S {
        let d = self.dim;
        match index {
            JetLayout::VALUE => self.value,
            JetLayout::D_T => self.d_t,
            k if k < 2 + d => self.d_x[k - 2],
            k => {
                let layout = JetLayout::new(d);
                let (i, j) =
                    layout.pairs().find(|&(i, j)| layout.d_xx(i, j) == k).expect("jet component index out of range");
                self.d_xx[i][j]
            }
        }
    }
}

impl Jet2<f64> {
    pub fn zero(dim: usize) -> Self {
        Self::filled(dim, 0.0)
    }

    /// A constant field.
    pub fn constant(dim: usize, value: f64) -> Self {
        Jet2 { value, ..Self::zero(dim) }
    }

    /// Packs the jet into the flat component order described by [`JetLayout`].
    pub fn to_components(&self, out: &mut [f64]) {
        let layout = JetLayout::new(self.dim);
        debug_assert_eq!(out.len(), layout.len());
        out[JetLayout::VALUE] = self.value;
        out[JetLayout::D_T] = self.d_t;
        for i in 0..self.dim {
            out[layout.d_x(i)] = self.d_x[i];
            for j in i..self.dim {
                out[layout.d_xx(i, j)] = self.d_xx[i][j];
            }
        }
    }

    /// Inverse of [`Jet2::to_components`].
    pub fn from_components(dim: usize, comps: &[f64]) -> Self {
        let layout = JetLayout::new(dim);
        let mut jet = Self::zero(dim);
        jet.value = comps[JetLayout::VALUE];
        jet.d_t = comps[JetLayout::D_T];
        for i in 0..dim {
            jet.d_x[i] = comps[layout.d_x(i)];
            for j in i..dim {
                let h = comps[layout.d_xx(i, j)];
                jet.d_xx[i][j] = h;
                jet.d_xx[j][i] = h;
            }
        }
        jet
    }

    pub fn is_finite(&self) -> bool {
        let mut ok = self.value.is_finite() && self.d_t.is_finite();
        for i in 0..self.dim {
            ok &= self.d_x[i].is_finite();
            for j in 0..self.dim {
                ok &= self.d_xx[i][j].is_finite();
            }
        }
        ok
    }

    /// Reads the value of a generic jet, e.g. one recorded on a tape.
    pub fn values_of<T: Scalar>(jet: &Jet2<T>) -> Self {
        let mut out = Self::zero(jet.dim);
        out.value = jet.value.value();
        out.d_t = jet.d_t.value();
        for i in 0..jet.dim {
            out.d_x[i] = jet.d_x[i].value();
            for j in 0..jet.dim {
                out.d_xx[i][j] = jet.d_xx[i][j].value();
            }
        }
        out
    }
}

impl Add for Jet2<f64> {
    type Output = Self;

    fn add(mut self, rhs: Self) -> Self {
        debug_assert_eq!(self.dim, rhs.dim);
        self.value += rhs.value;
        self.d_t += rhs.d_t;
        for i in 0..MAX_SPATIAL_DIM {
            self.d_x[i] += rhs.d_x[i];
            for j in 0..MAX_SPATIAL_DIM {
                self.d_xx[i][j] += rhs.d_xx[i][j];
            }
        }
        self
    }
}

impl Mul<f64> for Jet2<f64> {
    type Output = Self;

    fn mul(mut self, c: f64) -> Self {
        self.value *= c;
        self.d_t *= c;
        for i in 0..MAX_SPATIAL_DIM {
            self.d_x[i] *= c;
            for j in 0..MAX_SPATIAL_DIM {
                self.d_xx[i][j] *= c;
            }
        }
        self
    }
}

/// Flat ordering of jet components used by the batched evaluator and the
/// residual coefficient tables:
/// `[value, d_t, d_x[0..d], d_xx upper triangle row by row]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JetLayout {
    dim: usize,
}

impl JetLayout {
    pub const VALUE: usize = 0;
    pub const D_T: usize = 1;

    pub fn new(dim: usize) -> Self {
        assert!(dim <= MAX_SPATIAL_DIM, "spatial dimension {dim} exceeds {MAX_SPATIAL_DIM}");
        JetLayout { dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored components: `2 + d + d(d+1)/2`.
    pub fn len(&self) -> usize {
        2 + self.dim + self.dim * (self.dim + 1) / 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn d_x(&self, i: usize) -> usize {
        debug_assert!(i < self.dim);
        2 + i
    }

    /// Component of `d_xx[i][j]`; symmetric in `(i, j)`.
    pub fn d_xx(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        debug_assert!(j < self.dim);
        // row r of the upper triangle holds d - r entries
        2 + self.dim + i * self.dim - i * i.saturating_sub(1) / 2 + (j - i)
    }

    /// Spatial index pairs `(i, j)`, `i <= j`, in storage order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.dim).flat_map(move |i| (i..self.dim).map(move |j| (i, j)))
    }
}
