//! Feed-forward networks `u(t, x)`: `l` hidden layers of uniform width with a
//! scalar activation, followed by an affine output layer.
//!
//! Parameters are stored as one flat vector, layer by layer, each layer as
//! its row-major weight matrix followed by its bias. That vector is exactly
//! what the optimizers update.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::autodiff::{Jet2, Scalar, MAX_SPATIAL_DIM};
use crate::error::{Error, Result};
use crate::math;

/// Hidden-layer activation. The output layer is always the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Activation {
    #[default]
    Tanh,
    Sigmoid,
    Identity,
}

impl Activation {
    /// `sigma(z)` and its first three derivatives.
    #[inline]
    pub fn derivatives(self, z: f64) -> [f64; 4] {
        match self {
            Activation::Tanh => {
                let t = math::tanh(z);
                let s1 = 1.0 - t * t;
                [t, s1, -2.0 * t * s1, (6.0 * t * t - 2.0) * s1]
            }
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + math::exp(-z));
                let s1 = s * (1.0 - s);
                let s2 = s1 * (1.0 - 2.0 * s);
                [s, s1, s2, s2 * (1.0 - 2.0 * s) - 2.0 * s1 * s1]
            }
            Activation::Identity => [z, 1.0, 0.0, 0.0],
        }
    }

    /// `sigma(z)`, `sigma'(z)`, `sigma''(z)` on a generic scalar.
    fn eval_generic<S: Scalar>(self, z: S) -> (S, S, S) {
        match self {
            Activation::Tanh => {
                let t = z.tanh();
                let s1 = -(t * t) + 1.0;
                let s2 = t * s1 * -2.0;
                (t, s1, s2)
            }
            Activation::Sigmoid => {
                let one = z.constant_like(1.0);
                let s = one / ((-z).exp() + 1.0);
                let s1 = s * (-s + 1.0);
                let s2 = s1 * (s * -2.0 + 1.0);
                (s, s1, s2)
            }
            Activation::Identity => (z, z.constant_like(1.0), z.constant_like(0.0)),
        }
    }

    fn value(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => math::tanh(z),
            Activation::Sigmoid => 1.0 / (1.0 + math::exp(-z)),
            Activation::Identity => z,
        }
    }
}

/// Affine map `scale * x + shift` applied to one input coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AxisScaling {
    pub scale: f64,
    pub shift: f64,
}

impl AxisScaling {
    pub const IDENTITY: AxisScaling = AxisScaling { scale: 1.0, shift: 0.0 };

    /// Maps `[min, max]` onto `[0, 1]`.
    pub fn unit_interval(min: f64, max: f64) -> Self {
        let scale = 1.0 / (max - min);
        AxisScaling { scale, shift: -min * scale }
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        self.scale * x + self.shift
    }
}

/// Network shape. Inputs are ordered `(t, x_1, ..., x_d)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Architecture {
    pub input_dim: usize,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    #[cfg_attr(feature = "serde", serde(default))]
    pub activation: Activation,
    /// One affine map per input coordinate, applied before the first layer.
    #[cfg_attr(feature = "serde", serde(default))]
    pub input_scaling: Option<Vec<AxisScaling>>,
}

impl Architecture {
    /// A tanh network without input scaling.
    pub fn new(input_dim: usize, hidden_layers: usize, hidden_width: usize) -> Result<Self> {
        let arch =
            Architecture { input_dim, hidden_layers, hidden_width, activation: Activation::Tanh, input_scaling: None };
        arch.validate()?;
        Ok(arch)
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    /// Scales every input axis onto `[0, 1]` from its `(min, max)` bounds,
    /// time first.
    pub fn with_unit_box_scaling(mut self, bounds: &[(f64, f64)]) -> Result<Self> {
        if bounds.len() != self.input_dim {
            return Err(Error::DimensionMismatch { expected: self.input_dim, found: bounds.len() });
        }
        self.input_scaling = Some(bounds.iter().map(|&(lo, hi)| AxisScaling::unit_interval(lo, hi)).collect());
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.input_dim > MAX_SPATIAL_DIM + 1 {
            return Err(Error::InvalidArchitecture(format!(
                "input dimension must be in 1..={}, got {}",
                MAX_SPATIAL_DIM + 1,
                self.input_dim
            )));
        }
        if self.hidden_layers == 0 || self.hidden_width == 0 {
            return Err(Error::InvalidArchitecture(format!(
                "need at least one hidden layer of positive width, got {} x {}",
                self.hidden_layers, self.hidden_width
            )));
        }
        if let Some(scaling) = &self.input_scaling {
            if scaling.len() != self.input_dim {
                return Err(Error::InvalidArchitecture(format!(
                    "input scaling has {} axes, network has {} inputs",
                    scaling.len(),
                    self.input_dim
                )));
            }
            if scaling.iter().any(|s| !s.scale.is_finite() || !s.shift.is_finite() || s.scale == 0.0) {
                return Err(Error::InvalidArchitecture("degenerate input scaling".into()));
            }
        }
        Ok(())
    }

    /// Number of spatial inputs `d = input_dim - 1`.
    pub fn spatial_dim(&self) -> usize {
        self.input_dim - 1
    }

    /// `[input_dim, width, ..., width, 1]`.
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.hidden_layers + 2);
        sizes.push(self.input_dim);
        sizes.extend(core::iter::repeat(self.hidden_width).take(self.hidden_layers));
        sizes.push(1);
        sizes
    }

    pub fn param_count(&self) -> usize {
        param_count(&self.layer_sizes())
    }

    pub fn scaling(&self, axis: usize) -> AxisScaling {
        self.input_scaling.as_ref().map_or(AxisScaling::IDENTITY, |s| s[axis])
    }
}

/// `P = sum_l (n_l + 1) n_{l+1}` for consecutive layer sizes `n_l`.
pub fn param_count(layer_sizes: &[usize]) -> usize {
    layer_sizes.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
}

/// Location of one affine layer inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub inputs: usize,
    pub outputs: usize,
    /// Offset of the row-major `outputs x inputs` weight block.
    pub weights: usize,
    /// Offset of the bias block.
    pub bias: usize,
}

impl LayerShape {
    pub fn end(&self) -> usize {
        self.bias + self.outputs
    }
}

/// Layer shapes of an architecture, in evaluation order.
pub fn layer_shapes(arch: &Architecture) -> Vec<LayerShape> {
    let sizes = arch.layer_sizes();
    let mut offset = 0;
    sizes
        .windows(2)
        .map(|w| {
            let shape = LayerShape { inputs: w[0], outputs: w[1], weights: offset, bias: offset + w[0] * w[1] };
            offset = shape.end();
            shape
        })
        .collect()
}

/// Trainable parameters together with the architecture they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    arch: Architecture,
    shapes: Vec<LayerShape>,
    values: Vec<f64>,
    seed: Option<u64>,
}

impl NetworkParams {
    /// Glorot-uniform weights and zero biases, reproducible from `seed`.
    pub fn init(arch: Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let shapes = layer_shapes(&arch);
        let mut values = vec![0.0; arch.param_count()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for shape in &shapes {
            let limit = math::sqrt(6.0 / (shape.inputs + shape.outputs) as f64);
            for w in &mut values[shape.weights..shape.bias] {
                let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                *w = (2.0 * u - 1.0) * limit;
            }
        }
        Ok(NetworkParams { arch, shapes, values, seed: Some(seed) })
    }

    /// Wraps an explicit flat parameter vector.
    pub fn from_flat(arch: Architecture, values: Vec<f64>) -> Result<Self> {
        arch.validate()?;
        if values.len() != arch.param_count() {
            return Err(Error::ShapeMismatch(format!(
                "architecture needs {} parameters, got {}",
                arch.param_count(),
                values.len()
            )));
        }
        let shapes = layer_shapes(&arch);
        Ok(NetworkParams { arch, shapes, values, seed: None })
    }

    pub fn zeros(arch: Architecture) -> Result<Self> {
        let n = arch.param_count();
        Self::from_flat(arch, vec![0.0; n])
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn shapes(&self) -> &[LayerShape] {
        &self.shapes
    }

    pub fn flat(&self) -> &[f64] {
        &self.values
    }

    pub fn flat_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn set_flat(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.values.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} parameters, got {}",
                self.values.len(),
                values.len()
            )));
        }
        self.values.copy_from_slice(values);
        Ok(())
    }

    /// Row-major weights and bias of layer `l`.
    pub fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        let s = self.shapes[l];
        (&self.values[s.weights..s.bias], &self.values[s.bias..s.end()])
    }

    pub fn layer_mut(&mut self, l: usize) -> (&mut [f64], &mut [f64]) {
        let s = self.shapes[l];
        let (w, b) = self.values[s.weights..s.end()].split_at_mut(s.bias - s.weights);
        (w, b)
    }

    fn check_point(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.arch.input_dim {
            return Err(Error::DimensionMismatch { expected: self.arch.input_dim, found: point.len() });
        }
        Ok(())
    }

    fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFinite { region: "parameters".into(), index }),
            None => Ok(()),
        }
    }

    /// Network output at `point = (t, x_1, ..., x_d)`.
    pub fn forward(&self, point: &[f64]) -> Result<f64> {
        self.check_point(point)?;
        let mut act: Vec<f64> = point.iter().enumerate().map(|(i, &x)| self.arch.scaling(i).apply(x)).collect();
        let last = self.shapes.len() - 1;
        for (l, shape) in self.shapes.iter().enumerate() {
            let (w, b) = self.layer(l);
            let mut next = Vec::with_capacity(shape.outputs);
            for k in 0..shape.outputs {
                let row = &w[k * shape.inputs..(k + 1) * shape.inputs];
                let mut z = b[k];
                for (wi, ai) in row.iter().zip(&act) {
                    z = z + *wi * *ai;
                }
                next.push(if l == last { z } else { self.arch.activation.value(z) });
            }
            act = next;
        }
        Ok(act[0])
    }

    /// Value and input derivatives of the network at `point`.
    pub fn input_jet(&self, point: &[f64]) -> Result<Jet2> {
        self.check_point(point)?;
        self.check_finite()?;
        Ok(jet_generic(&self.arch, &self.shapes, &self.values, point))
    }
}

/// Forward-mode second-order jet of the network at `point`, with parameters
/// of any [`Scalar`] type. `params` follows the flat layout of `shapes`.
///
/// Only the spatial block of the Hessian is propagated; `t` enters through
/// first derivatives alone.
pub fn jet_generic<S: Scalar>(arch: &Architecture, shapes: &[LayerShape], params: &[S], point: &[f64]) -> Jet2<S> {
    let d = arch.spatial_dim();
    let zero = params[0].constant_like(0.0);
    let first = shapes[0];
    let last = shapes.len() - 1;

    // First layer: the inputs are affine in (t, x), so the pre-activation
    // jets have constant gradients and vanishing Hessians.
    let inputs: Vec<f64> = point.iter().enumerate().map(|(i, &x)| arch.scaling(i).apply(x)).collect();
    let mut layer: Vec<Jet2<S>> = Vec::with_capacity(first.outputs);
    for k in 0..first.outputs {
        let w = &params[first.weights + k * first.inputs..first.weights + (k + 1) * first.inputs];
        let mut z = Jet2::filled(d, zero);
        let mut v = params[first.bias + k];
        for (i, &a) in inputs.iter().enumerate() {
            v = v + w[i] * a;
        }
        z.value = v;
        z.d_t = w[0] * arch.scaling(0).scale;
        for j in 0..d {
            z.d_x[j] = w[1 + j] * arch.scaling(1 + j).scale;
        }
        layer.push(z);
    }

    for (l, shape) in shapes.iter().enumerate() {
        if l > 0 {
            let mut next = Vec::with_capacity(shape.outputs);
            for k in 0..shape.outputs {
                let w = &params[shape.weights + k * shape.inputs..shape.weights + (k + 1) * shape.inputs];
                let mut z = Jet2::filled(d, zero);
                let mut v = params[shape.bias + k];
                for (wi, a) in w.iter().zip(&layer) {
                    v = v + *wi * a.value;
                }
                z.value = v;
                z.d_t = sum_products(w, layer.iter().map(|a| a.d_t), zero);
                for i in 0..d {
                    z.d_x[i] = sum_products(w, layer.iter().map(|a| a.d_x[i]), zero);
                    for j in i..d {
                        let h = sum_products(w, layer.iter().map(|a| a.d_xx[i][j]), zero);
                        z.d_xx[i][j] = h;
                        z.d_xx[j][i] = h;
                    }
                }
                next.push(z);
            }
            layer = next;
        }
        if l < last {
            for z in layer.iter_mut() {
                let (s0, s1, s2) = arch.activation.eval_generic(z.value);
                let mut a = Jet2::filled(d, zero);
                a.value = s0;
                a.d_t = s1 * z.d_t;
                for i in 0..d {
                    a.d_x[i] = s1 * z.d_x[i];
                }
                for i in 0..d {
                    for j in i..d {
                        let h = s1 * z.d_xx[i][j] + s2 * z.d_x[i] * z.d_x[j];
                        a.d_xx[i][j] = h;
                        a.d_xx[j][i] = h;
                    }
                }
                *z = a;
            }
        }
    }
    layer.pop().expect("output layer has one unit")
}

fn sum_products<S: Scalar>(w: &[S], xs: impl Iterator<Item = S>, zero: S) -> S {
    let mut acc = zero;
    for (wi, x) in w.iter().zip(xs) {
        acc = acc + *wi * x;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn affine_net(weights: &[f64], bias: f64) -> NetworkParams {
        // one identity hidden unit carrying the affine map, unit output weight
        let arch = Architecture::new(weights.len(), 1, 1).unwrap().with_activation(Activation::Identity);
        let mut flat = weights.to_vec();
        flat.extend_from_slice(&[bias, 1.0, 0.0]);
        NetworkParams::from_flat(arch, flat).unwrap()
    }

    #[test]
    fn param_count_formula() {
        assert_eq!(param_count(&[2, 40, 40, 40, 40, 1]), 5081);
        // 4*60 + 3*61*60 + 61
        assert_eq!(param_count(&[3, 60, 60, 60, 60, 1]), 11281);
        assert_eq!(param_count(&[1, 1]), 2);
        assert_eq!(Architecture::new(2, 4, 40).unwrap().param_count(), 5081);
    }

    #[test]
    fn init_is_deterministic_and_sized() {
        let arch = Architecture::new(2, 4, 40).unwrap();
        let a = NetworkParams::init(arch.clone(), 7).unwrap();
        let b = NetworkParams::init(arch.clone(), 7).unwrap();
        let c = NetworkParams::init(arch, 8).unwrap();
        assert_eq!(a.flat(), b.flat());
        assert_ne!(a.flat(), c.flat());
        assert_eq!(a.len(), 5081);
        for l in 0..a.shapes().len() {
            assert!(a.layer(l).1.iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn affine_forward() {
        let net = affine_net(&[1.0, 1.0], 1.0);
        assert_eq!(net.forward(&[2.0, 3.0]).unwrap(), 6.0);
    }

    #[test]
    fn zero_network_is_zero() {
        let arch = Architecture::new(3, 2, 5).unwrap();
        let net = NetworkParams::zeros(arch).unwrap();
        assert_eq!(net.forward(&[0.3, 1.0, -4.0]).unwrap(), 0.0);
    }

    #[test]
    fn linear_network_jet() {
        let net = affine_net(&[2.0, 3.0], 0.0);
        let jet = net.input_jet(&[1.0, 1.0]).unwrap();
        assert_eq!(jet.value, 5.0);
        assert_eq!(jet.d_t, 2.0);
        assert_eq!(jet.d_x[0], 3.0);
        assert_eq!(jet.d_xx[0][0], 0.0);
    }

    #[test]
    fn tanh_of_x_jet() {
        let arch = Architecture::new(2, 1, 1).unwrap();
        let net = NetworkParams::from_flat(arch, vec![0.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
        let jet = net.input_jet(&[0.4, 0.0]).unwrap();
        assert_eq!(jet.value, 0.0);
        assert_eq!(jet.d_x[0], 1.0);
        assert_eq!(jet.d_xx[0][0], 0.0);
        assert_eq!(jet.d_t, 0.0);
    }

    #[test]
    fn forward_matches_jet_value_and_manual_evaluation() {
        let arch = Architecture::new(2, 1, 10).unwrap();
        let net = NetworkParams::init(arch, 42).unwrap();
        let p = [0.25, -0.6];
        let (w1, b1) = net.layer(0);
        let (w2, b2) = net.layer(1);
        let mut out = b2[0];
        for k in 0..10 {
            let z = b1[k] + w1[2 * k] * p[0] + w1[2 * k + 1] * p[1];
            out += w2[k] * z.tanh();
        }
        let y = net.forward(&p).unwrap();
        assert!((y - out).abs() < 1e-14);
        assert_eq!(y, net.input_jet(&p).unwrap().value);
    }

    #[test]
    fn dimension_and_finiteness_errors() {
        let arch = Architecture::new(2, 1, 3).unwrap();
        let mut net = NetworkParams::init(arch, 1).unwrap();
        assert!(matches!(net.forward(&[1.0]), Err(Error::DimensionMismatch { .. })));
        net.flat_mut()[2] = f64::NAN;
        assert!(matches!(net.input_jet(&[0.0, 0.0]), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn invalid_architectures() {
        assert!(Architecture::new(2, 0, 10).is_err());
        assert!(Architecture::new(2, 2, 0).is_err());
        assert!(Architecture::new(0, 2, 3).is_err());
        assert!(Architecture::new(2, 1, 1).unwrap().with_unit_box_scaling(&[(0.0, 1.0)]).is_err());
    }

    #[test]
    fn unit_box_scaling_changes_outputs() {
        let arch = Architecture::new(2, 2, 8).unwrap();
        let plain = NetworkParams::init(arch.clone(), 3).unwrap();
        let scaled_arch = arch.with_unit_box_scaling(&[(0.0, 5.0), (0.0, 60.0)]).unwrap();
        let scaled = NetworkParams::from_flat(scaled_arch, plain.flat().to_vec()).unwrap();
        let p = [2.5, 30.0];
        assert_ne!(plain.forward(&p).unwrap(), scaled.forward(&p).unwrap());
        let expected = plain.forward(&[0.5, 0.5]).unwrap();
        assert!((scaled.forward(&p).unwrap() - expected).abs() < 1e-15);
    }
}
