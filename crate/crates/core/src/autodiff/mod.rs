//! Derivatives of networks with respect to inputs and parameters.
//!
//! Input derivatives are propagated forward as second-order jets
//! ([`Jet2`]); parameter gradients come from reverse mode over that jet
//! computation. Two reverse-mode routes exist:
//!
//! * [`Tape`]/[`Var`], a general recording tape driven through the
//!   [`Scalar`] trait, which backs [`loss_gradient`] for arbitrary objectives;
//! * [`BatchJets`], a hand-written adjoint of the batched jet sweep that the
//!   training loss uses.
//!
//! The two are checked against each other and against finite differences.

mod batch;
mod jet;
mod scalar;
mod tape;

use alloc::vec::Vec;

pub use batch::BatchJets;
pub use jet::{Jet2, JetLayout, MAX_SPATIAL_DIM};
pub use scalar::Scalar;
pub use tape::{Tape, Var};

use crate::error::{Error, Result};
use crate::network::{jet_generic, Architecture, LayerShape, NetworkParams};

/// Value and input derivatives of the network at a space-time point.
pub fn input_jet(params: &NetworkParams, point: &[f64]) -> Result<Jet2> {
    params.input_jet(point)
}

/// Jets at many points (row-major, `input_dim` coordinates each), computed
/// in batches.
pub fn evaluate_jets(params: &NetworkParams, points: &[f64]) -> Result<Vec<Jet2>> {
    let dim = params.architecture().input_dim;
    if points.len() % dim != 0 {
        return Err(Error::DimensionMismatch { expected: dim, found: points.len() % dim });
    }
    if let Some(i) = points.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { region: "points".into(), index: i / dim });
    }
    let mut batch = BatchJets::new(params);
    let layout = batch.layout();
    let c = layout.len();
    let mut out = Vec::with_capacity(points.len() / dim);
    for chunk in points.chunks(256 * dim) {
        let comps = batch.forward(params, chunk);
        out.extend(comps.chunks_exact(c).map(|u| Jet2::from_components(layout.dim(), u)));
    }
    Ok(out)
}

/// A network whose parameters are scalars of type `S`, as seen by a
/// [`JetObjective`].
pub struct JetNetwork<'a, S> {
    arch: &'a Architecture,
    shapes: &'a [LayerShape],
    params: &'a [S],
}

impl<'a, S: Scalar> JetNetwork<'a, S> {
    pub fn jet(&self, point: &[f64]) -> Result<Jet2<S>> {
        if point.len() != self.arch.input_dim {
            return Err(Error::DimensionMismatch { expected: self.arch.input_dim, found: point.len() });
        }
        Ok(jet_generic(self.arch, self.shapes, self.params, point))
    }

    pub fn params(&self) -> &[S] {
        self.params
    }

    /// A constant in the scalar context of the parameters.
    pub fn constant(&self, c: f64) -> S {
        self.params[0].constant_like(c)
    }
}

/// A scalar function of the network parameters built from jet evaluations.
pub trait JetObjective {
    fn evaluate<S: Scalar>(&self, net: &JetNetwork<'_, S>) -> Result<S>;
}

/// Objective value without gradient tracking.
pub fn objective_value<O: JetObjective>(objective: &O, params: &NetworkParams) -> Result<f64> {
    let net = JetNetwork { arch: params.architecture(), shapes: params.shapes(), params: params.flat() };
    objective.evaluate(&net)
}

/// Objective value and its gradient with respect to the flat parameters.
///
/// The value is computed with the same floating-point operations as
/// [`objective_value`], so both agree bit for bit.
pub fn loss_gradient<O: JetObjective>(objective: &O, params: &NetworkParams) -> Result<(f64, Vec<f64>)> {
    let tape = Tape::new();
    let vars = tape.vars(params.flat());
    let net = JetNetwork { arch: params.architecture(), shapes: params.shapes(), params: &vars };
    let out = objective.evaluate(&net)?;
    let value = out.value();
    if !value.is_finite() {
        return Err(Error::NonFinite { region: "objective".into(), index: 0 });
    }
    let adj = tape.gradient(out);
    let grad: Vec<f64> = vars.iter().map(|v| adj[v.index()]).collect();
    if let Some(index) = grad.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite { region: "gradient".into(), index });
    }
    Ok((value, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Activation;
    use alloc::vec;

    struct SquaredOutput([f64; 2]);

    impl JetObjective for SquaredOutput {
        fn evaluate<S: Scalar>(&self, net: &JetNetwork<'_, S>) -> Result<S> {
            Ok(net.jet(&self.0)?.value.square())
        }
    }

    struct Constant;

    impl JetObjective for Constant {
        fn evaluate<S: Scalar>(&self, net: &JetNetwork<'_, S>) -> Result<S> {
            Ok(net.constant(3.5))
        }
    }

    fn linear_net() -> NetworkParams {
        let arch = Architecture::new(2, 1, 1).unwrap().with_activation(Activation::Identity);
        NetworkParams::from_flat(arch, vec![2.0, 3.0, 0.0, 1.0, 0.0]).unwrap()
    }

    #[test]
    fn squared_output_gradient_by_hand() {
        // u = w_o (2t + 3x + b_h) + b_o, objective u^2 at (1, 1): u = 5
        let net = linear_net();
        let (value, grad) = loss_gradient(&SquaredOutput([1.0, 1.0]), &net).unwrap();
        assert_eq!(value, 25.0);
        assert_eq!(grad[4], 10.0); // output bias
        assert_eq!(grad[2], 10.0); // hidden bias, scaled by w_o = 1
        assert_eq!(grad[0], 10.0); // d/dw_t = 2u * t
        assert_eq!(grad[3], 50.0); // d/dw_o = 2u * hidden
    }

    #[test]
    fn constant_objective_has_zero_gradient() {
        let net = NetworkParams::init(Architecture::new(2, 2, 4).unwrap(), 3).unwrap();
        let (value, grad) = loss_gradient(&Constant, &net).unwrap();
        assert_eq!(value, 3.5);
        assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn taped_value_matches_plain_value() {
        let net = NetworkParams::init(Architecture::new(2, 3, 6).unwrap(), 11).unwrap();
        let obj = SquaredOutput([0.3, 0.8]);
        let plain = objective_value(&obj, &net).unwrap();
        let (taped, _) = loss_gradient(&obj, &net).unwrap();
        assert_eq!(plain.to_bits(), taped.to_bits());
    }
}
