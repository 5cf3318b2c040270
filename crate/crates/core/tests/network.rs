use proptest::prelude::*;
use xva_pinn_core::network::{param_count, Activation, Architecture, NetworkParams};

/// Straight-line evaluation of a one-hidden-layer tanh net from its flat vector.
fn by_hand(flat: &[f64], inputs: usize, width: usize, x: &[f64]) -> f64 {
    let (w1, rest) = flat.split_at(inputs * width);
    let (b1, rest) = rest.split_at(width);
    let (w2, b2) = rest.split_at(width);
    let mut out = b2[0];
    for k in 0..width {
        let mut z = b1[k];
        for i in 0..inputs {
            z += w1[k * inputs + i] * x[i];
        }
        out += w2[k] * z.tanh();
    }
    out
}

#[test]
fn parameter_counts() {
    assert_eq!(param_count(&[2, 40, 40, 40, 40, 1]), 5081);
    assert_eq!(param_count(&[3, 60, 60, 60, 60, 1]), 11281);
    assert_eq!(param_count(&[1, 1]), 2);
    assert_eq!(Architecture::new(2, 4, 40).unwrap().param_count(), 5081);
}

#[test]
fn seeded_net_matches_hand_evaluation() {
    let params = NetworkParams::init(Architecture::new(2, 1, 10).unwrap(), 7).unwrap();
    for x in [[0.0, 0.0], [0.3, -1.2], [2.0, 5.0]] {
        let expected = by_hand(params.flat(), 2, 10, &x);
        assert!((params.forward(&x).unwrap() - expected).abs() <= 1e-14);
        assert!((params.input_jet(&x).unwrap().value - expected).abs() <= 1e-14);
    }
}

#[test]
fn initialization_is_glorot_uniform_with_zero_bias() {
    let params = NetworkParams::init(Architecture::new(2, 3, 40).unwrap(), 3).unwrap();
    for (l, shape) in params.shapes().iter().enumerate() {
        let limit = (6.0 / (shape.inputs + shape.outputs) as f64).sqrt();
        let (w, b) = params.layer(l);
        assert!(w.iter().all(|v| v.abs() <= limit));
        assert!(b.iter().all(|&v| v == 0.0));
        // a uniform sample fills most of its range
        let max = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max > 0.8 * limit);
    }
    assert_eq!(params.seed(), Some(3));
}

#[test]
fn scaling_maps_the_box_onto_the_unit_cube() {
    let bounds = [(0.0, 5.0), (0.0, 60.0)];
    let plain = Architecture::new(2, 2, 8).unwrap();
    let scaled = plain.clone().with_unit_box_scaling(&bounds).unwrap();
    let a = NetworkParams::init(plain, 11).unwrap();
    let b = NetworkParams::from_flat(scaled, a.flat().to_vec()).unwrap();
    // the scaled net at a domain point equals the plain net at its unit image
    let u = a.forward(&[0.5, 0.25]).unwrap();
    let v = b.forward(&[2.5, 15.0]).unwrap();
    assert!((u - v).abs() < 1e-14);
    assert!((a.forward(&[2.5, 15.0]).unwrap() - v).abs() > 1e-6);
}

#[test]
fn sigmoid_and_identity_activations() {
    let arch = Architecture::new(2, 1, 3).unwrap().with_activation(Activation::Identity);
    let mut params = NetworkParams::zeros(arch).unwrap();
    params.flat_mut().iter_mut().for_each(|v| *v = 1.0);
    // three units of (t + x + 1), summed, plus 1
    assert_eq!(params.forward(&[2.0, 3.0]).unwrap(), 19.0);
    let arch = Architecture::new(2, 1, 3).unwrap().with_activation(Activation::Sigmoid);
    let params = NetworkParams::zeros(arch).unwrap();
    assert_eq!(params.forward(&[2.0, 3.0]).unwrap(), 0.0);
}

#[test]
fn flat_vector_round_trip_and_errors() {
    let arch = Architecture::new(3, 2, 5).unwrap();
    let params = NetworkParams::init(arch.clone(), 1).unwrap();
    let copy = NetworkParams::from_flat(arch.clone(), params.flat().to_vec()).unwrap();
    assert_eq!(copy.flat(), params.flat());
    assert!(NetworkParams::from_flat(arch.clone(), vec![0.0; 3]).is_err());
    let mut other = NetworkParams::zeros(arch).unwrap();
    assert!(other.set_flat(&[1.0]).is_err());
    assert!(params.forward(&[0.0, 1.0]).is_err());
    assert!(Architecture::new(2, 0, 5).is_err());
    assert!(Architecture::new(2, 1, 0).is_err());
    assert!(Architecture::new(0, 1, 1).is_err());
}

proptest! {
    #[test]
    fn param_count_equals_flat_length(inputs in 1usize..=4, layers in 1usize..5, width in 1usize..30, seed in any::<u64>()) {
        let arch = Architecture::new(inputs, layers, width).unwrap();
        let params = NetworkParams::init(arch.clone(), seed).unwrap();
        prop_assert_eq!(params.len(), arch.param_count());
        prop_assert_eq!(params.len(), param_count(&arch.layer_sizes()));
    }

    #[test]
    fn init_is_deterministic(seed in any::<u64>()) {
        let arch = Architecture::new(2, 2, 6).unwrap();
        let a = NetworkParams::init(arch.clone(), seed).unwrap();
        let b = NetworkParams::init(arch.clone(), seed).unwrap();
        prop_assert_eq!(a.flat(), b.flat());
        let c = NetworkParams::init(arch, seed.wrapping_add(1)).unwrap();
        prop_assert_ne!(a.flat(), c.flat());
    }

    #[test]
    fn outputs_are_finite_for_finite_inputs(seed in any::<u64>(), t in -1e6f64..1e6, x in -1e6f64..1e6) {
        let params = NetworkParams::init(Architecture::new(2, 3, 12).unwrap(), seed).unwrap();
        prop_assert!(params.forward(&[t, x]).unwrap().is_finite());
        let jet = params.input_jet(&[t, x]).unwrap();
        prop_assert!(jet.value.is_finite() && jet.d_t.is_finite() && jet.d_x[0].is_finite() && jet.d_xx[0][0].is_finite());
    }

    #[test]
    fn forward_agrees_with_the_jet_value(seed in any::<u64>(), t in 0.0f64..5.0, x in 0.0f64..60.0, y in 0.0f64..60.0) {
        let arch = Architecture::new(3, 2, 9).unwrap().with_unit_box_scaling(&[(0.0, 5.0), (0.0, 60.0), (0.0, 60.0)]).unwrap();
        let params = NetworkParams::init(arch, seed).unwrap();
        let p = [t, x, y];
        prop_assert!((params.forward(&p).unwrap() - params.input_jet(&p).unwrap().value).abs() <= 1e-15);
    }
}
