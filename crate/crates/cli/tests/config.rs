use std::path::PathBuf;

use xva_pinn_cli::config::{ExperimentConfig, Kind, Mode};
use xva_pinn_cli::CliError;
use xva_pinn_core::geometry::RegionId;
use xva_pinn_core::models::{presets, ResidualMode};

fn bundled(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn minimal() -> serde_json::Value {
    serde_json::json!({
        "model": {
            "kind": "bs1d", "strike": 15.0, "maturity": 5.0, "r": 0.03,
            "bs": { "sigma": 0.25, "r_repo": 0.015 },
            "xva": { "lambda_b": [0.04], "lambda_c": 0.05, "recovery_b": 0.4, "recovery_c": 0.4 }
        },
        "grid": { "steps": [10, 12] },
        "network": { "hidden_layers": 2, "width": 8 }
    })
}

fn message(v: serde_json::Value) -> String {
    match ExperimentConfig::from_json(&v.to_string()) {
        Err(CliError::Validation(m)) => m,
        other => panic!("expected a validation error, got {other:?}"),
    }
}

#[test]
fn bundled_configs_match_the_presets() {
    let bs = ExperimentConfig::load(&bundled("bs1d_sweep.json")).unwrap();
    assert_eq!(bs.model.xva.lambda_b, vec![0.0, 0.02, 0.04, 0.06, 0.08, 0.1]);
    for &l in &bs.model.xva.lambda_b {
        assert_eq!(bs.spec(l).unwrap(), presets::bs1d_put(l));
    }
    assert_eq!(bs.architecture().unwrap().param_count(), 5081);

    let basket = ExperimentConfig::load(&bundled("basket_sweep.json")).unwrap();
    assert_eq!(basket.spec(0.02).unwrap(), presets::basket_put(false, 0.02));
    assert_eq!(basket.architecture().unwrap().param_count(), 11281);

    let heston = ExperimentConfig::load(&bundled("heston_sweep.json")).unwrap();
    let spec = heston.spec(0.0).unwrap();
    assert_eq!(spec, presets::heston_put(0.0));
    assert!(spec.feller_check().unwrap());

    let rf = ExperimentConfig::load(&bundled("bs1d_risk_free.json")).unwrap();
    assert!(rf.spec(0.0).unwrap().xva.is_risk_free());
    assert_eq!(rf.seeds(), vec![0, 1, 2]);
}

#[test]
fn defaults_fill_omitted_sections() {
    let cfg = ExperimentConfig::from_json(&minimal().to_string()).unwrap();
    assert_eq!(cfg.kind(), Kind::Bs1d);
    assert_eq!(cfg.model.mode, Mode::PdeBoundary);
    assert_eq!(cfg.training.adam_steps, 10000);
    assert_eq!(cfg.training.lbfgs_steps, 2500);
    assert_eq!(cfg.evaluation_steps(), vec![20, 24]);
    assert_eq!(cfg.domain().unwrap().axes[0].max, 60.0);
    // funding spread follows the seller hazard rate
    assert!((cfg.xva(0.04).funding_spread - 0.6 * 0.04).abs() < 1e-15);
    // the document round-trips through its own serialization
    assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
}

#[test]
fn hazard_rates_outside_the_table_range_are_rejected_with_their_path() {
    let mut v = minimal();
    v["model"]["xva"]["lambda_b"] = serde_json::json!([0.02, 0.15, -0.01]);
    let m = message(v);
    assert!(m.contains("model.xva.lambda_b[1]: must lie in [0, 0.1], got 0.15"), "{m}");
    assert!(m.contains("model.xva.lambda_b[2]"), "{m}");
    assert!(!m.contains("lambda_b[0]"), "{m}");
}

#[test]
fn type_and_structure_errors_name_the_field() {
    let mut v = minimal();
    v["model"]["strike"] = serde_json::json!("fifteen");
    assert!(message(v).starts_with("model.strike:"));

    let mut v = minimal();
    v["network"]["depth"] = serde_json::json!(3);
    assert!(message(v).contains("depth"));

    let mut v = minimal();
    v["model"]["kind"] = serde_json::json!("heston");
    let m = message(v);
    assert!(m.contains("model.heston: required for kind heston"), "{m}");
    assert!(m.contains("grid.nu_max: required"), "{m}");
    assert!(m.contains("grid.steps: expected 3 entries"), "{m}");

    let mut v = minimal();
    v["grid"]["steps"] = serde_json::json!([10, 1]);
    v["training"] = serde_json::json!({ "lr0": 0.0, "n_trials": 0, "region_weights": { "upper2": 1.0 } });
    let m = message(v);
    for path in ["grid.steps[1]", "training.lr0", "training.n_trials", "training.region_weights.upper2"] {
        assert!(m.contains(path), "{path} missing from {m}");
    }
}

#[test]
fn overrides_and_region_weights() {
    let mut v = minimal();
    v["training"] = serde_json::json!({ "region_weights": { "initial": 2.0, "upper1": 0.5 } });
    let mut cfg = ExperimentConfig::from_json(&v.to_string()).unwrap();
    assert_eq!(cfg.region_weights(), vec![(RegionId::Initial, 2.0), (RegionId::Upper(0), 0.5)]);
    cfg.apply_overrides(Some(7), Some(3), Some(Mode::Classic)).unwrap();
    assert_eq!(cfg.seeds(), vec![7, 8, 9]);
    assert_eq!(cfg.train_config(8).seed, 8);
    assert_eq!(cfg.spec(0.04).unwrap().mode, ResidualMode::Classic);
    assert!(cfg.apply_overrides(None, Some(0), None).is_err());
}
