//! Network checkpoints as JSON.
//!
//! Floats are written in shortest round-trip form and parsed with correct
//! rounding, so a save/load cycle reproduces every parameter bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};
use xva_pinn_core::network::{Activation, Architecture, AxisScaling, NetworkParams};

use crate::config::Kind;
use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArchitectureDoc {
    input_dim: usize,
    hidden_layers: usize,
    hidden_width: usize,
    activation: Activation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerDoc {
    /// Row-major, `outputs x inputs`.
    #[serde(rename = "W")]
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointDoc {
    schema_version: u32,
    architecture: ArchitectureDoc,
    input_scaling: Option<Vec<AxisScaling>>,
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    model: Option<Kind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    final_loss: Option<f64>,
    layers: Vec<LayerDoc>,
}

/// A network plus what is known about how it was trained.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: NetworkParams,
    pub model: Option<Kind>,
    pub final_loss: Option<f64>,
}

impl Checkpoint {
    pub fn new(params: NetworkParams) -> Self {
        Checkpoint { params, model: None, final_loss: None }
    }

    pub fn to_json(&self) -> String {
        let p = &self.params;
        let arch = p.architecture();
        let layers = (0..p.shapes().len())
            .map(|l| {
                let shape = p.shapes()[l];
                let (w, b) = p.layer(l);
                LayerDoc { w: w.chunks(shape.inputs).map(<[f64]>::to_vec).collect(), b: b.to_vec() }
            })
            .collect();
        let doc = CheckpointDoc {
            schema_version: SCHEMA_VERSION,
            architecture: ArchitectureDoc {
                input_dim: arch.input_dim,
                hidden_layers: arch.hidden_layers,
                hidden_width: arch.hidden_width,
                activation: arch.activation,
            },
            input_scaling: arch.input_scaling.clone(),
            seed: p.seed(),
            model: self.model,
            final_loss: self.final_loss,
            layers,
        };
        serde_json::to_string_pretty(&doc).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::validation(format!("checkpoint: {e}")))?;
        let version = value.get("schema_version").and_then(serde_json::Value::as_u64);
        if version != Some(u64::from(SCHEMA_VERSION)) {
            return Err(CliError::validation(format!(
                "checkpoint: schema_version {} is not supported (expected {SCHEMA_VERSION})",
                value.get("schema_version").map_or("missing".to_string(), ToString::to_string)
            )));
        }
        let doc: CheckpointDoc = serde_path_to_error::deserialize(value)
            .map_err(|e| CliError::validation(format!("checkpoint: {}: {}", e.path(), e.inner())))?;
        let a = &doc.architecture;
        let arch = Architecture {
            input_dim: a.input_dim,
            hidden_layers: a.hidden_layers,
            hidden_width: a.hidden_width,
            activation: a.activation,
            input_scaling: doc.input_scaling,
        };
        arch.validate().map_err(|e| CliError::validation(format!("checkpoint: {e}")))?;
        let sizes = arch.layer_sizes();
        if doc.layers.len() != sizes.len() - 1 {
            return Err(CliError::validation(format!(
                "checkpoint: shape mismatch: architecture has {} layers, file has {}",
                sizes.len() - 1,
                doc.layers.len()
            )));
        }
        let mut flat = Vec::with_capacity(arch.param_count());
        for (l, layer) in doc.layers.iter().enumerate() {
            let (inputs, outputs) = (sizes[l], sizes[l + 1]);
            let rows_ok = layer.w.len() == outputs && layer.w.iter().all(|row| row.len() == inputs);
            if !rows_ok || layer.b.len() != outputs {
                return Err(CliError::validation(format!(
                    "checkpoint: shape mismatch in layers[{l}]: expected W {outputs}x{inputs} and b {outputs}"
                )));
            }
            flat.extend(layer.w.iter().flatten());
            flat.extend(&layer.b);
        }
        let params = NetworkParams::from_flat(arch, flat)
            .map_err(|e| CliError::validation(format!("checkpoint: {e}")))?
            .with_seed(doc.seed);
        Ok(Checkpoint { params, model: doc.model, final_loss: doc.final_loss })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_text(path, &self.to_json())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}
