//! Checkpoint files.
//!
//! A checkpoint is a JSON document:
//!
//! ```text
//! {
//!   "format": "rbp-checkpoint",
//!   "version": 1,
//!   "config": { ...ModelConfig... },
//!   "params": [ { "name": "l0.w", "shape": [36, 50], "trainable": true, "values": [...] }, ... ]
//! }
//! ```
//!
//! Loading rebuilds the layout from `config` and then copies every parameter
//! by name, so the order of `params` does not matter. Values are written with
//! full `f64` round-trip precision.

use std::path::Path;

use rbp_autodiff::Tensor;
use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::network::Model;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "rbp-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StoredParam {
    name: String,
    shape: Vec<usize>,
    trainable: bool,
    values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    config: ModelConfig,
    params: Vec<StoredParam>,
}

impl Model {
    pub fn to_json(&self) -> Result<String> {
        let ck = Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config: self.config.clone(),
            params: self
                .store
                .iter()
                .map(|p| StoredParam {
                    name: p.name.clone(),
                    shape: p.value.shape().to_vec(),
                    trainable: p.trainable,
                    values: p.value.data().to_vec(),
                })
                .collect(),
        };
        serde_json::to_string(&ck).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text).map_err(|e| Error::Format(format!("checkpoint: {e}")))?;
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "unsupported checkpoint {} v{}",
                ck.format, ck.version
            )));
        }
        let mut model = Model::new(ck.config)?;
        if ck.params.len() != model.store.len() {
            return Err(Error::Format(format!(
                "checkpoint has {} parameters, layout needs {}",
                ck.params.len(),
                model.store.len()
            )));
        }
        for sp in ck.params {
            let id = model
                .store
                .find(&sp.name)
                .ok_or_else(|| Error::Format(format!("unknown parameter {:?}", sp.name)))?;
            let p = model.store.get_mut(id);
            if p.value.shape() != sp.shape.as_slice() || p.trainable != sp.trainable {
                return Err(Error::Format(format!(
                    "parameter {:?}: stored shape {:?}, layout {:?}",
                    sp.name,
                    sp.shape,
                    p.value.shape()
                )));
            }
            p.value = Tensor::new(sp.shape, sp.values)?;
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Format(message) => Error::Parse {
                path: path.into(),
                message,
            },
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Architecture, RbpVariant};

    #[test]
    fn round_trip_is_bit_exact() {
        let m = Model::new(ModelConfig::predictor(Architecture::Gru, RbpVariant::Rbp3, 6)).unwrap();
        let back = Model::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back.config, m.config);
        for (a, b) in m.store.iter().zip(back.store.iter()) {
            assert_eq!(a.name, b.name);
            assert!(a.value.bit_eq(&b.value));
        }
    }

    #[test]
    fn rejects_foreign_documents() {
        assert!(Model::from_json("{}").is_err());
        let m = Model::new(ModelConfig::classifier(Architecture::Ffnn, RbpVariant::None, 4)).unwrap();
        let text = m.to_json().unwrap().replace("\"version\":1", "\"version\":9");
        assert!(Model::from_json(&text).is_err());
    }
}
