//! Finite-difference checks of every model graph the crate can build.
//!
//! Each registered case is a small network (vocabulary 5, 4 hidden units,
//! no dropout) whose full training loss is differentiated with respect to
//! all trainable parameters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rbp_autodiff::{grad_check_params, Graph, Tensor};
use serde::Serialize;

use crate::error::Result;
use crate::model::{batch_loss, Architecture, Model, ModelConfig, RbpVariant};

/// Largest accepted relative gradient error.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;
const EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCase {
    pub name: String,
    pub config: ModelConfig,
    pub batch: Vec<Vec<usize>>,
    pub targets: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradOutcome {
    pub name: String,
    /// `None` when the check could not run
    pub error: Option<f64>,
    pub message: Option<String>,
    pub pass: bool,
}

/// Every architecture with every variant it supports, both layer counts.
pub fn registered_cases() -> Vec<GradCase> {
    let k = 5;
    let batch = vec![vec![0, 1, 0], vec![2, 3, 3], vec![4, 1, 2], vec![1, 1, 1]];
    let pred_batch = vec![vec![0, 1, 0], vec![2, 3, 3], vec![4, 1, 2]];
    let mut cases = Vec::new();
    for arch in Architecture::ALL {
        for rbp in RbpVariant::ALL {
            for layers in [1, 2] {
                let predict = rbp == RbpVariant::Rbp3;
                if predict && !arch.is_recurrent() {
                    continue;
                }
                let base = if predict {
                    ModelConfig::predictor(arch, rbp, k)
                } else {
                    ModelConfig::classifier(arch, rbp, k)
                };
                let config = ModelConfig {
                    hidden_size: 4,
                    layers,
                    dropout: 0.0,
                    context_len: 3,
                    seed: 11,
                    ..base
                };
                let (batch, targets) = if predict {
                    (pred_batch.clone(), vec![0, 3, 1])
                } else {
                    (batch.clone(), vec![0, 1, 1, 0])
                };
                cases.push(GradCase {
                    name: format!("{arch}/{}/L{layers}", rbp.as_str()),
                    config,
                    batch,
                    targets,
                });
            }
        }
    }
    cases
}

pub fn check_case(case: &GradCase) -> Result<f64> {
    let mut model = Model::new(case.config.clone())?;
    // zero biases behind dead units put the next relu exactly on its kink
    let mut rng = ChaCha8Rng::seed_from_u64(case.config.seed);
    for p in model.store.iter_mut().filter(|p| p.trainable && p.name.ends_with(".b")) {
        let data: Vec<f64> = p.value.data().iter().map(|v| v + rng.gen_range(-0.1..0.1)).collect();
        p.value = Tensor::new(p.value.shape().to_vec(), data)?;
    }
    let err = grad_check_params(
        &model.store,
        |g: &mut Graph, store| {
            let mut m = model.clone();
            m.store = store.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            batch_loss(&m, g, &case.batch, &case.targets, &mut rng).map_err(|e| match e {
                crate::Error::Autodiff(a) => a,
                other => rbp_autodiff::AdError::InvalidArgument(other.to_string()),
            })
        },
        EPS,
    )?;
    Ok(err)
}

pub fn run_all() -> Vec<GradOutcome> {
    registered_cases()
        .iter()
        .map(|case| match check_case(case) {
            Ok(e) => GradOutcome {
                name: case.name.clone(),
                error: Some(e),
                message: None,
                pass: e < GRADCHECK_TOLERANCE,
            },
            Err(e) => GradOutcome {
                name: case.name.clone(),
                error: None,
                message: Some(e.to_string()),
                pass: false,
            },
        })
        .collect()
}
