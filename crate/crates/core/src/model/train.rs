use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rbp_autodiff::{adam_step, AdamHyper, Graph, Var};
use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::network::{Model, TrainPass};
use crate::error::{Error, Result};
use crate::patterns::Example;

/// Weight of the RBP3 head's regression loss relative to cross-entropy.
pub const HEAD_LOSS_WEIGHT: f64 = 1.0;

/// Offset that separates the dropout/shuffle stream from the init stream.
const TRAIN_STREAM: u64 = 0x5851_F42D_4C95_7F2D;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub loss: f64,
    pub train_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: Model,
    pub history: Vec<EpochStats>,
}

impl TrainedModel {
    pub fn config(&self) -> &ModelConfig {
        &self.model.config
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    CrossEntropy,
}

fn split(examples: &[Example]) -> (Vec<Vec<usize>>, Vec<usize>) {
    examples.iter().map(|e| (e.tokens.clone(), e.target)).unzip()
}

fn check_targets(model: &Model, targets: &[usize]) -> Result<()> {
    let out = model.config.output_size;
    match targets.iter().find(|&&t| t >= out) {
        Some(t) => Err(Error::Input(format!("target {t} outside {out} outputs"))),
        None => Ok(()),
    }
}

/// The training objective for one batch: cross-entropy of the output
/// distribution plus, for RBP3, the weighted head regression loss.
pub fn batch_loss(
    model: &Model,
    g: &mut Graph,
    batch: &[Vec<usize>],
    targets: &[usize],
    rng: &mut ChaCha8Rng,
) -> Result<Var> {
    let f = model.forward(g, batch, Some(TrainPass { rng, targets }))?;
    let mut loss = g.cross_entropy(f.probs, targets)?;
    if let Some((estimate, forced)) = f.relations {
        let head = g.mse(estimate, forced)?;
        let head = g.scalar_scale(head, HEAD_LOSS_WEIGHT);
        loss = g.add(loss, head)?;
    }
    Ok(loss)
}

/// Builds a model from `config` and trains it on `examples`.
pub fn train(config: ModelConfig, examples: &[Example]) -> Result<TrainedModel> {
    train_model(Model::new(config)?, examples)
}

/// Trains an existing model in place for `config.epochs` epochs. Full-batch
/// unless the config sets a batch size, in which case batches are reshuffled
/// every epoch.
pub fn train_model(mut model: Model, examples: &[Example]) -> Result<TrainedModel> {
    if examples.is_empty() {
        return Err(Error::Input("cannot train on an empty dataset".into()));
    }
    let (seqs, targets) = split(examples);
    model.check_batch(&seqs)?;
    check_targets(&model, &targets)?;
    let cfg = model.config.clone();
    let hyper = AdamHyper::new(cfg.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ TRAIN_STREAM);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let batch_size = cfg.batch_size.unwrap_or(examples.len());
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        if cfg.batch_size.is_some() {
            order.shuffle(&mut rng);
        }
        let mut total = 0.0;
        for chunk in order.chunks(batch_size) {
            let bx: Vec<Vec<usize>> = chunk.iter().map(|&i| seqs[i].clone()).collect();
            let by: Vec<usize> = chunk.iter().map(|&i| targets[i]).collect();
            let mut g = Graph::new();
            let loss = batch_loss(&model, &mut g, &bx, &by, &mut rng)?;
            let value = g.value(loss).data()[0];
            if !value.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    lr: cfg.learning_rate,
                });
            }
            total += value * chunk.len() as f64;
            g.backward_params(loss, &mut model.store)?;
            adam_step(&mut model.store, &hyper)?;
        }
        if model.store.iter().any(|p| !p.value.all_finite()) {
            return Err(Error::NonFiniteLoss {
                epoch,
                lr: cfg.learning_rate,
            });
        }
        let train_accuracy = accuracy_of(&model, &seqs, &targets)?;
        let loss = total / examples.len() as f64;
        log::debug!("epoch {epoch}: loss {loss:.4}, train accuracy {train_accuracy:.3}");
        history.push(EpochStats { loss, train_accuracy });
    }
    Ok(TrainedModel { model, history })
}

fn accuracy_of(model: &Model, seqs: &[Vec<usize>], targets: &[usize]) -> Result<f64> {
    let pred = model.predict(seqs)?;
    let hits = pred.iter().zip(targets).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / targets.len() as f64)
}

/// Accuracy (argmax matches) or mean negative log-probability of the target.
pub fn evaluate(model: &Model, examples: &[Example], metric: Metric) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::Input("cannot evaluate on an empty dataset".into()));
    }
    let (seqs, targets) = split(examples);
    check_targets(model, &targets)?;
    match metric {
        Metric::Accuracy => accuracy_of(model, &seqs, &targets),
        Metric::CrossEntropy => {
            let mut g = Graph::new();
            let f = model.forward(&mut g, &seqs, None)?;
            let ce = g.cross_entropy(f.probs, &targets)?;
            Ok(g.value(ce).data()[0])
        }
    }
}
