use serde::{Deserialize, Serialize};

use crate::corpus::{windowize, RepetitionCorpus};
use crate::error::Result;
use crate::model::{evaluate, train, Architecture, Metric, ModelConfig, RbpVariant, TrainedModel};
use crate::patterns::{LabeledDataset, Split};

/// Next-token model settings for corpus windows.
pub fn corpus_config(architecture: Architecture, rbp: RbpVariant, vocab_size: usize, context: usize) -> ModelConfig {
    ModelConfig {
        hidden_size: 30,
        learning_rate: 0.01,
        dropout: 0.1,
        epochs: 10,
        context_len: context,
        batch_size: Some(64),
        ..ModelConfig::predictor(architecture, rbp, vocab_size)
    }
}

#[derive(Debug, Clone)]
pub struct CorpusFit {
    pub trained: TrainedModel,
    pub test_cross_entropy: f64,
    pub test_accuracy: f64,
}

/// Trains on the training windows and scores the test windows.
pub fn fit_corpus(data: &LabeledDataset, config: ModelConfig) -> Result<CorpusFit> {
    let trained = train(config, &data.examples(Split::Train))?;
    let test = data.examples(Split::Test);
    Ok(CorpusFit {
        test_cross_entropy: evaluate(&trained.model, &test, Metric::CrossEntropy)?,
        test_accuracy: evaluate(&trained.model, &test, Metric::Accuracy)?,
        trained,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RepetitionOptions {
    pub corpus: RepetitionCorpus,
    pub seeds: usize,
    pub base_seed: u64,
    pub architectures: Vec<Architecture>,
    pub teacher_forcing: bool,
}

impl Default for RepetitionOptions {
    fn default() -> Self {
        Self {
            corpus: RepetitionCorpus::default(),
            seeds: 5,
            base_seed: 0,
            architectures: Architecture::RECURRENT.to_vec(),
            teacher_forcing: true,
        }
    }
}

/// Mean test cross-entropy (nats) of one architecture with and without RBP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionRow {
    pub architecture: Architecture,
    pub none: f64,
    pub rbp2: f64,
    pub rbp3: f64,
    /// `[none, rbp2, rbp3]` per seed
    pub per_seed: Vec<[f64; 3]>,
}

impl RepetitionRow {
    pub fn rbp3_gain(&self) -> f64 {
        self.none - self.rbp3
    }

    pub fn rbp2_excess(&self) -> f64 {
        self.rbp2 - self.none
    }
}

/// Compares no-RBP, RBP2 and RBP3 next-token models on generated
/// repetition corpora, one fresh corpus per seed.
pub fn repetition_experiment(opts: &RepetitionOptions) -> Result<Vec<RepetitionRow>> {
    let variants = [RbpVariant::None, RbpVariant::Rbp2, RbpVariant::Rbp3];
    let mut data = Vec::with_capacity(opts.seeds);
    for i in 0..opts.seeds as u64 {
        let seed = opts.base_seed.wrapping_add(i);
        let corpus = opts.corpus.generate(seed)?;
        data.push((seed, windowize(&corpus, opts.corpus.context, [0.5, 0.25, 0.25])?));
    }
    let mut rows = Vec::new();
    for &arch in &opts.architectures {
        let mut per_seed = Vec::new();
        for (seed, ds) in &data {
            let mut ce = [0.0; 3];
            for (slot, rbp) in ce.iter_mut().zip(variants) {
                let cfg = ModelConfig {
                    seed: *seed,
                    teacher_forcing: opts.teacher_forcing,
                    ..corpus_config(arch, rbp, opts.corpus.vocab_size, opts.corpus.context)
                };
                *slot = fit_corpus(ds, cfg)?.test_cross_entropy;
            }
            log::info!("repetition {arch} seed {seed}: none {:.4} rbp2 {:.4} rbp3 {:.4}", ce[0], ce[1], ce[2]);
            per_seed.push(ce);
        }
        let n = per_seed.len() as f64;
        let mean = |j: usize| per_seed.iter().map(|c| c[j]).sum::<f64>() / n;
        rows.push(RepetitionRow {
            architecture: arch,
            none: mean(0),
            rbp2: mean(1),
            rbp3: mean(2),
            per_seed,
        });
    }
    Ok(rows)
}
