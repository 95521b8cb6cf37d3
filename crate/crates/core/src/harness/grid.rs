use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{evaluate, train, Metric, ModelConfig};
use crate::patterns::Example;

/// Hyperparameter lists searched exhaustively.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Grid {
    pub hidden_sizes: Vec<usize>,
    pub layers: Vec<usize>,
    pub learning_rates: Vec<f64>,
    pub dropouts: Vec<f64>,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            hidden_sizes: vec![10, 20, 30, 40, 50],
            layers: vec![1, 2],
            learning_rates: vec![0.01, 0.1, 0.2, 0.4],
            dropouts: vec![0.1, 0.2, 0.4],
        }
    }
}

impl Grid {
    pub fn singleton(cfg: &ModelConfig) -> Self {
        Self {
            hidden_sizes: vec![cfg.hidden_size],
            layers: vec![cfg.layers],
            learning_rates: vec![cfg.learning_rate],
            dropouts: vec![cfg.dropout],
        }
    }

    pub fn len(&self) -> usize {
        self.hidden_sizes.len() * self.layers.len() * self.learning_rates.len() * self.dropouts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every grid point applied to `base`, hidden size outermost.
    pub fn configs(&self, base: &ModelConfig) -> Vec<ModelConfig> {
        let mut out = Vec::with_capacity(self.len());
        for &hidden_size in &self.hidden_sizes {
            for &layers in &self.layers {
                for &learning_rate in &self.learning_rates {
                    for &dropout in &self.dropouts {
                        out.push(ModelConfig {
                            hidden_size,
                            layers,
                            learning_rate,
                            dropout,
                            ..base.clone()
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridScore {
    pub config: ModelConfig,
    /// mean held-fold accuracy or cross-entropy
    pub score: f64,
}

/// Splits `n` item indices into `k` shuffled folds of near-equal size.
pub fn kfold(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || n < k {
        return Err(Error::Config(format!("{k}-fold cross-validation over {n} items")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![Vec::new(); k];
    for (i, j) in idx.into_iter().enumerate() {
        folds[i % k].push(j);
    }
    Ok(folds)
}

/// Mean held-fold score of one configuration.
pub fn cross_validate(config: &ModelConfig, examples: &[Example], folds: usize, metric: Metric) -> Result<f64> {
    let parts = kfold(examples.len(), folds, config.seed)?;
    let mut total = 0.0;
    for held in &parts {
        let mut is_held = vec![false; examples.len()];
        for &i in held {
            is_held[i] = true;
        }
        let (fit, check): (Vec<_>, Vec<_>) = examples.iter().enumerate().partition(|(i, _)| !is_held[*i]);
        let fit: Vec<Example> = fit.into_iter().map(|(_, e)| e.clone()).collect();
        let check: Vec<Example> = check.into_iter().map(|(_, e)| e.clone()).collect();
        let m = train(config.clone(), &fit)?;
        total += evaluate(&m.model, &check, metric)?;
    }
    Ok(total / folds as f64)
}

/// Cross-validates every grid point and returns the best configuration
/// with all scores. Higher accuracy or lower cross-entropy wins; ties go to
/// the smaller hidden size, then the lower learning rate, then grid order.
/// A configuration whose training diverges scores worst.
pub fn grid_search(
    base: &ModelConfig,
    grid: &Grid,
    examples: &[Example],
    folds: usize,
    metric: Metric,
) -> Result<(ModelConfig, Vec<GridScore>)> {
    if grid.is_empty() {
        return Err(Error::Config("empty hyperparameter grid".into()));
    }
    let worst = match metric {
        Metric::Accuracy => f64::NEG_INFINITY,
        Metric::CrossEntropy => f64::INFINITY,
    };
    let scores: Vec<GridScore> = grid
        .configs(base)
        .into_par_iter()
        .map(|config| {
            let score = match cross_validate(&config, examples, folds, metric) {
                Ok(s) if s.is_finite() => s,
                Ok(_) | Err(Error::NonFiniteLoss { .. }) => worst,
                Err(e) => return Err(e),
            };
            Ok(GridScore { config, score })
        })
        .collect::<Result<_>>()?;
    let best = select_best(&scores, metric).clone();
    Ok((best, scores))
}

pub fn select_best(scores: &[GridScore], metric: Metric) -> &ModelConfig {
    let better = |a: &GridScore, b: &GridScore| -> std::cmp::Ordering {
        let by_score = match metric {
            Metric::Accuracy => b.score.total_cmp(&a.score),
            Metric::CrossEntropy => a.score.total_cmp(&b.score),
        };
        by_score
            .then(a.config.hidden_size.cmp(&b.config.hidden_size))
            .then(a.config.learning_rate.total_cmp(&b.config.learning_rate))
    };
    // min_by keeps the first of equal elements, i.e. grid order
    &scores.iter().min_by(|a, b| better(a, b)).expect("nonempty grid").config
}
