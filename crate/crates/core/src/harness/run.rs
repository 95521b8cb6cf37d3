use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{grid_search, Grid};
use super::report::{CellResult, ExperimentReport, Manifest};
use super::tables::{table_cells, CellSpec};
use crate::error::{Error, Result};
use crate::model::{evaluate, train, Architecture, Metric, ModelConfig, RbpVariant};
use crate::patterns::{build_task, Split, TaskId, TaskSpec};

/// Settings for reproducing a results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReproduceOptions {
    pub sims: usize,
    pub seed: u64,
    /// Skip the grid search and use [`fast_config`] for every cell.
    pub fast: bool,
    pub grid: Grid,
    pub folds: usize,
    /// Training epochs in grid-search mode.
    pub epochs: usize,
}

impl Default for ReproduceOptions {
    fn default() -> Self {
        Self {
            sims: 10,
            seed: 0,
            fast: true,
            grid: Grid::default(),
            folds: 4,
            epochs: 10,
        }
    }
}

/// Per-task defaults: vocabulary, context and output sizes.
pub fn base_config(task: TaskId, architecture: Architecture, rbp: RbpVariant) -> ModelConfig {
    let k = task.default_vocab_size();
    let mut cfg = if task.is_prediction() {
        ModelConfig::predictor(architecture, rbp, k)
    } else {
        ModelConfig::classifier(architecture, rbp, k)
    };
    cfg.context_len = task.context_len();
    if task == TaskId::Mixed4 {
        cfg.output_size = 4;
    }
    cfg
}

/// The pinned setting used without a grid search: one small hidden layer
/// trained long enough that every model fits its training set.
pub fn fast_config(task: TaskId, architecture: Architecture, rbp: RbpVariant) -> ModelConfig {
    ModelConfig {
        hidden_size: 10,
        layers: 1,
        learning_rate: 0.2,
        dropout: 0.4,
        epochs: 100,
        ..base_config(task, architecture, rbp)
    }
}

/// Test metric summarised over simulations that finished.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub values: Vec<f64>,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// `(seed, message)` for every simulation that aborted
    pub failures: Vec<(u64, String)>,
}

impl SimulationSummary {
    pub fn from_values(values: Vec<f64>, failures: Vec<(u64, String)>) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self {
            values,
            mean,
            min,
            max,
            failures,
        }
    }
}

/// One simulation: fresh dataset and initialisation from `seed`, trained on
/// the training split and scored on the test split.
pub fn simulate(task: TaskId, config: &ModelConfig, seed: u64, metric: Metric) -> Result<f64> {
    let mut spec = TaskSpec::new(task, seed);
    spec.vocab_size = config.vocab_size;
    let data = build_task(&spec)?;
    let cfg = ModelConfig {
        seed,
        ..config.clone()
    };
    let trained = train(cfg, &data.examples(Split::Train))?;
    evaluate(&trained.model, &data.examples(Split::Test), metric)
}

/// Runs simulations with seeds `base_seed..base_seed + count`. Training
/// errors other than divergence abort the whole run.
pub fn run_simulations(
    task: TaskId,
    config: &ModelConfig,
    count: usize,
    base_seed: u64,
    metric: Metric,
) -> Result<SimulationSummary> {
    if count == 0 {
        return Err(Error::Config("at least one simulation is required".into()));
    }
    let outcomes: Vec<(u64, Result<f64>)> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let seed = base_seed.wrapping_add(i);
            (seed, simulate(task, config, seed, metric))
        })
        .collect();
    let mut values = Vec::new();
    let mut failures = Vec::new();
    for (seed, r) in outcomes {
        match r {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(v) => failures.push((seed, format!("non-finite test metric {v}"))),
            Err(e @ Error::NonFiniteLoss { .. }) => failures.push((seed, e.to_string())),
            Err(e) => return Err(e),
        }
    }
    Ok(SimulationSummary::from_values(values, failures))
}

fn selection_metric(task: TaskId) -> Metric {
    if task.is_prediction() {
        Metric::CrossEntropy
    } else {
        Metric::Accuracy
    }
}

/// Chooses the configuration for one cell: pinned in fast mode, otherwise
/// the grid-search winner on the training split of the base-seed dataset.
pub fn cell_config(spec: &CellSpec, opts: &ReproduceOptions) -> Result<ModelConfig> {
    if opts.fast {
        return Ok(fast_config(spec.task, spec.architecture, spec.rbp));
    }
    let base = ModelConfig {
        epochs: opts.epochs,
        seed: opts.seed,
        ..base_config(spec.task, spec.architecture, spec.rbp)
    };
    let data = build_task(&TaskSpec::new(spec.task, opts.seed))?;
    let (best, _) = grid_search(
        &base,
        &opts.grid,
        &data.examples(Split::Train),
        opts.folds,
        selection_metric(spec.task),
    )?;
    Ok(best)
}

fn run_cell(table: u8, spec: &CellSpec, opts: &ReproduceOptions) -> Result<CellResult> {
    let config = cell_config(spec, opts)?;
    let summary = run_simulations(spec.task, &config, opts.sims, opts.seed, Metric::Accuracy)?;
    let cell = CellResult::new(table, spec, config, summary);
    match &cell.error {
        Some(e) => warn!("table {table} {}: {e}", cell.key()),
        None => info!(
            "table {table} {}: mean {:.3} (target {:.2}, {})",
            cell.key(),
            cell.mean,
            cell.paper_target,
            if cell.pass { "pass" } else { "fail" }
        ),
    }
    Ok(cell)
}

/// Runs every cell of a results table.
pub fn reproduce_table(table: u8, opts: &ReproduceOptions) -> Result<ExperimentReport> {
    let specs = table_cells(table).ok_or_else(|| Error::Input(format!("no table {table}; tables are 1 to 6")))?;
    if opts.sims == 0 {
        return Err(Error::Config("at least one simulation is required".into()));
    }
    let cells = specs
        .par_iter()
        .map(|s| run_cell(table, s, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport {
        table,
        cells,
        manifest: Manifest::new(table, opts),
    })
}
