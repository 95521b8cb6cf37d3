//! Experimental protocol: grid search with k-fold cross-validation,
//! repeated simulations with fresh vocabulary splits, and reports laid out
//! like the published results tables.
//!
//! Simulation `i` of a cell uses seed `base + i` for both the dataset and
//! the network, so equal base seeds give bit-identical reports.

mod grid;
mod repetition;
mod report;
mod run;
mod tables;

pub use grid::{cross_validate, grid_search, kfold, select_best, Grid, GridScore};
pub use repetition::{corpus_config, fit_corpus, repetition_experiment, CorpusFit, RepetitionOptions, RepetitionRow};
pub use report::{json_twin, read_report_csv, write_report, CellResult, ExperimentReport, Manifest, ReportRow};
pub use run::{
    base_config, cell_config, fast_config, reproduce_table, run_simulations, simulate, ReproduceOptions,
    SimulationSummary,
};
pub use tables::{table_cells, Band, CellSpec, TABLE_IDS};
