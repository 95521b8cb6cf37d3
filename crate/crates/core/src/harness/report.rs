use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::grid::Grid;
use super::run::{ReproduceOptions, SimulationSummary};
use super::tables::{Band, CellSpec};
use crate::error::{Error, Result};
use crate::model::{ModelConfig, RbpVariant};
use crate::patterns::TaskId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub table: u8,
    pub task: String,
    pub model: String,
    pub rbp: String,
    pub values: Vec<f64>,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// mean as a whole percentage, the way published tables print it
    pub percent: f64,
    pub paper_target: f64,
    pub band: Band,
    pub pass: bool,
    pub config: ModelConfig,
    pub error: Option<String>,
}

impl CellResult {
    pub fn new(table: u8, spec: &CellSpec, config: ModelConfig, summary: SimulationSummary) -> Self {
        let error = (!summary.failures.is_empty()).then(|| {
            summary
                .failures
                .iter()
                .map(|(seed, m)| format!("seed {seed}: {m}"))
                .collect::<Vec<_>>()
                .join("; ")
        });
        Self {
            table,
            task: spec.task.to_string(),
            model: spec.architecture.to_string(),
            rbp: spec.rbp.as_str().to_string(),
            percent: (summary.mean * 100.0).round(),
            pass: error.is_none() && spec.band.contains(summary.mean),
            values: summary.values,
            mean: summary.mean,
            min: summary.min,
            max: summary.max,
            paper_target: spec.target,
            band: spec.band,
            config,
            error,
        }
    }

    pub fn key(&self) -> String {
        format!("{} {} rbp={}", self.task, self.model, self.rbp)
    }
}

/// Everything needed to re-run a report exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub crate_version: String,
    pub table: u8,
    pub base_seed: u64,
    pub sims: usize,
    pub fast: bool,
    /// `None` in fast mode
    pub grid: Option<Grid>,
    pub folds: usize,
    /// each cell gets its own grid-search winner
    pub selection: String,
}

impl Manifest {
    pub fn new(table: u8, opts: &ReproduceOptions) -> Self {
        Self {
            crate_version: env!("CARGO_PKG_VERSION").into(),
            table,
            base_seed: opts.seed,
            sims: opts.sims,
            fast: opts.fast,
            grid: (!opts.fast).then(|| opts.grid.clone()),
            folds: opts.folds,
            selection: if opts.fast { "pinned" } else { "per-cell" }.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub table: u8,
    pub cells: Vec<CellResult>,
    pub manifest: Manifest,
}

/// One CSV line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub table: u8,
    pub task: String,
    pub model: String,
    pub rbp: String,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub paper_target: f64,
    pub pass: bool,
}

const HEADER: [&str; 9] = ["table", "task", "model", "rbp", "mean", "min", "max", "paper_target", "pass"];

impl ExperimentReport {
    pub fn rows(&self) -> Vec<ReportRow> {
        self.cells
            .iter()
            .map(|c| ReportRow {
                table: c.table,
                task: c.task.clone(),
                model: c.model.clone(),
                rbp: c.rbp.clone(),
                mean: c.mean,
                min: c.min,
                max: c.max,
                paper_target: c.paper_target,
                pass: c.pass,
            })
            .collect()
    }

    pub fn cell(&self, task: TaskId, model: &str, rbp: RbpVariant) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.task == task.as_str() && c.model == model && c.rbp == rbp.as_str())
    }

    /// Mean over the architectures present for one (task, variant) row.
    pub fn row_mean(&self, task: TaskId, rbp: RbpVariant) -> Option<f64> {
        let v: Vec<f64> = self
            .cells
            .iter()
            .filter(|c| c.task == task.as_str() && c.rbp == rbp.as_str())
            .map(|c| c.mean)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn all_pass(&self) -> bool {
        self.cells.iter().all(|c| c.pass)
    }

    /// Plain-text table with rounded percentages.
    pub fn render(&self) -> String {
        let mut s = format!(
            "table {}  ({} sims, seed {}, {})\n",
            self.table,
            self.manifest.sims,
            self.manifest.base_seed,
            if self.manifest.fast { "fast" } else { "grid search" }
        );
        if self.cells.iter().any(|c| c.task.starts_with("pred-")) {
            let k = TaskId::PredictAba.default_vocab_size();
            let held = k - k / 2;
            let _ = writeln!(
                s,
                "chance: 1/{k} = {:.1}% over the vocabulary, 1/{held} = {:.1}% over the test letters",
                100.0 / k as f64,
                100.0 / held as f64
            );
        }
        let _ = writeln!(
            s,
            "{:<9} {:<5} {:<6} {:>5} {:>7} {:>14}  result",
            "task", "model", "rbp", "mean", "paper", "band"
        );
        for c in &self.cells {
            let _ = writeln!(
                s,
                "{:<9} {:<5} {:<6} {:>4}% {:>6}% {:>14}  {}",
                c.task,
                c.model,
                c.rbp,
                c.percent,
                (c.paper_target * 100.0).round(),
                c.band.to_string(),
                match (&c.error, c.pass) {
                    (Some(_), _) => "FAILED RUN",
                    (None, true) => "pass",
                    (None, false) => "FAIL",
                }
            );
        }
        s
    }
}

/// Path of the structured twin written next to a CSV report.
pub fn json_twin(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Writes the CSV report and its JSON twin (per-simulation values, configs
/// and the run manifest).
pub fn write_report(report: &ExperimentReport, path: &Path) -> Result<()> {
    let io = |e: std::io::Error| Error::io(path, e);
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(HEADER).map_err(|e| csv_error(path, e))?;
    for row in report.rows() {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(io)?;
    let twin = json_twin(path);
    let text = serde_json::to_string_pretty(report).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(&twin, text + "\n").map_err(|e| Error::io(&twin, e))
}

pub fn read_report_csv(path: &Path) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = r.headers().map_err(|e| csv_error(path, e))?;
    if headers.iter().ne(HEADER) {
        return Err(Error::Parse {
            path: path.into(),
            message: format!("unexpected header {headers:?}"),
        });
    }
    r.deserialize().map(|row| row.map_err(|e| csv_error(path, e))).collect()
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        }
    } else {
        Error::Parse {
            path: path.into(),
            message: e.to_string(),
        }
    }
}
