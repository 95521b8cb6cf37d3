use serde::{Deserialize, Serialize};

use crate::model::{Architecture, RbpVariant};
use crate::patterns::TaskId;

/// Acceptance band on a cell's mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Band {
    AtLeast { min: f64 },
    AtMost { max: f64 },
    Within { min: f64, max: f64 },
}

impl Band {
    pub fn contains(self, x: f64) -> bool {
        match self {
            Self::AtLeast { min } => x >= min,
            Self::AtMost { max } => x <= max,
            Self::Within { min, max } => (min..=max).contains(&x),
        }
    }

    fn around(target: f64, tol: f64) -> Self {
        Self::Within {
            min: target - tol,
            max: target + tol,
        }
    }
}

impl std::fmt::Display for Band {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            Self::AtLeast { min } => write!(f, ">= {min:.2}"),
            Self::AtMost { max } => write!(f, "<= {max:.2}"),
            Self::Within { min, max } => write!(f, "[{min:.2}, {max:.2}]"),
        }
    }
}

/// One (task, architecture, variant) entry of a published results table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellSpec {
    pub task: TaskId,
    pub architecture: Architecture,
    pub rbp: RbpVariant,
    pub target: f64,
    pub band: Band,
}

pub const TABLE_IDS: [u8; 6] = [1, 2, 3, 4, 5, 6];

const CLASSIFICATION: [TaskId; 5] = [
    TaskId::AbaVsOther,
    TaskId::AbbVsOther,
    TaskId::AbaVsAbb,
    TaskId::AbcVsOther,
    TaskId::Shared,
];

/// Published accuracies, by architecture in `Architecture::ALL` order.
fn classification_targets(task: TaskId, rbp: RbpVariant) -> [f64; 4] {
    use RbpVariant::*;
    use TaskId::*;
    match (task, rbp) {
        (_, Rbp2) => [1.0; 4],
        (AbaVsOther | AbbVsOther, None | Rbp1n) => [0.50, 0.55, 0.55, 0.55],
        (AbaVsOther | AbbVsOther, Rbp1p) => [0.65, 0.70, 0.70, 0.70],
        (AbaVsAbb, Rbp1n) => [0.50, 0.60, 0.65, 0.65],
        (AbaVsAbb, Rbp1p) => [0.75; 4],
        (AbcVsOther, Rbp1n) => [0.55, 0.65, 0.65, 0.65],
        (AbcVsOther, Rbp1p) => [0.55, 0.70, 0.70, 0.70],
        (Shared, Rbp1n) => [0.55, 0.72, 0.75, 0.75],
        (Shared, Rbp1p) => [0.69, 0.74, 0.75, 0.76],
        _ => [0.50; 4],
    }
}

fn baseline_band(task: TaskId) -> Band {
    match task {
        TaskId::AbaVsOther | TaskId::AbbVsOther => Band::Within { min: 0.45, max: 0.65 },
        _ => Band::Within { min: 0.45, max: 0.60 },
    }
}

fn arch_index(a: Architecture) -> usize {
    Architecture::ALL.iter().position(|&x| x == a).expect("known architecture")
}

fn classification_cell(task: TaskId, architecture: Architecture, rbp: RbpVariant) -> CellSpec {
    let target = classification_targets(task, rbp)[arch_index(architecture)];
    let band = match rbp {
        RbpVariant::None => baseline_band(task),
        RbpVariant::Rbp2 => Band::AtLeast { min: 0.99 },
        _ => Band::around(target, 0.10),
    };
    CellSpec {
        task,
        architecture,
        rbp,
        target,
        band,
    }
}

fn prediction_cell(task: TaskId, architecture: Architecture, rbp: RbpVariant) -> CellSpec {
    let lstm = architecture == Architecture::Lstm;
    let target = match (rbp, lstm, task) {
        (RbpVariant::Rbp3, _, _) => 1.0,
        (_, false, _) | (RbpVariant::None, _, _) => 0.0,
        (RbpVariant::Rbp1n, _, TaskId::PredictAba) => 0.16,
        (RbpVariant::Rbp1n, _, _) => 0.17,
        (RbpVariant::Rbp1p, _, TaskId::PredictAba) => 0.18,
        (RbpVariant::Rbp1p, _, _) => 0.20,
        (_, _, TaskId::PredictAba) => 0.20,
        _ => 0.22,
    };
    let band = match (rbp, lstm) {
        (RbpVariant::Rbp3, _) => Band::AtLeast { min: 0.99 },
        (RbpVariant::None, _) | (_, false) => Band::AtMost { max: 0.05 },
        (RbpVariant::Rbp2, true) => Band::Within { min: 0.05, max: 0.35 },
        _ => Band::around(target, 0.10),
    };
    CellSpec {
        task,
        architecture,
        rbp,
        target,
        band,
    }
}

fn mixed_cell(architecture: Architecture, rbp: RbpVariant) -> CellSpec {
    let ffnn = architecture == Architecture::Ffnn;
    let (target, band) = match rbp {
        RbpVariant::None => {
            let t = if ffnn { 0.23 } else { 0.42 };
            (t, Band::AtMost { max: if ffnn { 0.40 } else { 0.55 } })
        }
        RbpVariant::Rbp1p => {
            let t = if ffnn { 0.49 } else { 0.57 };
            (t, Band::around(t, 0.10))
        }
        _ => (1.0, Band::AtLeast { min: 0.99 }),
    };
    CellSpec {
        task: TaskId::Mixed4,
        architecture,
        rbp,
        target,
        band,
    }
}

/// Every cell of a table in row-major order, or `None` for an unknown id.
pub fn table_cells(table: u8) -> Option<Vec<CellSpec>> {
    use RbpVariant::*;
    let mut cells = Vec::new();
    match table {
        1 | 3 => {
            let tasks: &[TaskId] = if table == 1 { &CLASSIFICATION[..4] } else { &CLASSIFICATION[4..] };
            for &task in tasks {
                for arch in Architecture::ALL {
                    cells.push(classification_cell(task, arch, None));
                }
            }
        }
        4 => {
            for task in CLASSIFICATION {
                for rbp in [None, Rbp1n, Rbp1p, Rbp2] {
                    for arch in Architecture::ALL {
                        cells.push(classification_cell(task, arch, rbp));
                    }
                }
            }
        }
        2 | 5 => {
            let variants: &[RbpVariant] = if table == 2 { &[None] } else { &[None, Rbp1n, Rbp1p, Rbp2, Rbp3] };
            for task in [TaskId::PredictAba, TaskId::PredictAbb] {
                for &rbp in variants {
                    for arch in Architecture::RECURRENT {
                        cells.push(prediction_cell(task, arch, rbp));
                    }
                }
            }
        }
        6 => {
            for rbp in [None, Rbp1p, Rbp2] {
                for arch in [Architecture::Ffnn, Architecture::Rnn] {
                    cells.push(mixed_cell(arch, rbp));
                }
            }
        }
        _ => return Option::None,
    }
    Some(cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_shapes() {
        let n: Vec<usize> = TABLE_IDS.iter().map(|&t| table_cells(t).unwrap().len()).collect();
        assert_eq!(n, vec![16, 6, 4, 80, 30, 6]);
        assert!(table_cells(7).is_none());
    }

    #[test]
    fn published_values() {
        let t4 = table_cells(4).unwrap();
        let find = |task, arch, rbp| {
            *t4.iter()
                .find(|c| c.task == task && c.architecture == arch && c.rbp == rbp)
                .unwrap()
        };
        let c = find(TaskId::Shared, Architecture::Lstm, RbpVariant::Rbp1p);
        assert_eq!(c.target, 0.76);
        assert!(c.band.contains(0.70) && !c.band.contains(0.60));
        assert_eq!(find(TaskId::AbaVsOther, Architecture::Ffnn, RbpVariant::None).target, 0.50);
        let t5 = table_cells(5).unwrap();
        let lstm2 = t5
            .iter()
            .find(|c| c.task == TaskId::PredictAbb && c.architecture == Architecture::Lstm && c.rbp == RbpVariant::Rbp2)
            .unwrap();
        assert_eq!((lstm2.target, lstm2.band), (0.22, Band::Within { min: 0.05, max: 0.35 }));
    }
}
