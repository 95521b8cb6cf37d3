//! Four-fold cross-validated grid search on the training split.
//!
//! cargo run --release --example grid_search

use rbp::harness::{base_config, grid_search, Grid};
use rbp::model::{evaluate, train, Architecture, Metric, RbpVariant};
use rbp::patterns::{build_task, Split, TaskId, TaskSpec};

fn main() -> rbp::Result<()> {
    let task = TaskId::AbaVsOther;
    let data = build_task(&TaskSpec::new(task, 0))?;
    let mut base = base_config(task, Architecture::Ffnn, RbpVariant::Rbp2);
    base.epochs = 30;
    // a slice of the full 120-point grid keeps this quick
    let grid = Grid {
        hidden_sizes: vec![10, 30],
        layers: vec![1],
        learning_rates: vec![0.01, 0.1],
        dropouts: vec![0.1, 0.4],
    };
    let (best, scores) = grid_search(&base, &grid, &data.examples(Split::Train), 4, Metric::Accuracy)?;
    for s in &scores {
        let c = &s.config;
        println!("h{:<3} lr {:<5} dropout {:<4} cv accuracy {:.3}", c.hidden_size, c.learning_rate, c.dropout, s.score);
    }
    println!(
        "chosen: hidden {}, lr {}, dropout {}",
        best.hidden_size, best.learning_rate, best.dropout
    );
    let m = train(best, &data.examples(Split::Train))?;
    println!("test accuracy {:.3}", evaluate(&m.model, &data.examples(Split::Test), Metric::Accuracy)?);
    Ok(())
}
