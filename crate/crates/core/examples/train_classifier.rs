//! Standard networks against RBP structures on one classification task.
//!
//! cargo run --release --example train_classifier -- [task] [seed]

use rbp::harness::fast_config;
use rbp::model::{evaluate, train, Architecture, Metric, RbpVariant};
use rbp::patterns::{build_task, Split, TaskId, TaskSpec};

fn main() -> rbp::Result<()> {
    let mut args = std::env::args().skip(1);
    let task: TaskId = args.next().as_deref().unwrap_or("2").parse()?;
    let seed: u64 = args.next().map(|s| s.parse().expect("seed")).unwrap_or(0);
    let data = build_task(&TaskSpec::new(task, seed))?;
    let (fit, test) = (data.examples(Split::Train), data.examples(Split::Test));
    println!("task {task}: {} train, {} test items", fit.len(), test.len());

    for arch in Architecture::ALL {
        for rbp in [RbpVariant::None, RbpVariant::Rbp1n, RbpVariant::Rbp1p, RbpVariant::Rbp2] {
            let cfg = rbp::model::ModelConfig {
                seed,
                ..fast_config(task, arch, rbp)
            };
            let m = train(cfg, &fit)?;
            let train_acc = m.history.last().map_or(0.0, |s| s.train_accuracy);
            let test_acc = evaluate(&m.model, &test, Metric::Accuracy)?;
            println!("{arch:<5} {:<5} train {train_acc:.2} test {test_acc:.2}", rbp.label());
        }
    }
    Ok(())
}
