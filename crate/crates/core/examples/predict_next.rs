//! Next-token prediction on ABA / ABB triples: only RBP3 extrapolates to
//! unseen letters.
//!
//! cargo run --release --example predict_next -- [pred-aba|pred-abb] [seed]

use rbp::harness::fast_config;
use rbp::model::{evaluate, train, Architecture, Metric, ModelConfig, RbpVariant};
use rbp::patterns::{build_task, Split, TaskId, TaskSpec};

fn main() -> rbp::Result<()> {
    let mut args = std::env::args().skip(1);
    let task: TaskId = args.next().as_deref().unwrap_or("pred-aba").parse()?;
    let seed: u64 = args.next().map(|s| s.parse().expect("seed")).unwrap_or(0);
    let data = build_task(&TaskSpec::new(task, seed))?;
    let test = data.examples(Split::Test);

    for arch in Architecture::RECURRENT {
        for rbp in [RbpVariant::None, RbpVariant::Rbp2, RbpVariant::Rbp3] {
            let cfg = ModelConfig {
                seed,
                ..fast_config(task, arch, rbp)
            };
            let m = train(cfg, &data.examples(Split::Train))?;
            let acc = evaluate(&m.model, &test, Metric::Accuracy)?;
            let sample = &test[0];
            let guess = m.model.predict(&[sample.tokens.clone()])?[0];
            println!(
                "{arch:<5} {:<5} test accuracy {acc:.2}   {} -> {}",
                rbp.label(),
                data.vocabulary.render(&sample.tokens),
                data.vocabulary.symbol(guess)
            );
            if let Some(head) = m.model.head() {
                let (wb, wo) = head.weights(&m.model.store);
                println!("            mixture weights base {wb:.2} offset {wo:.2}");
            }
        }
    }
    Ok(())
}
