//! Saves a trained model, reloads it and checks the predictions agree.
//!
//! cargo run --release --example checkpoint

use rbp::harness::fast_config;
use rbp::model::{train, Architecture, Model, RbpVariant};
use rbp::patterns::{build_task, Split, TaskId, TaskSpec};

fn main() -> rbp::Result<()> {
    let task = TaskId::PredictAbb;
    let data = build_task(&TaskSpec::new(task, 2))?;
    let trained = train(fast_config(task, Architecture::Lstm, RbpVariant::Rbp3), &data.examples(Split::Train))?;
    let path = std::env::temp_dir().join("rbp-checkpoint-example.json");
    trained.model.save(&path)?;
    let back = Model::load(&path)?;
    let seqs: Vec<Vec<usize>> = data.items_in(Split::Test).map(|i| i.tokens.clone()).collect();
    let same = trained.model.predict_proba(&seqs)? == back.predict_proba(&seqs)?;
    println!("{} parameters, written to {}", back.store.iter().count(), path.display());
    println!("reloaded model gives identical probabilities: {same}");
    Ok(())
}
