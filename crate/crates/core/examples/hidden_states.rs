//! Step-by-step hidden states of a recurrent model; with RBP1 a step only
//! sees comparisons between tokens already read.
//!
//! cargo run --release --example hidden_states

use rbp::model::{Architecture, Model, ModelConfig, RbpVariant};

fn main() -> rbp::Result<()> {
    let cfg = ModelConfig {
        hidden_size: 4,
        ..ModelConfig::classifier(Architecture::Gru, RbpVariant::Rbp1p, 6)
    };
    let model = Model::new(cfg)?;
    for seq in [[0, 1, 0], [0, 1, 1]] {
        println!("{seq:?}");
        for (t, h) in model.hidden_states(&seq)?.iter().enumerate() {
            let h: Vec<String> = h.iter().map(|v| format!("{v:+.3}")).collect();
            println!("  step {t}: {}", h.join(" "));
        }
    }
    Ok(())
}
