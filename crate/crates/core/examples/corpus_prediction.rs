//! Next-token prediction on a corpus. With no argument, compares models on
//! a generated corpus where half the tokens repeat one of the last five.
//!
//! cargo run --release --example corpus_prediction -- [file.txt | file.sym]

use rbp::corpus::{ingest_symbols, ingest_text, windowize, RepetitionCorpus};
use rbp::harness::{corpus_config, fit_corpus};
use rbp::model::{Architecture, RbpVariant};

fn main() -> rbp::Result<()> {
    let corpus = match std::env::args().nth(1) {
        Some(p) if p.ends_with(".sym") => ingest_symbols(p.as_ref())?,
        Some(p) => ingest_text(p.as_ref())?,
        None => RepetitionCorpus {
            sequences: 100,
            ..RepetitionCorpus::default()
        }
        .generate(0)?,
    };
    let context = 5;
    let data = windowize(&corpus, context, [0.5, 0.25, 0.25])?;
    println!(
        "{} tokens, vocabulary {}, {} windows",
        corpus.token_count(),
        corpus.vocabulary.len(),
        data.items.len()
    );
    for rbp in [RbpVariant::None, RbpVariant::Rbp2, RbpVariant::Rbp3] {
        let cfg = corpus_config(Architecture::Gru, rbp, corpus.vocabulary.len(), context);
        let fit = fit_corpus(&data, cfg)?;
        println!(
            "gru {:<5} test cross-entropy {:.4} nats, accuracy {:.3}",
            rbp.label(),
            fit.test_cross_entropy,
            fit.test_accuracy
        );
    }
    Ok(())
}
