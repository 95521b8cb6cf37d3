//! Identity-rule learning with relation-based pattern (RBP) structures.
//!
//! Standard feed-forward and recurrent networks trained on triples such as
//! `aba` fail to recognise the same pattern over tokens they never saw in
//! training. The RBP structures add fixed comparison units between token
//! pairs (`DRn`, `DRp`) and wire them into the input (RBP1), a hidden layer
//! (RBP2) or the output distribution (RBP3).
//!
//! * [`patterns`]: abstract and concrete patterns, task datasets with
//!   vocabulary splits
//! * [`rbp`]: comparison units and the RBP3 head
//! * [`model`]: FFNN / RNN / GRU / LSTM networks, training, checkpoints
//! * [`harness`]: grid search, simulations, results tables
//! * [`corpus`]: text and symbol corpora for next-token prediction
//! * [`gradcheck`]: finite-difference checks of every model graph
//! * [`cli`]: the `rbp` command
//!
//! ```no_run
//! use rbp::model::{evaluate, train, Architecture, Metric, RbpVariant};
//! use rbp::harness::fast_config;
//! use rbp::patterns::{build_task, Split, TaskId, TaskSpec};
//!
//! let data = build_task(&TaskSpec::new(TaskId::AbaVsAbb, 1)).unwrap();
//! let cfg = fast_config(TaskId::AbaVsAbb, Architecture::Gru, RbpVariant::Rbp2);
//! let trained = train(cfg, &data.examples(Split::Train)).unwrap();
//! let acc = evaluate(&trained.model, &data.examples(Split::Test), Metric::Accuracy).unwrap();
//! println!("test accuracy {acc:.2}");
//! ```

pub mod cli;
pub mod corpus;
pub mod error;
pub mod gradcheck;
pub mod harness;
pub mod model;
pub mod patterns;
pub mod rbp;

pub use cli::run_cli;
pub use error::{Error, Result};
