//! Feed-forward, Elman, GRU and LSTM networks over one-hot tokens, with
//! optional RBP structures.
//!
//! Hidden layers use ReLU (the Elman cell too); GRU and LSTM use the usual
//! sigmoid gates with zero biases, except the LSTM forget gate which starts
//! at 1. Recurrent models start from a zero state, read one token per step
//! and predict from the final step's top-layer state. Dropout is inverted
//! dropout on hidden activations during training only.

mod checkpoint;
mod config;
mod network;
mod train;

pub use checkpoint::{CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use config::{Architecture, ModelConfig, RbpVariant};
pub use network::{Forward, Model, TrainPass};
pub use train::{batch_loss, evaluate, train, train_model, EpochStats, Metric, TrainedModel, HEAD_LOSS_WEIGHT};
