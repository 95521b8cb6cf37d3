use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Ffnn,
    Rnn,
    Gru,
    Lstm,
}

impl Architecture {
    pub const ALL: [Architecture; 4] = [Self::Ffnn, Self::Rnn, Self::Gru, Self::Lstm];
    pub const RECURRENT: [Architecture; 3] = [Self::Rnn, Self::Gru, Self::Lstm];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ffnn => "ffnn",
            Self::Rnn => "rnn",
            Self::Gru => "gru",
            Self::Lstm => "lstm",
        }
    }

    pub fn is_recurrent(self) -> bool {
        self != Self::Ffnn
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Input(format!("unknown model {s:?} (ffnn, rnn, gru, lstm)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RbpVariant {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "1n")]
    Rbp1n,
    #[serde(rename = "1p")]
    Rbp1p,
    #[serde(rename = "2")]
    Rbp2,
    #[serde(rename = "3")]
    Rbp3,
}

impl RbpVariant {
    pub const ALL: [RbpVariant; 5] = [Self::None, Self::Rbp1n, Self::Rbp1p, Self::Rbp2, Self::Rbp3];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Rbp1n => "1n",
            Self::Rbp1p => "1p",
            Self::Rbp2 => "2",
            Self::Rbp3 => "3",
        }
    }

    /// Table label: `-` for none, `RBP1n` etc. otherwise.
    pub fn label(self) -> &'static str {
        match self {
            Self::None => "-",
            Self::Rbp1n => "RBP1n",
            Self::Rbp1p => "RBP1p",
            Self::Rbp2 => "RBP2",
            Self::Rbp3 => "RBP3",
        }
    }

    /// DRp concatenated to the hidden layer (RBP2, and RBP3 which builds on it).
    pub fn mid_fusion(self) -> bool {
        matches!(self, Self::Rbp2 | Self::Rbp3)
    }
}

impl fmt::Display for RbpVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RbpVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        let t = t.strip_prefix("rbp").unwrap_or(&t);
        Self::ALL
            .into_iter()
            .find(|v| v.as_str() == t || (t == "-" && *v == Self::None))
            .ok_or_else(|| Error::Input(format!("unknown rbp variant {s:?} (none, 1n, 1p, 2, 3)")))
    }
}

/// Everything needed to build and train one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub architecture: Architecture,
    pub hidden_size: usize,
    pub layers: usize,
    pub learning_rate: f64,
    pub dropout: f64,
    pub epochs: usize,
    pub rbp: RbpVariant,
    pub vocab_size: usize,
    pub context_len: usize,
    pub output_size: usize,
    pub seed: u64,
    /// `None` trains on the whole set at once.
    #[serde(default)]
    pub batch_size: Option<usize>,
    /// RBP3: feed the true relations into the mixture while training. When
    /// false the mixture always sees the head's estimate and the true
    /// relations only supervise the head.
    #[serde(default = "yes")]
    pub teacher_forcing: bool,
}

fn yes() -> bool {
    true
}

impl ModelConfig {
    /// Classification defaults: context 3, two classes.
    pub fn classifier(architecture: Architecture, rbp: RbpVariant, vocab_size: usize) -> Self {
        Self {
            architecture,
            hidden_size: 50,
            layers: 1,
            learning_rate: 0.01,
            dropout: 0.1,
            epochs: 10,
            rbp,
            vocab_size,
            context_len: 3,
            output_size: 2,
            seed: 0,
            batch_size: None,
            teacher_forcing: true,
        }
    }

    /// Prediction defaults: context 2, one output per vocabulary token.
    pub fn predictor(architecture: Architecture, rbp: RbpVariant, vocab_size: usize) -> Self {
        Self {
            context_len: 2,
            output_size: vocab_size,
            ..Self::classifier(architecture, rbp, vocab_size)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.hidden_size == 0 {
            return bad("hidden size must be positive".into());
        }
        if !(1..=2).contains(&self.layers) {
            return bad(format!("{} hidden layers; 1 or 2 supported", self.layers));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate {} must be positive", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} not in [0, 1)", self.dropout));
        }
        if self.vocab_size == 0 || self.context_len == 0 || self.output_size == 0 {
            return bad("vocabulary, context and output sizes must be positive".into());
        }
        if self.batch_size == Some(0) {
            return bad("batch size must be positive".into());
        }
        if self.rbp != RbpVariant::None && self.context_len < 2 {
            return bad("RBP structures need a context of at least 2 tokens".into());
        }
        if self.rbp == RbpVariant::Rbp3 {
            if self.output_size != self.vocab_size {
                return bad("RBP3 maps relations back onto the vocabulary; it needs a prediction task".into());
            }
            if !self.architecture.is_recurrent() {
                return bad("RBP3 is defined for recurrent models".into());
            }
        }
        Ok(())
    }
}
