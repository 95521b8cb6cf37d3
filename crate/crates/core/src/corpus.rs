//! Real-world token streams for next-token prediction.
//!
//! Text files become character streams (case and whitespace kept as
//! tokens). Symbol files hold one sequence per line of whitespace-separated
//! integers, e.g. MIDI pitches; windows never cross a line boundary. The
//! vocabulary is every distinct symbol in order of first occurrence.

use std::fmt;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::patterns::{DatasetKind, Item, LabeledDataset, Split, Vocabulary};

pub const CORPUS_FORMAT: &str = "rbp-corpus";
pub const CORPUS_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusMode {
    Text,
    Symbols,
}

impl fmt::Display for CorpusMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Text => "text",
            Self::Symbols => "symbols",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub format: String,
    pub version: u32,
    pub mode: CorpusMode,
    pub source: Option<PathBuf>,
    pub vocabulary: Vocabulary,
    pub sequences: Vec<Vec<usize>>,
}

/// Assigns indices to symbols in first-occurrence order.
fn index_sequences(raw: Vec<Vec<String>>, mode: CorpusMode, source: Option<PathBuf>) -> Result<Corpus> {
    let mut symbols: Vec<String> = Vec::new();
    let mut lookup = std::collections::HashMap::new();
    let sequences = raw
        .into_iter()
        .map(|seq| {
            seq.into_iter()
                .map(|s| {
                    *lookup.entry(s.clone()).or_insert_with(|| {
                        symbols.push(s);
                        symbols.len() - 1
                    })
                })
                .collect()
        })
        .collect();
    if symbols.is_empty() {
        return Err(Error::Input(match &source {
            Some(p) => format!("{}: corpus is empty", p.display()),
            None => "corpus is empty".into(),
        }));
    }
    Ok(Corpus {
        format: CORPUS_FORMAT.into(),
        version: CORPUS_VERSION,
        mode,
        source,
        vocabulary: Vocabulary::new(symbols)?,
        sequences,
    })
}

pub fn parse_text(text: &str) -> Result<Corpus> {
    index_sequences(vec![text.chars().map(String::from).collect()], CorpusMode::Text, None)
}

/// Reads a UTF-8 file; every character is a token.
pub fn ingest_text(path: &Path) -> Result<Corpus> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes).map_err(|e| Error::Parse {
        path: path.into(),
        message: format!("not valid UTF-8: {e}"),
    })?;
    let mut c = parse_text(&text).map_err(|_| Error::Input(format!("{}: corpus is empty", path.display())))?;
    c.source = Some(path.into());
    Ok(c)
}

/// One sequence per non-blank line of whitespace-separated integers.
pub fn parse_symbols(text: &str) -> std::result::Result<Corpus, (usize, String)> {
    let mut raw = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let seq = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<i64>()
                    .map(|v| v.to_string())
                    .map_err(|_| (i + 1, format!("token {tok:?} is not an integer")))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if !seq.is_empty() {
            raw.push(seq);
        }
    }
    index_sequences(raw, CorpusMode::Symbols, None).map_err(|e| (0, e.to_string()))
}

pub fn ingest_symbols(path: &Path) -> Result<Corpus> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut c = parse_symbols(&text).map_err(|(line, message)| Error::Parse {
        path: path.into(),
        message: if line > 0 { format!("line {line}: {message}") } else { message },
    })?;
    c.source = Some(path.into());
    Ok(c)
}

impl Corpus {
    /// Writes the corpus back in the format it was read from.
    pub fn to_source_text(&self) -> String {
        let sym = |t: &usize| self.vocabulary.symbol(*t).to_string();
        match self.mode {
            CorpusMode::Text => self.sequences.iter().flatten().map(sym).collect(),
            CorpusMode::Symbols => self
                .sequences
                .iter()
                .map(|s| s.iter().map(sym).collect::<Vec<_>>().join(" ") + "\n")
                .collect(),
        }
    }

    pub fn token_count(&self) -> usize {
        self.sequences.iter().map(Vec::len).sum()
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let c: Self = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.into(),
            message: e.to_string(),
        })?;
        if c.format != CORPUS_FORMAT || c.version != CORPUS_VERSION {
            return Err(Error::Parse {
                path: path.into(),
                message: format!("unsupported corpus {} v{}", c.format, c.version),
            });
        }
        Ok(c)
    }
}

/// Sliding windows (stride 1) of `context` tokens plus the following token.
/// Items are split into train/val/test by contiguous position in the corpus.
pub fn windowize(corpus: &Corpus, context: usize, fractions: [f64; 3]) -> Result<LabeledDataset> {
    if context == 0 {
        return Err(Error::Config("context length must be at least 1".into()));
    }
    if (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 || fractions.iter().any(|&f| f < 0.0) {
        return Err(Error::Config(format!("split fractions {fractions:?} must sum to 1")));
    }
    let mut windows = Vec::new();
    for seq in &corpus.sequences {
        for w in seq.windows(context + 1) {
            windows.push((w[..context].to_vec(), w[context]));
        }
    }
    if windows.is_empty() {
        return Err(Error::Input(format!(
            "corpus has no sequence longer than the context of {context}"
        )));
    }
    let n = windows.len();
    let train_end = (n as f64 * fractions[0]).round() as usize;
    let val_end = (n as f64 * (fractions[0] + fractions[1])).round() as usize;
    let items = windows
        .into_iter()
        .enumerate()
        .map(|(i, (tokens, target))| Item {
            tokens,
            target,
            split: if i < train_end {
                Split::Train
            } else if i < val_end {
                Split::Val
            } else {
                Split::Test
            },
        })
        .collect();
    let task = match &corpus.source {
        Some(p) => format!("corpus:{}", p.display()),
        None => format!("corpus:{}", corpus.mode),
    };
    Ok(LabeledDataset::new(task, corpus.vocabulary.clone(), DatasetKind::Prediction, context, items))
}

/// Synthetic stream where each token after the first `context` copies a
/// uniformly chosen token from the previous `context` with probability
/// `copy_prob` and is drawn uniformly from the vocabulary otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RepetitionCorpus {
    pub vocab_size: usize,
    pub context: usize,
    pub copy_prob: f64,
    pub sequences: usize,
    pub length: usize,
}

impl Default for RepetitionCorpus {
    fn default() -> Self {
        Self {
            vocab_size: 12,
            context: 5,
            copy_prob: 0.5,
            sequences: 200,
            length: 40,
        }
    }
}

impl RepetitionCorpus {
    pub fn generate(&self, seed: u64) -> Result<Corpus> {
        if self.length <= self.context || !(0.0..=1.0).contains(&self.copy_prob) {
            return Err(Error::Config(format!(
                "repetition corpus needs length > context and copy probability in [0, 1]: {self:?}"
            )));
        }
        let vocab = Vocabulary::letters(self.vocab_size)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = self.vocab_size;
        let sequences = (0..self.sequences)
            .map(|_| {
                let mut s: Vec<usize> = (0..self.context).map(|_| rng.gen_range(0..k)).collect();
                while s.len() < self.length {
                    let next = if rng.gen_bool(self.copy_prob) {
                        s[s.len() - self.context + rng.gen_range(0..self.context)]
                    } else {
                        rng.gen_range(0..k)
                    };
                    s.push(next);
                }
                s
            })
            .collect();
        Ok(Corpus {
            format: CORPUS_FORMAT.into(),
            version: CORPUS_VERSION,
            mode: CorpusMode::Symbols,
            source: None,
            vocabulary: vocab,
            sequences,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_tokens() {
        let c = parse_text("abcabc").unwrap();
        assert_eq!(c.sequences, vec![vec![0, 1, 2, 0, 1, 2]]);
        assert_eq!(c.vocabulary.len(), 3);
        let c = parse_text("aaa").unwrap();
        assert_eq!((c.vocabulary.len(), c.sequences[0].clone()), (1, vec![0, 0, 0]));
        assert!(parse_text("").is_err());
    }

    #[test]
    fn symbol_lines() {
        let c = parse_symbols("60 62 60\n64 64").unwrap();
        assert_eq!(c.sequences, vec![vec![0, 1, 0], vec![2, 2]]);
        assert_eq!(c.vocabulary.symbols(), &["60", "62", "64"]);
        assert_eq!(parse_symbols("60 x").unwrap_err().0, 1);
        assert_eq!(parse_symbols("1 2\n\n3 y").unwrap_err().0, 3);
    }

    #[test]
    fn windows() {
        let c = parse_text("abab").unwrap();
        let ds = windowize(&c, 2, [1.0, 0.0, 0.0]).unwrap();
        let got: Vec<_> = ds.items.iter().map(|i| (i.tokens.clone(), i.target)).collect();
        assert_eq!(got, vec![(vec![0, 1], 0), (vec![1, 0], 1)]);
        assert_eq!(windowize(&parse_text("abcdef").unwrap(), 5, [0.5, 0.25, 0.25]).unwrap().items.len(), 1);
        assert!(windowize(&parse_text("abcde").unwrap(), 5, [0.5, 0.25, 0.25]).is_err());
        let single = parse_symbols("60\n61 62 63").unwrap();
        assert_eq!(windowize(&single, 1, [0.5, 0.25, 0.25]).unwrap().items.len(), 2);
    }

    #[test]
    fn contiguous_splits() {
        let c = parse_text(&"abcd".repeat(10)).unwrap();
        let ds = windowize(&c, 3, [0.5, 0.25, 0.25]).unwrap();
        let splits: Vec<Split> = ds.items.iter().map(|i| i.split).collect();
        let first_val = splits.iter().position(|&s| s == Split::Val).unwrap();
        assert!(splits[..first_val].iter().all(|&s| s == Split::Train));
        assert!(splits.windows(2).all(|w| !(w[0] == Split::Test && w[1] != Split::Test)));
    }

    #[test]
    fn repetition_corpus_copies() {
        let spec = RepetitionCorpus {
            copy_prob: 1.0,
            ..Default::default()
        };
        let c = spec.generate(4).unwrap();
        for s in &c.sequences {
            for t in spec.context..s.len() {
                assert!(s[t - spec.context..t].contains(&s[t]));
            }
        }
        assert_eq!(c, spec.generate(4).unwrap());
    }
}
