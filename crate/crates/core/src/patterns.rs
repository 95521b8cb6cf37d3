//! Synthetic identity-rule datasets.
//!
//! Triples over a small letter vocabulary are grouped by their abstract
//! pattern (AAA, AAB, ABA, ABB, ABC), assembled into classification or
//! next-token prediction tasks, and split into train/validation/test sets.
//! Except for the shared-vocabulary task, the training letters and the
//! validation/test letters are disjoint, so a model can only score above
//! chance on held-out data by applying the identity rule itself.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DATASET_FORMAT: &str = "rbp-dataset";
pub const DATASET_VERSION: u32 = 1;

/// Ordered list of distinct token symbols.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    symbols: Vec<String>,
}

impl Vocabulary {
    pub fn new(symbols: Vec<String>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::Input("empty vocabulary".into()));
        }
        for (i, s) in symbols.iter().enumerate() {
            if symbols[..i].contains(s) {
                return Err(Error::Input(format!("duplicate vocabulary symbol {s:?}")));
            }
        }
        Ok(Self { symbols })
    }

    /// `a`, `b`, ... up to `k` letters.
    pub fn letters(k: usize) -> Result<Self> {
        if k == 0 || k > 26 {
            return Err(Error::Input(format!("letter vocabulary size {k} not in 1..=26")));
        }
        Self::new((0..k).map(|i| ((b'a' + i as u8) as char).to_string()).collect())
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbol(&self, index: usize) -> &str {
        &self.symbols[index]
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == symbol)
    }

    pub fn render(&self, tokens: &[usize]) -> String {
        tokens.iter().map(|&t| self.symbol(t)).collect::<Vec<_>>().join("")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AbstractPattern {
    Aaa,
    Aab,
    Aba,
    Abb,
    Abc,
}

impl AbstractPattern {
    pub const ALL: [AbstractPattern; 5] = [Self::Aaa, Self::Aab, Self::Aba, Self::Abb, Self::Abc];

    /// Distinct tokens the pattern needs.
    pub fn distinct_tokens(self) -> usize {
        match self {
            Self::Aaa => 1,
            Self::Aab | Self::Aba | Self::Abb => 2,
            Self::Abc => 3,
        }
    }
}

impl fmt::Display for AbstractPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Aaa => "AAA",
            Self::Aab => "AAB",
            Self::Aba => "ABA",
            Self::Abb => "ABB",
            Self::Abc => "ABC",
        })
    }
}

/// The abstract pattern of a triple, decided only by token equality.
pub fn classify_abstract(triple: [usize; 3]) -> AbstractPattern {
    let [a, b, c] = triple;
    match (a == b, a == c, b == c) {
        (true, true, _) => AbstractPattern::Aaa,
        (true, false, _) => AbstractPattern::Aab,
        (false, true, _) => AbstractPattern::Aba,
        (false, false, true) => AbstractPattern::Abb,
        (false, false, false) => AbstractPattern::Abc,
    }
}

/// Per-position token constraints; `None` is a wildcard.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcretePattern(pub Vec<Option<usize>>);

impl ConcretePattern {
    /// Parses notation like `a**` or `*bc` against a vocabulary.
    pub fn parse(text: &str, vocab: &Vocabulary) -> Result<Self> {
        text.chars()
            .map(|c| match c {
                '*' => Ok(None),
                _ => vocab
                    .index_of(&c.to_string())
                    .map(Some)
                    .ok_or_else(|| Error::Input(format!("symbol {c:?} not in vocabulary"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

pub fn matches_concrete(tokens: &[usize], pattern: &ConcretePattern) -> bool {
    tokens.len() == pattern.0.len()
        && tokens
            .iter()
            .zip(&pattern.0)
            .all(|(t, p)| p.map_or(true, |p| p == *t))
}

/// Every triple over `subset` whose abstract pattern is `pattern`, in
/// lexicographic order of subset positions.
pub fn enumerate_triples(subset: &[usize], pattern: AbstractPattern) -> Result<Vec<[usize; 3]>> {
    for (i, t) in subset.iter().enumerate() {
        if subset[..i].contains(t) {
            return Err(Error::Input(format!("token {t} repeated in subset")));
        }
    }
    if subset.len() < pattern.distinct_tokens() {
        return Err(Error::VocabularyTooSmall {
            pattern: pattern.to_string(),
            needed: pattern.distinct_tokens(),
            got: subset.len(),
        });
    }
    let mut out = Vec::new();
    for &a in subset {
        for &b in subset {
            match pattern {
                AbstractPattern::Aaa if a == b => out.push([a, a, a]),
                AbstractPattern::Aab if a != b => out.push([a, a, b]),
                AbstractPattern::Aba if a != b => out.push([a, b, a]),
                AbstractPattern::Abb if a != b => out.push([a, b, b]),
                AbstractPattern::Abc if a != b => {
                    out.extend(subset.iter().filter(|&&c| c != a && c != b).map(|&c| [a, b, c]))
                }
                _ => {}
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskId {
    /// ABA vs every other pattern
    #[serde(rename = "1a")]
    AbaVsOther,
    /// ABB vs every other pattern
    #[serde(rename = "1b")]
    AbbVsOther,
    #[serde(rename = "2")]
    AbaVsAbb,
    #[serde(rename = "3")]
    AbcVsOther,
    /// ABA vs other on one vocabulary shared by all splits
    #[serde(rename = "shared")]
    Shared,
    #[serde(rename = "pred-aba")]
    PredictAba,
    #[serde(rename = "pred-abb")]
    PredictAbb,
    /// four classes crossing ABA/ABB with first token `a`/`b`
    #[serde(rename = "mixed4")]
    Mixed4,
}

impl TaskId {
    pub const ALL: [TaskId; 8] = [
        Self::AbaVsOther,
        Self::AbbVsOther,
        Self::AbaVsAbb,
        Self::AbcVsOther,
        Self::Shared,
        Self::PredictAba,
        Self::PredictAbb,
        Self::Mixed4,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::AbaVsOther => "1a",
            Self::AbbVsOther => "1b",
            Self::AbaVsAbb => "2",
            Self::AbcVsOther => "3",
            Self::Shared => "shared",
            Self::PredictAba => "pred-aba",
            Self::PredictAbb => "pred-abb",
            Self::Mixed4 => "mixed4",
        }
    }

    pub fn is_prediction(self) -> bool {
        matches!(self, Self::PredictAba | Self::PredictAbb)
    }

    pub fn default_vocab_size(self) -> usize {
        if self == Self::Mixed4 {
            18
        } else {
            12
        }
    }

    /// Tokens the model sees before it has to answer.
    pub fn context_len(self) -> usize {
        if self.is_prediction() {
            2
        } else {
            3
        }
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Input(format!("unknown task {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub task: TaskId,
    pub vocab_size: usize,
    /// train / validation / test item fractions
    pub fractions: [f64; 3],
    pub seed: u64,
}

impl TaskSpec {
    pub fn new(task: TaskId, seed: u64) -> Self {
        Self {
            task,
            vocab_size: task.default_vocab_size(),
            fractions: [0.5, 0.25, 0.25],
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        let total: f64 = self.fractions.iter().sum();
        if (total - 1.0).abs() > 1e-9 || self.fractions.iter().any(|&f| f <= 0.0) {
            return Err(Error::Config(format!(
                "split fractions {:?} must be positive and sum to 1",
                self.fractions
            )));
        }
        Ok(())
    }

    /// Share of the held-out pool that goes to validation.
    fn val_share(&self) -> f64 {
        self.fractions[1] / (self.fractions[1] + self.fractions[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// One sequence with its class label or next-token target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub tokens: Vec<usize>,
    pub target: usize,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum DatasetKind {
    Classification { classes: Vec<String> },
    Prediction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub format: String,
    pub version: u32,
    pub task: String,
    pub vocabulary: Vocabulary,
    pub kind: DatasetKind,
    pub context_len: usize,
    /// Tokens allowed in every split (only the mixed task has any).
    #[serde(default)]
    pub shared_tokens: Vec<usize>,
    pub items: Vec<Item>,
}

/// Sequence/target pair as consumed by the models.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub tokens: Vec<usize>,
    pub target: usize,
}

impl LabeledDataset {
    pub fn new(task: impl Into<String>, vocabulary: Vocabulary, kind: DatasetKind, context_len: usize, items: Vec<Item>) -> Self {
        Self {
            format: DATASET_FORMAT.into(),
            version: DATASET_VERSION,
            task: task.into(),
            vocabulary,
            kind,
            context_len,
            shared_tokens: Vec::new(),
            items,
        }
    }

    /// 2 (or 4) for classification, the vocabulary size for prediction.
    pub fn output_size(&self) -> usize {
        match &self.kind {
            DatasetKind::Classification { classes } => classes.len(),
            DatasetKind::Prediction => self.vocabulary.len(),
        }
    }

    pub fn is_prediction(&self) -> bool {
        self.kind == DatasetKind::Prediction
    }

    pub fn items_in(&self, split: Split) -> impl Iterator<Item = &Item> {
        self.items.iter().filter(move |i| i.split == split)
    }

    pub fn examples(&self, split: Split) -> Vec<Example> {
        self.items_in(split)
            .map(|i| Example {
                tokens: i.tokens.clone(),
                target: i.target,
            })
            .collect()
    }

    pub fn count(&self, split: Split) -> usize {
        self.items_in(split).count()
    }

    /// Items per class label within a split.
    pub fn class_counts(&self, split: Split) -> Vec<usize> {
        let mut counts = vec![0; self.output_size()];
        for i in self.items_in(split) {
            counts[i.target] += 1;
        }
        counts
    }

    /// Tokens appearing in a split, including prediction targets.
    pub fn tokens_in(&self, split: Split) -> Vec<usize> {
        let mut seen = vec![false; self.vocabulary.len()];
        for i in self.items_in(split) {
            for &t in &i.tokens {
                seen[t] = true;
            }
            if self.is_prediction() {
                seen[i.target] = true;
            }
        }
        (0..seen.len()).filter(|&t| seen[t]).collect()
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ds: Self = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.into(),
            message: e.to_string(),
        })?;
        if ds.format != DATASET_FORMAT || ds.version != DATASET_VERSION {
            return Err(Error::Parse {
                path: path.into(),
                message: format!("unsupported dataset {} v{}", ds.format, ds.version),
            });
        }
        let k = ds.vocabulary.len();
        if let Some(bad) = ds.items.iter().find(|i| i.tokens.iter().any(|&t| t >= k) || i.target >= ds.output_size()) {
            return Err(Error::Parse {
                path: path.into(),
                message: format!("item {:?} outside vocabulary/classes", bad.tokens),
            });
        }
        Ok(ds)
    }
}

/// Spreads `total` over buckets as evenly as the caps allow. Earlier buckets
/// receive any remainder first.
pub fn water_fill(total: usize, caps: &[usize]) -> Result<Vec<usize>> {
    let available: usize = caps.iter().sum();
    if available < total {
        return Err(Error::Infeasible(format!(
            "need {total} items but only {available} available across {caps:?}"
        )));
    }
    let mut alloc = vec![0; caps.len()];
    let mut remaining = total;
    while remaining > 0 {
        let open: Vec<usize> = (0..caps.len()).filter(|&i| alloc[i] < caps[i]).collect();
        let share = remaining / open.len();
        if share == 0 {
            for &i in open.iter().take(remaining) {
                alloc[i] += 1;
            }
            break;
        }
        for &i in &open {
            let add = share.min(caps[i] - alloc[i]);
            alloc[i] += add;
            remaining -= add;
        }
    }
    Ok(alloc)
}

fn sample<T: Clone>(pool: &[T], n: usize, rng: &mut ChaCha8Rng) -> Vec<T> {
    let mut v = pool.to_vec();
    v.shuffle(rng);
    v.truncate(n);
    v
}

/// Positive pattern and the patterns pooled into the "other" class.
fn class_patterns(task: TaskId) -> (AbstractPattern, Vec<AbstractPattern>) {
    use AbstractPattern::*;
    match task {
        TaskId::AbaVsOther | TaskId::Shared => (Aba, vec![Aaa, Aab, Abb, Abc]),
        TaskId::AbbVsOther => (Abb, vec![Aaa, Aab, Aba, Abc]),
        TaskId::AbaVsAbb => (Aba, vec![Abb]),
        TaskId::AbcVsOther => (Abc, vec![Aaa, Aab, Aba, Abb]),
        _ => unreachable!("not a binary classification task"),
    }
}

/// Balanced two-class sample over one letter pool: returns (positive, other).
fn balanced_classes(task: TaskId, letters: &[usize], rng: &mut ChaCha8Rng) -> Result<(Vec<[usize; 3]>, Vec<[usize; 3]>)> {
    let (pos_pattern, neg_patterns) = class_patterns(task);
    let pos = enumerate_triples(letters, pos_pattern)?;
    let negs = neg_patterns
        .iter()
        .map(|&p| enumerate_triples(letters, p))
        .collect::<Result<Vec<_>>>()?;
    let caps: Vec<usize> = negs.iter().map(Vec::len).collect();
    let size = pos.len().min(caps.iter().sum());
    if size == 0 {
        return Err(Error::Infeasible(format!(
            "task {task}: {} positive and {caps:?} other items",
            pos.len()
        )));
    }
    let quotas = water_fill(size, &caps)?;
    let pos = sample(&pos, size, rng);
    let mut neg = Vec::with_capacity(size);
    for (pool, q) in negs.iter().zip(quotas) {
        neg.extend(sample(pool, q, rng));
    }
    neg.shuffle(rng);
    Ok((pos, neg))
}

fn split_letters(k: usize, train_count: usize, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut letters: Vec<usize> = (0..k).collect();
    letters.shuffle(rng);
    let held = letters.split_off(train_count);
    letters.sort_unstable();
    let mut held = held;
    held.sort_unstable();
    (letters, held)
}

/// Assigns the first `val_share` of `items` to validation, the rest to test.
fn push_held_out(out: &mut Vec<Item>, seqs: Vec<Vec<usize>>, target: usize, val_share: f64) {
    let n_val = (seqs.len() as f64 * val_share).floor() as usize;
    for (i, tokens) in seqs.into_iter().enumerate() {
        let split = if i < n_val { Split::Val } else { Split::Test };
        out.push(Item { tokens, target, split });
    }
}

fn push_all(out: &mut Vec<Item>, seqs: Vec<Vec<usize>>, target: usize, split: Split) {
    out.extend(seqs.into_iter().map(|tokens| Item { tokens, target, split }));
}

/// Builds any task from its spec.
pub fn build_task(spec: &TaskSpec) -> Result<LabeledDataset> {
    match spec.task {
        TaskId::PredictAba => build_prediction_task(AbstractPattern::Aba, spec),
        TaskId::PredictAbb => build_prediction_task(AbstractPattern::Abb, spec),
        TaskId::Mixed4 => build_mixed_task(spec),
        _ => build_classification_task(spec),
    }
}

/// Two-class task with class 0 the named pattern and class 1 the rest.
pub fn build_classification_task(spec: &TaskSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let task = spec.task;
    if task.is_prediction() || task == TaskId::Mixed4 {
        return Err(Error::Config(format!("{task} is not a two-class task")));
    }
    let vocab = Vocabulary::letters(spec.vocab_size)?;
    let (pos_pattern, _) = class_patterns(task);
    let other = if task == TaskId::AbaVsAbb { "ABB" } else { "other" };
    let kind = DatasetKind::Classification {
        classes: vec![pos_pattern.to_string(), other.to_string()],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut items = Vec::new();

    if task == TaskId::Shared {
        build_shared(spec, &mut rng, &mut items)?;
    } else {
        let k = spec.vocab_size;
        let train_count = (k as f64 * spec.fractions[0]).round() as usize;
        let (train_letters, held_letters) = split_letters(k, train_count, &mut rng);
        let (pos, neg) = balanced_classes(task, &train_letters, &mut rng)?;
        push_all(&mut items, pos.iter().map(|t| t.to_vec()).collect(), 0, Split::Train);
        push_all(&mut items, neg.iter().map(|t| t.to_vec()).collect(), 1, Split::Train);
        let (pos, neg) = balanced_classes(task, &held_letters, &mut rng)?;
        push_held_out(&mut items, pos.iter().map(|t| t.to_vec()).collect(), 0, spec.val_share());
        push_held_out(&mut items, neg.iter().map(|t| t.to_vec()).collect(), 1, spec.val_share());
    }
    Ok(LabeledDataset::new(task.as_str(), vocab, kind, 3, items))
}

/// ABA vs other on the full vocabulary. The two orientations of each letter
/// pair (`ded` / `ede`) always land in different splits, and no sequence
/// appears in more than one split.
fn build_shared(spec: &TaskSpec, rng: &mut ChaCha8Rng, items: &mut Vec<Item>) -> Result<()> {
    let k = spec.vocab_size;
    let letters: Vec<usize> = (0..k).collect();
    if k < 3 {
        return Err(Error::VocabularyTooSmall {
            pattern: "ABC".into(),
            needed: 3,
            got: k,
        });
    }
    let mut train_pos = Vec::new();
    let mut held_pos = Vec::new();
    for x in 0..k {
        for y in x + 1..k {
            let (a, b) = (vec![x, y, x], vec![y, x, y]);
            if rand::Rng::gen_bool(rng, 0.5) {
                train_pos.push(a);
                held_pos.push(b);
            } else {
                train_pos.push(b);
                held_pos.push(a);
            }
        }
    }
    train_pos.shuffle(rng);
    held_pos.shuffle(rng);

    let (_, neg_patterns) = class_patterns(TaskId::Shared);
    let negs = neg_patterns
        .iter()
        .map(|&p| enumerate_triples(&letters, p))
        .collect::<Result<Vec<_>>>()?;
    let total = train_pos.len() + held_pos.len();
    let quotas = water_fill(total, &negs.iter().map(Vec::len).collect::<Vec<_>>())?;
    let mut neg: Vec<Vec<usize>> = Vec::with_capacity(total);
    for (pool, q) in negs.iter().zip(quotas) {
        neg.extend(sample(pool, q, rng).into_iter().map(|t| t.to_vec()));
    }
    neg.shuffle(rng);
    let held_neg = neg.split_off(train_pos.len());

    push_all(items, train_pos, 0, Split::Train);
    push_all(items, neg, 1, Split::Train);
    push_held_out(items, held_pos, 0, spec.val_share());
    push_held_out(items, held_neg, 1, spec.val_share());
    Ok(())
}

/// Next-token prediction on one pattern: context = first two tokens of each
/// triple, target = the third.
pub fn build_prediction_task(pattern: AbstractPattern, spec: &TaskSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    if !matches!(pattern, AbstractPattern::Aba | AbstractPattern::Abb) {
        return Err(Error::Config(format!("prediction is defined for ABA and ABB, not {pattern}")));
    }
    let task = if pattern == AbstractPattern::Aba {
        TaskId::PredictAba
    } else {
        TaskId::PredictAbb
    };
    let k = spec.vocab_size;
    let vocab = Vocabulary::letters(k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let train_count = (k as f64 * spec.fractions[0]).round() as usize;
    let (train_letters, held_letters) = split_letters(k, train_count, &mut rng);
    let mut items = Vec::new();
    for t in sample(&enumerate_triples(&train_letters, pattern)?, usize::MAX, &mut rng) {
        items.push(Item {
            tokens: t[..2].to_vec(),
            target: t[2],
            split: Split::Train,
        });
    }
    let held = sample(&enumerate_triples(&held_letters, pattern)?, usize::MAX, &mut rng);
    let n_val = (held.len() as f64 * spec.val_share()).floor() as usize;
    for (i, t) in held.into_iter().enumerate() {
        items.push(Item {
            tokens: t[..2].to_vec(),
            target: t[2],
            split: if i < n_val { Split::Val } else { Split::Test },
        });
    }
    Ok(LabeledDataset::new(task.as_str(), vocab, DatasetKind::Prediction, 2, items))
}

/// Class index of a mixed-task triple, or `None` when the first token is
/// neither `a` nor `b` or the triple is neither ABA nor ABB.
pub fn mixed_class(triple: [usize; 3]) -> Option<usize> {
    let concrete = match triple[0] {
        0 => 0,
        1 => 1,
        _ => return None,
    };
    let abstract_ = match classify_abstract(triple) {
        AbstractPattern::Aba => 0,
        AbstractPattern::Abb => 1,
        _ => return None,
    };
    Some(concrete * 2 + abstract_)
}

/// Four classes {ABA,a**}, {ABB,a**}, {ABA,b**}, {ABB,b**}. Letters `a` and
/// `b` are shared by every split; the middle token comes from the split's
/// own letters or the other shared letter.
pub fn build_mixed_task(spec: &TaskSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let k = spec.vocab_size;
    if k < 6 {
        return Err(Error::Config(format!("mixed task needs at least 6 letters, got {k}")));
    }
    let vocab = Vocabulary::letters(k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut others: Vec<usize> = (2..k).collect();
    others.shuffle(&mut rng);
    // 18 letters: a, b, 10 training letters and 6 held-out letters
    let held_count = ((k - 2) * 3 + 4) / 8;
    let held_letters = others.split_off(others.len() - held_count);
    let train_letters = others;

    let per_class_held = held_letters.len();
    let ratio = spec.fractions[0] / (spec.fractions[1] + spec.fractions[2]);
    let per_class_train = ((per_class_held as f64 * ratio).round() as usize).min(train_letters.len());
    if per_class_train == 0 {
        return Err(Error::Infeasible(format!(
            "mixed task: {} training letters, {} held-out letters",
            train_letters.len(),
            held_letters.len()
        )));
    }

    let classes = vec!["ABA,a**".into(), "ABB,a**".into(), "ABA,b**".into(), "ABB,b**".into()];
    let mut items = Vec::new();
    for first in [0usize, 1] {
        // the middle token may be the other shared letter too
        let pool = |own: &[usize]| own.iter().copied().chain([1 - first]).collect::<Vec<_>>();
        let (train_pool, held_pool) = (pool(&train_letters), pool(&held_letters));
        for abb in [false, true] {
            let make = |mid: usize| if abb { [first, mid, mid] } else { [first, mid, first] };
            let label = first * 2 + usize::from(abb);
            let train: Vec<Vec<usize>> = sample(&train_pool, per_class_train, &mut rng)
                .into_iter()
                .map(|m| make(m).to_vec())
                .collect();
            push_all(&mut items, train, label, Split::Train);
            let held: Vec<Vec<usize>> = sample(&held_pool, per_class_held, &mut rng)
                .into_iter()
                .map(|m| make(m).to_vec())
                .collect();
            push_held_out(&mut items, held, label, spec.val_share());
        }
    }
    let mut ds = LabeledDataset::new(TaskId::Mixed4.as_str(), vocab, DatasetKind::Classification { classes }, 3, items);
    ds.shared_tokens = vec![0, 1];
    Ok(ds)
}
