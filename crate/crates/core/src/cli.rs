//! Command-line front end. `run_cli` returns the process exit code:
//! 0 success, 1 run failure, 2 usage error.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::corpus::{ingest_symbols, ingest_text, windowize, CorpusMode, RepetitionCorpus};
use crate::error::Error;
use crate::gradcheck;
use crate::harness::{
    corpus_config, fast_config, fit_corpus, grid_search, repetition_experiment, reproduce_table, write_report, Grid,
    RepetitionOptions, ReproduceOptions,
};
use crate::model::{evaluate, train, Architecture, Metric, Model, ModelConfig, RbpVariant};
use crate::patterns::{build_task, LabeledDataset, Split, TaskId, TaskSpec};

#[derive(Debug, Parser)]
#[command(name = "rbp", version, about = "Identity-rule experiments with relation-based pattern networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a task dataset as JSON
    Gen(GenArgs),
    /// Train one model and save a checkpoint
    Train(TrainArgs),
    /// Score a checkpoint on a dataset split
    Eval(EvalArgs),
    /// Re-run a results table and write a CSV report
    Reproduce(ReproduceArgs),
    /// Next-token prediction on a text or symbol corpus
    CorpusPredict(CorpusArgs),
    /// Finite-difference check of every model graph
    Gradcheck,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    task: TaskId,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Vocabulary size (default depends on the task)
    #[arg(long)]
    vocab: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long, required_unless_present = "data", conflicts_with = "data")]
    task: Option<TaskId>,
    /// Dataset written by `gen`
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value = "ffnn")]
    model: Architecture,
    #[arg(long, default_value = "none")]
    rbp: RbpVariant,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use the pinned configuration instead of a grid search
    #[arg(long)]
    fast: bool,
    /// TOML file overriding model settings or the grid
    #[arg(long)]
    config: Option<PathBuf>,
    /// Checkpoint path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long, required_unless_present = "data", conflicts_with = "data")]
    task: Option<TaskId>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Seed of the generated dataset when `--task` is given
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    split: SplitArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Val,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Val => Split::Val,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Debug, Args)]
struct ReproduceArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=6))]
    table: u8,
    #[arg(long, default_value_t = 10)]
    sims: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    fast: bool,
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV path; a JSON twin is written alongside
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CorpusArgs {
    /// Corpus file; omit to run the synthetic repetition comparison
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModeArg::Text)]
    mode: ModeArg,
    #[arg(long, default_value = "lstm")]
    model: Architecture,
    #[arg(long, default_value = "none")]
    rbp: RbpVariant,
    #[arg(long, default_value_t = 5)]
    context: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of seeds for the synthetic comparison
    #[arg(long, default_value_t = 5)]
    sims: usize,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Checkpoint path (corpus file) or JSON results (synthetic run)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Text,
    Symbols,
}

/// Contents of a `--config` file. Every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: Option<Grid>,
    pub folds: Option<usize>,
    pub epochs: Option<usize>,
    pub model: ModelOverrides,
    pub repetition: Option<RepetitionCorpus>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelOverrides {
    pub hidden_size: Option<usize>,
    pub layers: Option<usize>,
    pub learning_rate: Option<f64>,
    pub dropout: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub teacher_forcing: Option<bool>,
}

impl ModelOverrides {
    fn apply(&self, cfg: &mut ModelConfig) {
        if let Some(v) = self.hidden_size {
            cfg.hidden_size = v;
        }
        if let Some(v) = self.layers {
            cfg.layers = v;
        }
        if let Some(v) = self.learning_rate {
            cfg.learning_rate = v;
        }
        if let Some(v) = self.dropout {
            cfg.dropout = v;
        }
        if let Some(v) = self.epochs {
            cfg.epochs = v;
        }
        if self.batch_size.is_some() {
            cfg.batch_size = self.batch_size;
        }
        if let Some(v) = self.teacher_forcing {
            cfg.teacher_forcing = v;
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> crate::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.into(),
            message: e.to_string(),
        })
    }
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => Failure::Usage(m),
            other => Failure::Run(other),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn run_cli<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Train(a) => train_cmd(a),
        Command::Eval(a) => eval(a),
        Command::Reproduce(a) => reproduce(a),
        Command::CorpusPredict(a) => corpus_predict(a),
        Command::Gradcheck => gradcheck_cmd(),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            eprintln!("run with --help for usage");
            2
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn print_resolved(seed: u64, what: &impl serde::Serialize) -> crate::Result<()> {
    println!("seed: {seed}");
    println!(
        "config: {}",
        serde_json::to_string(what).map_err(|e| Error::Format(e.to_string()))?
    );
    Ok(())
}

fn load_config(path: &Option<PathBuf>) -> crate::Result<RunConfig> {
    path.as_deref().map(RunConfig::load).transpose().map(Option::unwrap_or_default)
}

fn gen(a: GenArgs) -> Outcome {
    let mut spec = TaskSpec::new(a.task, a.seed);
    if let Some(k) = a.vocab {
        spec.vocab_size = k;
    }
    print_resolved(a.seed, &spec)?;
    let data = build_task(&spec)?;
    data.write_json(&a.out)?;
    println!(
        "wrote {} ({} train, {} val, {} test)",
        a.out.display(),
        data.count(Split::Train),
        data.count(Split::Val),
        data.count(Split::Test)
    );
    Ok(())
}

fn load_dataset(task: Option<TaskId>, data: &Option<PathBuf>, seed: u64) -> crate::Result<LabeledDataset> {
    match (task, data) {
        (_, Some(p)) => LabeledDataset::read_json(p),
        (Some(t), None) => build_task(&TaskSpec::new(t, seed)),
        (None, None) => Err(Error::Config("one of --task or --data is required".into())),
    }
}

fn train_cmd(a: TrainArgs) -> Outcome {
    let run = load_config(&a.config)?;
    let data = load_dataset(a.task, &a.data, a.seed)?;
    let task = a.task.or_else(|| data.task.parse().ok());
    let mut cfg = match task {
        Some(t) => fast_config(t, a.model, a.rbp),
        None => ModelConfig {
            epochs: 100,
            learning_rate: 0.2,
            hidden_size: 10,
            dropout: 0.4,
            ..ModelConfig::classifier(a.model, a.rbp, data.vocabulary.len())
        },
    };
    cfg.vocab_size = data.vocabulary.len();
    cfg.context_len = data.context_len;
    cfg.output_size = data.output_size();
    cfg.seed = a.seed;
    if !a.fast {
        cfg.epochs = run.epochs.unwrap_or(10);
        let grid = run.grid.clone().unwrap_or_default();
        let metric = if data.is_prediction() { Metric::CrossEntropy } else { Metric::Accuracy };
        let (best, _) = grid_search(&cfg, &grid, &data.examples(Split::Train), run.folds.unwrap_or(4), metric)?;
        cfg = best;
    }
    run.model.apply(&mut cfg);
    cfg.validate()?;
    print_resolved(a.seed, &cfg)?;
    let trained = train(cfg, &data.examples(Split::Train))?;
    let last = trained.history.last().copied();
    trained.model.save(&a.out)?;
    if let Some(s) = last {
        println!("final loss {:.4}, train accuracy {:.3}", s.loss, s.train_accuracy);
    }
    if data.count(Split::Test) > 0 {
        let acc = evaluate(&trained.model, &data.examples(Split::Test), Metric::Accuracy)?;
        println!("test accuracy {acc:.3}");
    }
    println!("wrote {}", a.out.display());
    Ok(())
}

fn eval(a: EvalArgs) -> Outcome {
    let model = Model::load(&a.checkpoint)?;
    let data = load_dataset(a.task, &a.data, a.seed)?;
    print_resolved(a.seed, &model.config)?;
    let split = Split::from(a.split);
    let examples = data.examples(split);
    let acc = evaluate(&model, &examples, Metric::Accuracy)?;
    let ce = evaluate(&model, &examples, Metric::CrossEntropy)?;
    println!("{:?} items {}: accuracy {acc:.4}, cross-entropy {ce:.4}", split, examples.len());
    Ok(())
}

fn reproduce(a: ReproduceArgs) -> Outcome {
    let run = load_config(&a.config)?;
    let defaults = ReproduceOptions::default();
    let opts = ReproduceOptions {
        sims: a.sims,
        seed: a.seed,
        fast: a.fast,
        grid: run.grid.unwrap_or(defaults.grid),
        folds: run.folds.unwrap_or(defaults.folds),
        epochs: run.epochs.unwrap_or(defaults.epochs),
    };
    print_resolved(a.seed, &opts)?;
    let report = reproduce_table(a.table, &opts)?;
    print!("{}", report.render());
    write_report(&report, &a.out)?;
    let passed = report.cells.iter().filter(|c| c.pass).count();
    println!("{passed}/{} cells within band; wrote {}", report.cells.len(), a.out.display());
    Ok(())
}

fn corpus_predict(a: CorpusArgs) -> Outcome {
    let run = load_config(&a.config)?;
    let Some(input) = &a.input else {
        let opts = RepetitionOptions {
            corpus: RepetitionCorpus {
                context: a.context,
                ..run.repetition.unwrap_or_default()
            },
            seeds: a.sims,
            base_seed: a.seed,
            teacher_forcing: run.model.teacher_forcing.unwrap_or(true),
            ..RepetitionOptions::default()
        };
        print_resolved(a.seed, &opts)?;
        let rows = repetition_experiment(&opts)?;
        println!("{:<5} {:>8} {:>8} {:>8}", "model", "none", "rbp2", "rbp3");
        for r in &rows {
            println!("{:<5} {:>8.4} {:>8.4} {:>8.4}", r.architecture.as_str(), r.none, r.rbp2, r.rbp3);
        }
        if let Some(out) = &a.out {
            let text = serde_json::to_string_pretty(&rows).map_err(|e| Error::Format(e.to_string()))?;
            std::fs::write(out, text + "\n").map_err(|e| Error::io(out, e))?;
        }
        return Ok(());
    };
    let corpus = match a.mode {
        ModeArg::Text => ingest_text(input)?,
        ModeArg::Symbols => ingest_symbols(input)?,
    };
    let data = windowize(&corpus, a.context, [0.5, 0.25, 0.25])?;
    let mut cfg = corpus_config(a.model, a.rbp, corpus.vocabulary.len(), a.context);
    cfg.seed = a.seed;
    run.model.apply(&mut cfg);
    cfg.validate()?;
    print_resolved(a.seed, &cfg)?;
    let mode = match corpus.mode {
        CorpusMode::Text => "characters",
        CorpusMode::Symbols => "symbols",
    };
    println!(
        "{} {mode}, {} distinct, {} windows",
        corpus.token_count(),
        corpus.vocabulary.len(),
        data.items.len()
    );
    let fit = fit_corpus(&data, cfg)?;
    println!(
        "test cross-entropy {:.4} nats, accuracy {:.3}",
        fit.test_cross_entropy, fit.test_accuracy
    );
    if let Some(out) = &a.out {
        fit.trained.model.save(out)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn gradcheck_cmd() -> Outcome {
    println!("seed: 0");
    println!("config: {{\"tolerance\":{}}}", gradcheck::GRADCHECK_TOLERANCE);
    let outcomes = gradcheck::run_all();
    for o in &outcomes {
        match (o.error, &o.message) {
            (Some(e), _) => println!("{:<16} {e:.2e} {}", o.name, if o.pass { "ok" } else { "FAIL" }),
            (None, m) => println!("{:<16} FAIL {}", o.name, m.as_deref().unwrap_or("")),
        }
    }
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    if failed > 0 {
        return Err(Failure::Run(Error::Input(format!("{failed} gradient check(s) failed"))));
    }
    println!("all {} graphs pass", outcomes.len());
    Ok(())
}
