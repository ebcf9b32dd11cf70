use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use intent_core::corpus::{CorpusFormat, Delimiter};
use intent_core::experiments::NgramInterpretation;
use intent_core::ErrorClass;

mod commands;

/// Intent detection experiments: corpus statistics, training, prediction,
/// evaluation and grid search.
#[derive(Debug, Parser)]
#[command(name = "intent", version, propagate_version = true)]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sentence count, mean words and mean length per file.
    Stats(StatsArgs),
    /// Fit a model from a preset or config file and write a model bundle.
    Train(TrainArgs),
    /// Label every row of a file with a saved model.
    Predict(PredictArgs),
    /// Score a saved model on a labelled file.
    Evaluate(EvaluateArgs),
    /// Run a grid search and print the ranked results.
    Grid(GridArgs),
    /// List the built-in presets, or print one as a config file.
    Presets(PresetsArgs),
}

#[derive(Debug, Clone, Args)]
struct FormatArgs {
    /// Field delimiter of input files.
    #[arg(long, value_name = "tab|comma")]
    delim: Option<Delimiter>,
    /// Column holding the query text.
    #[arg(long, value_name = "NAME")]
    text_col: Option<String>,
    /// Column holding the intent label.
    #[arg(long, value_name = "NAME")]
    label_col: Option<String>,
    #[arg(long, value_name = "NAME")]
    id_col: Option<String>,
    #[arg(long, value_name = "NAME")]
    dialect_col: Option<String>,
    /// Column naming each row's split (train, dev, test).
    #[arg(long, value_name = "NAME")]
    split_col: Option<String>,
}

impl FormatArgs {
    fn apply(&self, mut base: CorpusFormat) -> CorpusFormat {
        if let Some(d) = self.delim {
            base.delimiter = d;
        }
        if let Some(c) = &self.text_col {
            base.text_col = c.clone();
        }
        if let Some(c) = &self.label_col {
            base.label_col = Some(c.clone());
        }
        if let Some(c) = &self.id_col {
            base.id_col = Some(c.clone());
        }
        if let Some(c) = &self.dialect_col {
            base.dialect_col = Some(c.clone());
        }
        if let Some(c) = &self.split_col {
            base.split_col = Some(c.clone());
        }
        base
    }
}

#[derive(Debug, Clone, Args)]
struct DataArgs {
    /// Training file.
    #[arg(long, value_name = "FILE")]
    train: Option<PathBuf>,
    /// Development file.
    #[arg(long, value_name = "FILE")]
    dev: Option<PathBuf>,
    /// One file holding every split, selected through --split-col.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["train", "dev"])]
    data: Option<PathBuf>,
    /// Sentence-embedding file (`#dim=D` header, id<TAB>values); repeatable.
    #[arg(long, value_name = "FILE")]
    embeddings: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// Input file; repeat for several files. A total row is added when more
    /// than one file (or split) is listed.
    #[arg(long, value_name = "FILE", required = true)]
    data: Vec<PathBuf>,
    /// Report each split of a file separately (requires --split-col).
    #[arg(long)]
    by_split: bool,
    /// Print JSON instead of a table.
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    format: FormatArgs,
}

#[derive(Debug, Args)]
struct ModelSource {
    /// Built-in experiment preset (see `intent presets`).
    #[arg(
        long,
        value_name = "NAME",
        conflicts_with = "config",
        required_unless_present = "config"
    )]
    preset: Option<String>,
    /// Experiment config file (JSON).
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// How an n-gram order k is read: orders 1..=k or exactly k.
    #[arg(long, value_name = "range-from-1|exact-n")]
    ngram_mode: Option<NgramInterpretation>,
    /// L2-normalize embedding vectors (embedding presets only).
    #[arg(long)]
    normalize_embeddings: bool,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    source: ModelSource,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    format: FormatArgs,
    /// Where to write the model bundle.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Also write the dev-set report as JSON.
    #[arg(long, value_name = "FILE")]
    report_json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    /// File to label; only the text (and id) columns are read.
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Number of highest-scoring labels to print per row.
    #[arg(long, default_value_t = 3, value_name = "K")]
    top_k: usize,
    /// Write predictions here instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    embeddings: Vec<PathBuf>,
    #[command(flatten)]
    format: FormatArgs,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    /// Labelled file to score.
    #[arg(long, value_name = "FILE")]
    data: PathBuf,
    #[arg(long, value_name = "FILE")]
    embeddings: Vec<PathBuf>,
    #[arg(long, value_name = "FILE")]
    report_json: Option<PathBuf>,
    #[command(flatten)]
    format: FormatArgs,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Grid spec file (JSON).
    #[arg(long, value_name = "FILE")]
    grid: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    format: FormatArgs,
    /// Append-only results file (JSON lines); finished rows are skipped on rerun.
    #[arg(long, value_name = "FILE")]
    results: Option<PathBuf>,
    /// Number of ranked rows to print.
    #[arg(long, default_value_t = 10)]
    top: usize,
}

#[derive(Debug, Args)]
struct PresetsArgs {
    /// Print this preset as a config file.
    #[arg(long, value_name = "NAME")]
    show: Option<String>,
    #[arg(long, value_name = "range-from-1|exact-n")]
    ngram_mode: Option<NgramInterpretation>,
}

/// A mistake in how the program was invoked.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<intent_core::Error>() {
            return match e.class() {
                ErrorClass::Usage => 1,
                ErrorClass::Data => 2,
                ErrorClass::Numeric => 3,
            };
        }
    }
    2
}

/// The error chain joined with ": ", skipping causes a message already ends with.
fn render(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if out.ends_with(&text) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&text);
    }
    out
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let result = match cli.command {
        Command::Stats(a) => commands::stats(a),
        Command::Train(a) => commands::train(a),
        Command::Predict(a) => commands::predict(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Grid(a) => commands::grid(a),
        Command::Presets(a) => commands::presets(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", render(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
