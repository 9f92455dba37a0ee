//! `vqakit`: build question-answering datasets from annotated captions.
//!
//! Exit codes: 0 ok, 1 usage, 2 data error, 3 internal error. Progress is
//! logged to stderr as one JSON object per line.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use vqakit::assemble::BalancePolicy;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "vqakit", version, about = "Build visual question answering datasets from annotated image captions")]
struct Cli {
    /// JSON file with default settings; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Only log warnings and errors.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a corpus file against the schema and its invariants.
    Validate {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Split caption sentences into simple clauses.
    Simplify(IoArgs),
    /// Generate yes/no and open-ended questions.
    Generate(GenerateArgs),
    /// Clean, deduplicate and balance generated pairs.
    Assemble(AssembleArgs),
    /// Partition images into train/val/test.
    Split(SplitArgs),
    /// Corpus statistics.
    Stats(StatsArgs),
    /// Score predicted answers.
    Eval(EvalArgs),
    /// Serve the review UI and API.
    Review(ReviewArgs),
    /// Write reviewed pairs to a new corpus file.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
struct IoArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[command(flatten)]
    io: IoArgs,
    #[arg(long)]
    seed: Option<u64>,
    /// Rule catalog JSON; defaults to the built-in catalog.
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Skip "no" variants of yes/no questions.
    #[arg(long)]
    no_negatives: bool,
    /// Only generate yes/no questions.
    #[arg(long)]
    no_open: bool,
    /// Also write one JSON line per question with its rule trace.
    #[arg(long)]
    traces: Option<PathBuf>,
}

fn parse_policy(s: &str) -> Result<BalancePolicy, String> {
    match s {
        "subsample" => Ok(BalancePolicy::Subsample),
        "augment" => Ok(BalancePolicy::Augment),
        other => Err(format!("unknown policy {other} (subsample, augment)")),
    }
}

#[derive(Debug, Args)]
struct AssembleArgs {
    #[command(flatten)]
    io: IoArgs,
    /// Even out yes and no answers; off unless set here or in the config.
    #[arg(long)]
    balance: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Largest allowed difference between yes and no counts.
    #[arg(long)]
    tolerance: Option<usize>,
    #[arg(long, value_parser = parse_policy)]
    policy: Option<BalancePolicy>,
    /// Corpus whose yes/no pairs may be added under the augment policy.
    #[arg(long)]
    spares: Option<PathBuf>,
    #[arg(long)]
    min_question_words: Option<usize>,
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Split file: image ids per part.
    #[arg(long)]
    out: PathBuf,
    /// Also write the corpus with the split embedded.
    #[arg(long)]
    corpus_out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    ratios: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Plain-text table; printed to stdout when omitted.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Answer frequency table as CSV.
    #[arg(long)]
    answers_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Corpus file, or a JSON list of QA pairs.
    #[arg(long)]
    gold: PathBuf,
    /// JSON list of {qa_id, answer}.
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Plain-text report; printed to stdout when omitted.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Only score pairs whose image is in this part of the corpus split.
    #[arg(long)]
    split: Option<String>,
}

#[derive(Debug, Args)]
struct ReviewArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    journal: Option<PathBuf>,
    /// Address to bind; loopback unless set.
    #[arg(long)]
    host: Option<String>,
    #[arg(long)]
    port: Option<u16>,
    /// Directory relative image URIs resolve against.
    #[arg(long)]
    images: Option<PathBuf>,
    /// Built review UI to serve at `/`.
    #[arg(long)]
    static_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[command(flatten)]
    io: IoArgs,
    #[arg(long)]
    journal: Option<PathBuf>,
    /// Statuses to keep (default: accepted,edited).
    #[arg(long, value_delimiter = ',')]
    include: Option<Vec<String>>,
}

/// Line-delimited JSON logger on stderr.
pub struct Logger {
    quiet: bool,
}

impl Logger {
    pub fn info(&self, event: &str, fields: Value) {
        if !self.quiet {
            self.emit("info", event, fields);
        }
    }

    pub fn warn(&self, event: &str, fields: Value) {
        self.emit("warn", event, fields);
    }

    fn emit(&self, level: &str, event: &str, fields: Value) {
        let mut line = json!({ "level": level, "event": event });
        if let (Some(obj), Value::Object(extra)) = (line.as_object_mut(), fields) {
            obj.extend(extra);
        }
        eprintln!("{line}");
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let log = Logger { quiet: cli.quiet };
    let mut written = Vec::new();
    let result = config::RunConfig::load(cli.config.as_deref())
        .and_then(|cfg| commands::run(cli.command, &cfg, &log, &mut written));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            for path in &written {
                let _ = std::fs::remove_file(path);
            }
            log.emit("error", "failed", json!({ "message": e.to_string(), "exit_code": e.code() }));
            ExitCode::from(e.code())
        }
    }
}
