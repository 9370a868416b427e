use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "gradecast", version, about = "Predict student grades from questionnaire responses")]
pub struct Cli {
    /// Questionnaire schema JSON replacing the builtin one.
    #[arg(long, global = true, env = "GRADECAST_SCHEMA")]
    pub schema: Option<PathBuf>,

    /// Indent JSON output; human-readable text for `significance`.
    #[arg(long, global = true)]
    pub pretty: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model on a CSV and write it as JSON.
    Train(TrainArgs),
    /// Evaluate a model on a CSV.
    Evaluate(EvaluateArgs),
    /// Predict one respondent.
    Predict(PredictArgs),
    /// Print the questionnaire schema.
    Schema(SchemaArgs),
    /// Print a model as JSON.
    ExportModel(ExportArgs),
    /// Split a linear model's features by coefficient sign.
    Significance(SignificanceArgs),
    /// Write a synthetic questionnaire CSV.
    Synth(SynthArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Ols,
    M5p,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GranularityArg {
    Variable,
    Factor,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long, value_enum, default_value = "m5p")]
    pub algo: Algo,
    /// Aggregate a variable CSV to factors before training.
    #[arg(long, value_enum)]
    pub granularity: Option<GranularityArg>,
    #[arg(long, default_value_t = 4)]
    pub min_split: usize,
    #[arg(long, default_value_t = 15.0)]
    pub smoothing_k: f64,
    #[arg(long)]
    pub no_prune: bool,
    /// Train on this share of the rows (shuffled by `--seed`).
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Where to write the held-out rows when `--train-fraction` is set.
    #[arg(long)]
    pub test_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Builtin model id or model file.
    #[arg(long)]
    pub model: String,
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long, value_enum)]
    pub granularity: Option<GranularityArg>,
    /// Also write the report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report `test_time_s` as 0 so repeated runs write identical reports.
    #[arg(long)]
    pub omit_timings: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Builtin model id or model file.
    #[arg(long)]
    pub model: String,
    /// Responses as a file path, `-` for stdin, or inline JSON.
    #[arg(long)]
    pub responses: String,
}

#[derive(Debug, Args)]
pub struct SchemaArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Builtin model id or model file.
    #[arg(long)]
    pub model: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SignificanceArgs {
    /// Builtin model id or model file.
    #[arg(long)]
    pub model: String,
    /// Leaf model number (1-based, left to right) for tree models.
    #[arg(long)]
    pub leaf: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.25)]
    pub noise: f64,
    #[arg(long, value_enum, default_value = "variable")]
    pub granularity: GranularityArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Extra model files, registered as `custom:<file stem>`.
    #[arg(long = "model")]
    pub models: Vec<PathBuf>,
    /// Directory of static UI files served at `/`.
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
}
