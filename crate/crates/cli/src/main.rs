use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Shot intent classification from batter pose time series.
#[derive(Debug, Parser)]
#[command(name = "shotintent", version)]
pub struct Cli {
    /// Master seed. Falls back to the config file, then SHOTINTENT_SEED, then 0.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Concurrent cross-validation splits; 1 runs sequentially, 0 uses every core.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// JSON config file with flat dotted keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override one config key, e.g. `--set preprocess.cap=30`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-folder High/Low clip counts.
    Inspect(InspectArgs),
    /// Fit one model on every folder except the validation folder and save it.
    Train(TrainArgs),
    /// Leave-pair-out cross-validation, or scoring of a saved model.
    Evaluate(EvaluateArgs),
    /// Cross-validation repeated for several clip-length caps.
    Ablate(AblateArgs),
    /// Cut a detection stream into shot clips.
    Segment(SegmentArgs),
    /// Compare predicted shot energy with match statistics.
    CaseStudy(CaseStudyArgs),
    /// Wagon-wheel SVGs for one set of labels.
    Plot(PlotArgs),
    /// Write a seeded synthetic dataset, detection stream or statistics file.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    /// Dataset root with `<folder>/{high,low}/*.csv`.
    pub data: Option<PathBuf>,
    /// Also write `dataset.csv` here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModelArg {
    #[value(name = "motion-range")]
    MotionRange,
    Cnn1d,
    Lstm,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "cnn1d")]
    pub model: ModelArg,
    /// Early-stopping folder; required for the networks.
    #[arg(long)]
    pub val: Option<String>,
    /// Model container path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "cnn1d")]
    pub model: ModelArg,
    /// Score this saved model on every clip instead of cross-validating.
    #[arg(long, conflicts_with = "model")]
    pub model_file: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "cnn1d")]
    pub model: ModelArg,
    /// Comma-separated clip-length caps.
    #[arg(long, value_delimiter = ',', default_values_t = [3, 10, 20, 30, 40, 50, 60, 70, 80])]
    pub lengths: Vec<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// JSON-lines detection stream.
    #[arg(long)]
    pub detections: Option<PathBuf>,
    /// Prefix for the emitted clip ids.
    #[arg(long, default_value = "match")]
    pub match_id: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CaseStudyArgs {
    /// Ball-by-ball statistics CSV.
    #[arg(long)]
    pub records: Option<PathBuf>,
    /// Model predictions CSV.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Reference labels in the predictions format; defaults to the runs heuristic.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Row name for the model in the deviation report.
    #[arg(long, default_value = "model")]
    pub name: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub records: Option<PathBuf>,
    /// Label shots with these predictions instead of the runs heuristic.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long, default_value = "shots")]
    pub title: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SynthKind {
    /// Classes differ only in swing amplitude.
    Amplitude,
    /// Static except inside a fixed frame window.
    Planted,
    /// Detection stream with planted shots.
    Stream,
    /// Ball-by-ball statistics aligned with the synthetic clip ids.
    Records,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(value_enum)]
    pub kind: SynthKind,
    #[arg(long)]
    pub folders: Option<usize>,
    #[arg(long)]
    pub clips_per_class: Option<usize>,
    /// Planted shots in a stream.
    #[arg(long, default_value_t = 3)]
    pub shots: usize,
    /// Dataset directory, or file for `stream` and `records`.
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let usage = e.downcast_ref::<commands::UsageError>().is_some();
            eprintln!("error: {}", one_line(&e));
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}

/// The error chain on one line, skipping causes whose text the message
/// already carries.
fn one_line(e: &anyhow::Error) -> String {
    let mut msg = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !msg.contains(&text) {
            if !msg.is_empty() {
                msg.push_str(": ");
            }
            msg.push_str(&text);
        }
    }
    msg.replace('\n', " ")
}
