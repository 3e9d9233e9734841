//! `protest-frames`: classify, calibrate and analyse protest-video score
//! streams from the command line.
//!
//! Exit status is 0 on success, 1 for bad input (unreadable or malformed
//! files, invalid arguments) and 2 when an internal consistency check fails.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "protest-frames", version, about)]
struct Cli {
    /// Rule configuration (TOML). Defaults to the built-in parameters.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Label every video in one or more score-stream files.
    Classify(ClassifyArgs),
    /// Grid-search rule parameters against hand-coded labels.
    Calibrate(CalibrateArgs),
    /// Frequency, mean-comparison and contingency tables for a labeled corpus.
    Stats(StatsArgs),
    /// Recompute published tables from their summary statistics and counts.
    ReplicateTables(ReplicateArgs),
    /// Cut videos into one image per second.
    SampleFrames(SampleArgs),
    /// Intercoder agreement between two label files.
    Kappa(KappaArgs),
    /// Draw a coding sample in which every element is represented.
    Stratify(StratifyArgs),
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    /// Score-stream files (JSON lines).
    #[arg(required = true)]
    scores: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    /// Hand-coded labels (JSON lines).
    #[arg(long)]
    labeled: PathBuf,
    /// Score-stream files covering every labeled video.
    #[arg(long, required = true, num_args = 1..)]
    scores: Vec<PathBuf>,
    /// Parameter grid (TOML). Defaults to the built-in grid.
    #[arg(long)]
    grid: Option<PathBuf>,
    /// Held-out labels to report validation accuracy on.
    #[arg(long, conflicts_with = "train_size")]
    validation: Option<PathBuf>,
    /// Split the labeled file, training on this many videos.
    #[arg(long)]
    train_size: Option<usize>,
    /// Score by balanced accuracy instead of plain accuracy.
    #[arg(long)]
    balanced: bool,
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// Classifier output (JSON lines).
    #[arg(long)]
    labels: PathBuf,
    /// Video metadata (JSON lines).
    #[arg(long)]
    meta: PathBuf,
}

#[derive(Debug, Args)]
struct ReplicateArgs {
    /// Group summaries, one mean comparison per line.
    #[arg(long)]
    summaries: PathBuf,
    /// Contingency counts, one table per line.
    #[arg(long)]
    counts: PathBuf,
}

#[derive(Debug, Args)]
struct SampleArgs {
    /// Video files; each video's id is its file stem.
    #[arg(required = true)]
    videos: Vec<PathBuf>,
    #[arg(long, default_value = "ffmpeg")]
    ffmpeg: PathBuf,
    #[arg(long, default_value = "ffprobe")]
    ffprobe: PathBuf,
}

#[derive(Debug, Args)]
struct KappaArgs {
    /// First coder's labels (same format as calibration labels).
    #[arg(long)]
    coder_a: PathBuf,
    /// Second coder's labels.
    #[arg(long)]
    coder_b: PathBuf,
}

#[derive(Debug, Args)]
struct StratifyArgs {
    /// Provisional classifier output for the candidate pool.
    #[arg(long)]
    labels: PathBuf,
    /// Sample size.
    #[arg(short, long)]
    k: usize,
    /// Minimum share of the sample in which each element must be present.
    #[arg(long, default_value_t = 0.05)]
    min_prevalence: f64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
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
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<commands::InvariantViolation>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
