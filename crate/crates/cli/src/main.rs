//! `urmx` - segment soft speech units, model speaker rhythm, and convert
//! utterances to a target speaker's rhythm.

mod commands;
mod config;
mod errors;
mod io_util;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::PipelineConfig;
use errors::CliError;

#[derive(Parser)]
#[command(
    name = "urmx",
    version,
    about = "Rhythm modeling and conversion for soft speech units",
    propagate_version = true
)]
struct Cli {
    /// TOML config file; command-line flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Feature frames per second
    #[arg(long, global = true)]
    frame_rate: Option<f64>,

    /// Segmentation regularizer weight
    #[arg(long, global = true)]
    gamma: Option<f64>,

    /// Softmax temperature for unit probabilities
    #[arg(long, global = true)]
    tau: Option<f64>,

    /// Worker threads for per-utterance parallelism (0 = all cores)
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment unit sequences with the regularized dynamic program
    Segment(commands::segment::Args),
    /// Hierarchically cluster the codebook into sound-class groups
    ClusterUnits(commands::cluster_units::Args),
    /// Decide which cluster is sonorant, obstruent, and silence
    LabelClusters(commands::label_clusters::Args),
    /// Fit a speaker rhythm model (speaking rate + per-class gammas)
    Fit(commands::fit::Args),
    /// Estimate speaking rate from labeled segmentations
    Rate(commands::rate::Args),
    /// Convert an utterance to a target speaker's rhythm
    Convert(commands::convert::Args),
    /// Compare parallel alignments: total/word/phone length errors
    EvalLengths(commands::eval_lengths::Args),
    /// Compare duration distributions per sound type (Wasserstein-1)
    EvalWasserstein(commands::eval_wasserstein::Args),
    /// Fabricate a synthetic speaker corpus for pipeline checks
    GenSynthetic(commands::gen_synthetic::Args),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = PipelineConfig::resolve(
        cli.config.as_deref(),
        cli.gamma,
        cli.tau,
        cli.frame_rate,
    )?;
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    match cli.command {
        Command::Segment(args) => commands::segment::run(&config, args),
        Command::ClusterUnits(args) => commands::cluster_units::run(&config, args),
        Command::LabelClusters(args) => commands::label_clusters::run(&config, args),
        Command::Fit(args) => commands::fit::run(&config, args),
        Command::Rate(args) => commands::rate::run(&config, args),
        Command::Convert(args) => commands::convert::run(&config, args),
        Command::EvalLengths(args) => commands::eval_lengths::run(&config, args),
        Command::EvalWasserstein(args) => commands::eval_wasserstein::run(&config, args),
        Command::GenSynthetic(args) => commands::gen_synthetic::run(&config, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("urmx: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
