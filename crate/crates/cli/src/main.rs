//! `esnlab`: train echo state network readouts on Lorenz observations and
//! export the experiment artifacts as CSV.

mod config;
mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{parse_config, Overrides};

#[derive(Parser)]
#[command(
    name = "esnlab",
    about = "Echo state network experiments on the Lorenz system",
    version
)]
struct Cli {
    /// Key = value configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the `seed` key.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Overrides the `ell` (training length) key.
    #[arg(long, global = true)]
    ell: Option<usize>,

    /// Directory for the CSV artifacts (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Integrate the Lorenz system and write trajectory.csv.
    Generate,
    /// Fit the xi -> zeta readout; write train.csv and weights.csv.
    Train,
    /// Train next-step prediction and run the closed loop; write forecast.csv.
    Forecast,
    /// Readout convergence study over the training-length grid; write study.csv.
    Converge,
    /// Principal components of the driven reservoir states; write pca.csv.
    Pca,
    /// Spread of time averages on the logistic map; write clt.csv.
    Clt,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Train => "train",
            Command::Forecast => "forecast",
            Command::Converge => "converge",
            Command::Pca => "pca",
            Command::Clt => "clt",
        }
    }
}

fn init_thread_pool() -> Result<(), String> {
    let Ok(raw) = std::env::var("ESNLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("ESNLAB_THREADS must be a non-negative integer, got `{raw}`"))?;
    if n == 0 {
        return Ok(()); // 0 = auto
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn run(cli: &Cli) -> Result<(), String> {
    init_thread_pool()?;
    let overrides = Overrides {
        seed: cli.seed,
        ell: cli.ell,
    };
    let cfg = parse_config(cli.config.as_deref(), overrides).map_err(|e| e.to_string())?;
    std::fs::create_dir_all(&cli.out)
        .map_err(|e| format!("cannot create output directory: {e}"))?;
    let result = match cli.command {
        Command::Generate => commands::generate(&cfg, &cli.out),
        Command::Train => commands::train(&cfg, &cli.out),
        Command::Forecast => commands::forecast(&cfg, &cli.out),
        Command::Converge => commands::converge(&cfg, &cli.out),
        Command::Pca => commands::pca(&cfg, &cli.out),
        Command::Clt => commands::clt(&cfg, &cli.out),
    };
    result.map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("esnlab {}: {message}", cli.command.name());
            ExitCode::FAILURE
        }
    }
}
