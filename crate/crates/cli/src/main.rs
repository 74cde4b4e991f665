//! `curvewave` command-line experiments: frame checks, transforms, propagation,
//! curvelet matrices, sparsity reports and bicharacteristic flows.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::CliError;
use config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "curvewave", version, about = "Curvelet frames and sparsity of wave propagators")]
struct Cli {
    /// JSON experiment config; defaults apply to every missing field.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Relative matrix threshold.
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// Grid size; also sets the scale count to the largest the grid admits.
    #[arg(long, global = true)]
    grid: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parseval, reconstruction, adjoint and partition-of-unity checks.
    FrameCheck,
    /// Coefficients and reconstruction of a field.
    Transform {
        /// Field file; overrides the config input.
        input: Option<PathBuf>,
    },
    /// Applies the configured operator at every configured time.
    Propagate { input: Option<PathBuf> },
    /// Writes sampled curvelet-matrix columns as CSV.
    Matrix,
    /// Decay, concentration and truncation report for a matrix CSV.
    Sparsity {
        /// Matrix CSV; overrides the config path.
        matrix: Option<PathBuf>,
    },
    /// Bicharacteristic trajectory as CSV.
    Flow,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(t) = cli.threshold {
        cfg.threshold = t;
    }
    if let Some(n) = cli.grid {
        cfg.frame.n = n;
        cfg.frame.scales = curvewave::FrameParams::max_scales(n);
    }
    Ok(cfg)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("CURVEWAVE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("CURVEWAVE_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Runtime(e.to_string()))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    configure_threads()?;
    let cfg = load(cli)?;
    match &cli.command {
        Command::FrameCheck => commands::frame_check(&cfg),
        Command::Transform { input } => commands::transform(&cfg, input.as_deref()),
        Command::Propagate { input } => commands::propagate(&cfg, input.as_deref()),
        Command::Matrix => commands::matrix(&cfg),
        Command::Sparsity { matrix } => commands::sparsity(&cfg, matrix.as_deref()),
        Command::Flow => commands::flow(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("curvewave: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
