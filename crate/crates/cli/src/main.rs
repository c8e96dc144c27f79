//! `cogdpc` binary: run a sweep or scaling experiment from a JSON config.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 on numerical
//! failure.

use clap::Parser;
use cogdpc_cli::config::ExperimentConfig;
use cogdpc_cli::{execute, RunError};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "cogdpc",
    about = "Dirty-paper-coding rate sweeps for fading MIMO and cognitive radio channels"
)]
struct Args {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the Monte Carlo sample count.
    #[arg(long)]
    samples: Option<usize>,
    /// Override the output path (default: config `out`, else stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (affects speed only, never results).
    #[arg(long)]
    threads: Option<usize>,
}

fn run(args: Args) -> Result<(), RunError> {
    if let Some(n) = args.threads {
        // Results are invariant under the pool size by construction.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let mut cfg = ExperimentConfig::from_path(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(samples) = args.samples {
        cfg.samples = samples;
    }
    if let Some(out) = args.out {
        cfg.out = Some(out);
    }
    let output = execute(&cfg)?;
    match &cfg.out {
        Some(path) => {
            std::fs::write(path, &output).map_err(|source| {
                cogdpc_cli::config::ConfigError::Io {
                    path: path.display().to_string(),
                    source,
                }
            })?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{output}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ RunError::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e @ RunError::Numerical(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
