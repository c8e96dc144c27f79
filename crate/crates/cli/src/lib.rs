//! Experiment runner: loads a declarative JSON config, executes the
//! requested sweep or scaling report, and renders deterministic CSV/text
//! output (see the crate README for the schema).

pub mod config;
pub mod report;
pub mod sweep;

use config::{ConfigError, ExperimentConfig, ExperimentKind};
use thiserror::Error;

/// Top-level failure classes, mapped to process exit codes by the binary.
#[derive(Error, Debug)]
pub enum RunError {
    /// Exit code 2.
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// Exit code 3.
    #[error("numerical failure: {0}")]
    Numerical(#[from] cogdpc_core::Error),
}

/// Execute the experiment and return the rendered output document.
pub fn execute(cfg: &ExperimentConfig) -> Result<String, RunError> {
    cfg.validate()?;
    let resolved = cfg.resolved_json();
    match cfg.kind {
        ExperimentKind::GfdpcSweep => {
            let rows = sweep::run_gfdpc_sweep(cfg)?;
            Ok(report::render_gfdpc_csv(&resolved, &rows, cfg.emit_timing))
        }
        ExperimentKind::CrcSweep => {
            let rows = sweep::run_crc_sweep(cfg)?;
            Ok(report::render_crc_csv(&resolved, &rows, cfg.emit_timing))
        }
        ExperimentKind::ScalingTable => {
            let s = cfg.scaling.as_ref().expect("validated scaling config");
            let body = sweep::run_scaling_table(cfg, s)?;
            Ok(report::render_scaling_report(&resolved, &body))
        }
    }
}
