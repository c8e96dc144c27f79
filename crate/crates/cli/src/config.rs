//! Declarative JSON experiment configuration.
//!
//! A config file describes one experiment: a G-FDPC rate-vs-SNR sweep, a CRC
//! sum-rate-vs-Pp sweep, or a scaling-factor report. All defaults are
//! materialized at load time so the resolved config can be embedded verbatim
//! in the output header.

use cogdpc_core::ensemble::{CsitModel, FadingSpec};
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use thiserror::Error;

/// Configuration problems: reported with field context, exit code 2.
#[derive(Error, Debug)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("config field `{field}`: {message}")]
    Field { field: &'static str, message: String },
}

fn field_err(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { field, message: message.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    GfdpcSweep,
    CrcSweep,
    ScalingTable,
}

/// Fading model of the G-FDPC pair `(H1, H2)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GfdpcFadingConfig {
    /// i.i.d. CN(mu, 1 - |mu|^2) with `mu = |mu| (1+j)/sqrt(2)`.
    Rician { mean_magnitude_sq: f64 },
    /// i.i.d. CN(0, 1).
    Rayleigh,
    /// Entrywise-correlated CN(0,1) pair with correlation `rho`.
    Correlated { rho: f64 },
    /// Explicit per-link fading specs.
    Custom { h1: FadingSpec<f64>, h2: FadingSpec<f64> },
}

impl GfdpcFadingConfig {
    pub fn link_specs(&self) -> Result<(FadingSpec<f64>, FadingSpec<f64>), ConfigError> {
        match self {
            GfdpcFadingConfig::Rician { mean_magnitude_sq } => {
                let m2 = *mean_magnitude_sq;
                if !(0.0..1.0).contains(&m2) {
                    return Err(field_err(
                        "gfdpc.fading.mean_magnitude_sq",
                        "must lie in [0, 1) so that |mu|^2 + variance = 1",
                    ));
                }
                let mag = m2.sqrt();
                let mean = Complex::new(mag / 2.0f64.sqrt(), mag / 2.0f64.sqrt());
                let spec = FadingSpec::ComplexGaussianIid { mean, variance: 1.0 - m2 };
                Ok((spec.clone(), spec))
            }
            GfdpcFadingConfig::Rayleigh => {
                let spec = FadingSpec::ComplexGaussianIid {
                    mean: Complex::new(0.0, 0.0),
                    variance: 1.0,
                };
                Ok((spec.clone(), spec))
            }
            GfdpcFadingConfig::Correlated { rho } => {
                if rho.abs() > 1.0 {
                    return Err(field_err("gfdpc.fading.rho", "must satisfy |rho| <= 1"));
                }
                let spec = FadingSpec::CorrelatedPair { rho: *rho };
                Ok((spec.clone(), spec))
            }
            GfdpcFadingConfig::Custom { h1, h2 } => Ok((h1.clone(), h2.clone())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WAlgorithmConfig {
    Rowwise,
    Stationary,
    Both,
}

impl WAlgorithmConfig {
    pub fn to_core(self) -> cogdpc_core::gfdpc::WAlgorithm {
        match self {
            WAlgorithmConfig::Rowwise => cogdpc_core::gfdpc::WAlgorithm::RowWise,
            WAlgorithmConfig::Stationary => cogdpc_core::gfdpc::WAlgorithm::Stationary,
            WAlgorithmConfig::Both => cogdpc_core::gfdpc::WAlgorithm::Both,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GfdpcSweepConfig {
    pub r: usize,
    pub t_x: usize,
    pub t_s: usize,
    /// Interference-to-signal power ratio `Q / P`.
    #[serde(default = "default_one")]
    pub q_over_p: f64,
    /// Relative diagonal weights of `Sigma_X` (normalized to `P`);
    /// isotropic when omitted. Zeros control the rank.
    #[serde(default)]
    pub sigma_x_weights: Option<Vec<f64>>,
    /// Relative diagonal weights of `Sigma_S` (normalized to `Q`).
    #[serde(default)]
    pub sigma_s_weights: Option<Vec<f64>>,
    pub fading: GfdpcFadingConfig,
    #[serde(default = "default_w_algorithm")]
    pub algorithm: WAlgorithmConfig,
    #[serde(default = "default_w_tol")]
    pub w_tol: f64,
    #[serde(default = "default_w_max_outer")]
    pub w_max_outer: usize,
    #[serde(default = "default_w_max_iter")]
    pub w_max_iter: usize,
}

/// CSIT variant to evaluate in a CRC sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CsitConfig {
    None,
    /// Feedback bits per entry component, one per link `H11, H21, H12, H22`
    /// (a single value broadcasts to all four).
    Quantized { bits: Vec<u32> },
}

impl CsitConfig {
    pub fn label(&self) -> String {
        match self {
            CsitConfig::None => "nocsit".to_string(),
            CsitConfig::Quantized { bits } => {
                let mut s = String::from("b");
                for b in bits {
                    s.push_str(&b.to_string());
                }
                s
            }
        }
    }

    pub fn to_core(&self) -> Result<CsitModel<f64>, ConfigError> {
        match self {
            CsitConfig::None => Ok(CsitModel::None),
            CsitConfig::Quantized { bits } => {
                let bits = match bits.len() {
                    1 => vec![bits[0]; 4],
                    4 => bits.clone(),
                    n => {
                        return Err(field_err(
                            "crc.csit.bits",
                            format!("expected 1 or 4 bit counts, got {n}"),
                        ))
                    }
                };
                Ok(CsitModel::Quantized { bits, ranges: None })
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrcAlgorithm {
    Alg1,
    Alg2,
}

impl CrcAlgorithm {
    pub fn label(self) -> &'static str {
        match self {
            CrcAlgorithm::Alg1 => "alg1",
            CrcAlgorithm::Alg2 => "alg2",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CrcFadingConfig {
    /// One spec applied to all four links.
    Same(FadingSpec<f64>),
    /// Explicit specs for `H11, H21, H12, H22`.
    PerLink([FadingSpec<f64>; 4]),
}

impl CrcFadingConfig {
    pub fn link_specs(&self) -> [FadingSpec<f64>; 4] {
        match self {
            CrcFadingConfig::Same(s) => [s.clone(), s.clone(), s.clone(), s.clone()],
            CrcFadingConfig::PerLink(a) => a.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrcSweepConfig {
    pub t1: usize,
    pub t2: usize,
    pub r1: usize,
    pub r2: usize,
    /// Cognitive-to-primary power ratio `Pc / Pp`.
    #[serde(default = "default_one")]
    pub pc_over_pp: f64,
    pub fading: CrcFadingConfig,
    #[serde(default = "default_csit_list")]
    pub csit: Vec<CsitConfig>,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<CrcAlgorithm>,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_crc_tol")]
    pub tol: f64,
    #[serde(default = "default_max_outer")]
    pub max_outer: usize,
    /// Conditional-ensemble size used per quantizer cell.
    #[serde(default = "default_inner_samples")]
    pub inner_samples: usize,
    /// Emit the perfect-cancellation upper-bound column.
    #[serde(default = "default_true")]
    pub include_ub: bool,
    #[serde(default = "default_w_max_iter_crc")]
    pub w_max_iter: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GfdpcScalingConfig {
    pub r: usize,
    pub rank_x: usize,
    pub rank_s: usize,
    /// Also measure the empirical slope from two high-SNR rate evaluations.
    #[serde(default)]
    pub measure_slope: bool,
    #[serde(default = "default_slope_points")]
    pub slope_snr_db: [f64; 2],
    #[serde(default = "default_slope_samples")]
    pub slope_samples: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    #[serde(default)]
    pub gfdpc: Option<GfdpcScalingConfig>,
    /// CRC antenna tuples `(t1, t2, r1, r2)` to enumerate.
    #[serde(default)]
    pub crc_dims: Vec<[usize; 4]>,
}

/// Top-level experiment description.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// SNR grid (G-FDPC) or `Pp` grid (CRC) in dB, strictly increasing.
    #[serde(default)]
    pub grid_db: Vec<f64>,
    /// Append a wall_time_s column. Off by default so that output bytes are
    /// identical across reruns of the same config.
    #[serde(default)]
    pub emit_timing: bool,
    #[serde(default)]
    pub gfdpc: Option<GfdpcSweepConfig>,
    #[serde(default)]
    pub crc: Option<CrcSweepConfig>,
    #[serde(default)]
    pub scaling: Option<ScalingConfig>,
}

fn default_one() -> f64 {
    1.0
}
fn default_true() -> bool {
    true
}
fn default_seed() -> u64 {
    1
}
fn default_samples() -> usize {
    1000
}
fn default_w_algorithm() -> WAlgorithmConfig {
    WAlgorithmConfig::Both
}
fn default_w_tol() -> f64 {
    1e-6
}
fn default_w_max_outer() -> usize {
    100
}
fn default_w_max_iter() -> usize {
    500
}
fn default_w_max_iter_crc() -> usize {
    120
}
fn default_csit_list() -> Vec<CsitConfig> {
    vec![CsitConfig::None]
}
fn default_algorithms() -> Vec<CrcAlgorithm> {
    vec![CrcAlgorithm::Alg1]
}
fn default_restarts() -> usize {
    5
}
fn default_crc_tol() -> f64 {
    1e-4
}
fn default_max_outer() -> usize {
    50
}
fn default_inner_samples() -> usize {
    200
}
fn default_slope_points() -> [f64; 2] {
    [30.0, 40.0]
}
fn default_slope_samples() -> usize {
    1000
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.samples == 0 {
            return Err(field_err("samples", "must be >= 1"));
        }
        let needs_grid = matches!(self.kind, ExperimentKind::GfdpcSweep | ExperimentKind::CrcSweep);
        if needs_grid {
            if self.grid_db.is_empty() {
                return Err(field_err("grid_db", "sweeps need a non-empty dB grid"));
            }
            if self.grid_db.windows(2).any(|w| w[0] >= w[1]) {
                return Err(field_err("grid_db", "must be strictly increasing"));
            }
        }
        match self.kind {
            ExperimentKind::GfdpcSweep => {
                let g = self
                    .gfdpc
                    .as_ref()
                    .ok_or_else(|| field_err("gfdpc", "required for kind = gfdpc-sweep"))?;
                if g.r == 0 || g.t_x == 0 || g.t_s == 0 {
                    return Err(field_err("gfdpc", "antenna counts must be positive"));
                }
                if g.q_over_p < 0.0 {
                    return Err(field_err("gfdpc.q_over_p", "must be >= 0"));
                }
                if let Some(ws) = &g.sigma_x_weights {
                    if ws.len() != g.t_x || ws.iter().any(|&w| w < 0.0) || ws.iter().sum::<f64>() <= 0.0 {
                        return Err(field_err(
                            "gfdpc.sigma_x_weights",
                            format!("need {} nonnegative weights with positive sum", g.t_x),
                        ));
                    }
                }
                if let Some(ws) = &g.sigma_s_weights {
                    if ws.len() != g.t_s || ws.iter().any(|&w| w < 0.0) {
                        return Err(field_err(
                            "gfdpc.sigma_s_weights",
                            format!("need {} nonnegative weights", g.t_s),
                        ));
                    }
                }
                g.fading.link_specs()?;
            }
            ExperimentKind::CrcSweep => {
                let c = self
                    .crc
                    .as_ref()
                    .ok_or_else(|| field_err("crc", "required for kind = crc-sweep"))?;
                if c.t1 == 0 || c.t2 == 0 || c.r1 == 0 || c.r2 == 0 {
                    return Err(field_err("crc", "antenna counts must be positive"));
                }
                if c.pc_over_pp <= 0.0 {
                    return Err(field_err("crc.pc_over_pp", "must be > 0"));
                }
                if c.csit.is_empty() {
                    return Err(field_err("crc.csit", "need at least one CSIT variant"));
                }
                if c.algorithms.is_empty() {
                    return Err(field_err("crc.algorithms", "need at least one algorithm"));
                }
                for v in &c.csit {
                    v.to_core()?;
                }
                for spec in c.fading.link_specs() {
                    spec.validate()
                        .map_err(|e| field_err("crc.fading", e.to_string()))?;
                }
            }
            ExperimentKind::ScalingTable => {
                let s = self
                    .scaling
                    .as_ref()
                    .ok_or_else(|| field_err("scaling", "required for kind = scaling-table"))?;
                if s.gfdpc.is_none() && s.crc_dims.is_empty() {
                    return Err(field_err("scaling", "nothing to report"));
                }
                if let Some(g) = &s.gfdpc {
                    if g.r == 0 {
                        return Err(field_err("scaling.gfdpc.r", "must be positive"));
                    }
                    if g.slope_snr_db[0] >= g.slope_snr_db[1] {
                        return Err(field_err(
                            "scaling.gfdpc.slope_snr_db",
                            "must be increasing",
                        ));
                    }
                }
                for d in &s.crc_dims {
                    if d.iter().any(|&x| x == 0) {
                        return Err(field_err("scaling.crc_dims", "entries must be positive"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Canonical single-line JSON of the fully resolved config.
    pub fn resolved_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
