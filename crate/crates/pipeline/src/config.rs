//! Experiment configuration: a flat TOML table parsed strictly (unknown keys
//! are errors), defaulted, and validated before any computation.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{PipelineError, Result};

pub const DEFAULT_N: usize = 2001;
pub const DEFAULT_ENSEMBLE: usize = 50;
pub const DEFAULT_ALPHA2_OVER_N: [f64; 5] = [5.0, 10.0, 25.0, 50.0, 100.0];
pub const DEFAULT_LAMBDAS: [f64; 2] = [0.0, 0.9];
pub const DEFAULT_PROBE_LAMBDA: f64 = 1.719e-5;
pub const DEFAULT_SEED: u64 = 2001;
pub const THETA0_TOKEN: &str = "pi_over_2N";

pub const DESK_N: usize = 501;
pub const DESK_ENSEMBLE: usize = 20;
pub const DESK_GRID_PER_DECADE: usize = 2;

/// `theta0` is either a number or the token `"pi_over_2N"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Theta0 {
    Value(f64),
    Token(String),
}

/// File-level view: every key optional, nothing resolved.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<i64>,
    #[serde(rename = "alpha2_over_N_list", skip_serializing_if = "Option::is_none")]
    pub alpha2_over_n_list: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_list: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta0: Option<Theta0>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble_size: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_halfwidth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
    /// Λ values for the spectral and eigenvector transition curves.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub big_lambda_grid: Option<Vec<f64>>,
    /// Adds α²/N = N (full band) to every target except table1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub include_full_band: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe_lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table2_r: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub histogram_range: Option<[f64; 2]>,
    /// Pool eigenvector statistics over the α grid instead of one matrix.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigvec_ensemble: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_samples: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_dim: Option<i64>,
    /// α²/N values pooled in the collapse fit.
    #[serde(rename = "collapse_alpha2_over_N", skip_serializing_if = "Option::is_none")]
    pub collapse_alpha2_over_n: Option<Vec<f64>>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Small-dimension preset. `N` and `ensemble_size` are always replaced;
    /// the Λ grid and eigenvector averaging are filled in only when the file
    /// leaves them unset. Single-matrix σ² scatter at `N = 501` is as large
    /// as the gaps between neighbouring bandwidths, so eigenvector
    /// statistics are pooled over the ensemble.
    pub fn apply_desk(&mut self) {
        self.n = Some(DESK_N as i64);
        self.ensemble_size = Some(DESK_ENSEMBLE as i64);
        if self.eigvec_ensemble.is_none() {
            self.eigvec_ensemble = Some(true);
        }
        if self.big_lambda_grid.is_none() {
            self.big_lambda_grid = Some(log_grid(1e-3, 10.0, DESK_GRID_PER_DECADE));
        }
    }
}

/// `lo·10^{k/per_decade}` up to and including `hi`.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let steps = (decades * per_decade as f64).round() as usize;
    (0..=steps).map(|k| lo * 10f64.powf(k as f64 / per_decade as f64)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "alpha2_over_N_list")]
    pub alpha2_over_n_list: Vec<f64>,
    pub lambda_list: Vec<f64>,
    pub theta0: f64,
    pub ensemble_size: usize,
    pub alpha_halfwidth: f64,
    pub r_values: Vec<f64>,
    pub bins: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub cache: bool,
    pub cache_dir: PathBuf,
    pub big_lambda_grid: Vec<f64>,
    pub include_full_band: bool,
    pub probe_lambda: f64,
    pub table2_r: Vec<f64>,
    pub histogram_range: [f64; 2],
    pub eigvec_ensemble: bool,
    pub reference_samples: usize,
    pub reference_dim: usize,
    #[serde(rename = "collapse_alpha2_over_N")]
    pub collapse_alpha2_over_n: Vec<f64>,
}

fn bad(msg: impl Into<String>) -> PipelineError {
    PipelineError::Config(msg.into())
}

fn positive_int(value: Option<i64>, name: &str, default: usize) -> Result<usize> {
    match value {
        None => Ok(default),
        Some(v) if v > 0 => Ok(v as usize),
        Some(v) => Err(bad(format!("{name} must be positive, got {v}"))),
    }
}

fn check_list(values: &[f64], name: &str, allow_zero: bool) -> Result<()> {
    if values.is_empty() {
        return Err(bad(format!("{name} must not be empty")));
    }
    for &v in values {
        let ok = v.is_finite() && if allow_zero { v >= 0.0 } else { v > 0.0 };
        if !ok {
            let rule = if allow_zero { "non-negative" } else { "positive" };
            return Err(bad(format!("{name} entries must be {rule}, got {v}")));
        }
    }
    Ok(())
}

fn check_intervals(values: &[f64], name: &str, n: usize) -> Result<()> {
    check_list(values, name, false)?;
    let limit = n as f64 / 4.0;
    if let Some(r) = values.iter().find(|&&r| r > limit) {
        return Err(bad(format!("{name} entry {r} exceeds N/4 = {limit}")));
    }
    Ok(())
}

fn default_r_values() -> Vec<f64> {
    vec![0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0]
}

impl ExperimentConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let n = match raw.n {
            None => DEFAULT_N,
            Some(v) if v < 3 => return Err(bad(format!("N must be an odd integer >= 3, got {v}"))),
            Some(v) if v % 2 == 0 => return Err(bad(format!("N must be odd, got {v}"))),
            Some(v) => v as usize,
        };
        let alpha2_over_n_list = raw.alpha2_over_n_list.clone().unwrap_or_else(|| DEFAULT_ALPHA2_OVER_N.to_vec());
        check_list(&alpha2_over_n_list, "alpha2_over_N_list", false)?;
        let lambda_list = raw.lambda_list.clone().unwrap_or_else(|| DEFAULT_LAMBDAS.to_vec());
        check_list(&lambda_list, "lambda_list", true)?;
        let theta0 = match &raw.theta0 {
            None => PI / (2.0 * n as f64),
            Some(Theta0::Token(t)) if t == THETA0_TOKEN => PI / (2.0 * n as f64),
            Some(Theta0::Token(t)) => return Err(bad(format!("theta0 must be a number or \"{THETA0_TOKEN}\", got \"{t}\""))),
            Some(Theta0::Value(v)) if v.is_finite() => *v,
            Some(Theta0::Value(v)) => return Err(bad(format!("theta0 must be finite, got {v}"))),
        };
        let ensemble_size = positive_int(raw.ensemble_size, "ensemble_size", DEFAULT_ENSEMBLE)?;
        let alpha_halfwidth = raw.alpha_halfwidth.unwrap_or(qkr_core::spectral::ALPHA_HALFWIDTH);
        if !(alpha_halfwidth.is_finite() && alpha_halfwidth >= 0.0) {
            return Err(bad(format!("alpha_halfwidth must be non-negative, got {alpha_halfwidth}")));
        }
        for &a in &alpha2_over_n_list {
            let alpha = (n as f64 * a).sqrt();
            if alpha < alpha_halfwidth {
                return Err(bad(format!(
                    "alpha_halfwidth {alpha_halfwidth} exceeds alpha = {alpha} at alpha2_over_N = {a}"
                )));
            }
        }
        let r_values = raw.r_values.clone().unwrap_or_else(default_r_values);
        check_intervals(&r_values, "r_values", n)?;
        let bins = positive_int(raw.bins, "bins", qkr_core::eigvec::HISTOGRAM_BINS)?;
        if bins < 10 {
            return Err(bad(format!("bins must be at least 10, got {bins}")));
        }
        let seed = match raw.seed {
            None => DEFAULT_SEED,
            Some(v) if v >= 0 => v as u64,
            Some(v) => return Err(bad(format!("seed must be non-negative, got {v}"))),
        };
        let big_lambda_grid = raw.big_lambda_grid.clone().unwrap_or_else(|| log_grid(1e-3, 10.0, 12));
        check_list(&big_lambda_grid, "big_lambda_grid", false)?;
        if big_lambda_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad("big_lambda_grid must be strictly increasing"));
        }
        let probe_lambda = raw.probe_lambda.unwrap_or(DEFAULT_PROBE_LAMBDA);
        if !(probe_lambda.is_finite() && probe_lambda > 0.0) {
            return Err(bad(format!("probe_lambda must be positive, got {probe_lambda}")));
        }
        let table2_r = raw.table2_r.clone().unwrap_or_else(|| vec![1.0, 2.0]);
        check_intervals(&table2_r, "table2_r", n)?;
        let (lo, hi) = qkr_core::eigvec::HISTOGRAM_RANGE;
        let histogram_range = raw.histogram_range.unwrap_or([lo, hi]);
        if !(histogram_range[0].is_finite() && histogram_range[1].is_finite() && histogram_range[0] < histogram_range[1]) {
            return Err(bad(format!("histogram_range must be [lo, hi] with lo < hi, got {histogram_range:?}")));
        }
        let reference_samples = positive_int(raw.reference_samples, "reference_samples", 8)?;
        let reference_dim = positive_int(raw.reference_dim, "reference_dim", 256)?;
        if reference_dim < 16 {
            return Err(bad(format!("reference_dim must be at least 16, got {reference_dim}")));
        }
        let collapse_alpha2_over_n = raw.collapse_alpha2_over_n.clone().unwrap_or_else(|| vec![5.0, 10.0, 25.0, 50.0]);
        check_list(&collapse_alpha2_over_n, "collapse_alpha2_over_N", false)?;
        Ok(Self {
            n,
            alpha2_over_n_list,
            lambda_list,
            theta0,
            ensemble_size,
            alpha_halfwidth,
            r_values,
            bins,
            seed,
            output_dir: raw.output_dir.clone().unwrap_or_else(|| PathBuf::from("qkr-output")),
            cache: raw.cache.unwrap_or(true),
            cache_dir: raw.cache_dir.clone().unwrap_or_else(|| PathBuf::from("qkr-cache")),
            big_lambda_grid,
            include_full_band: raw.include_full_band.unwrap_or(true),
            probe_lambda,
            table2_r,
            histogram_range,
            eigvec_ensemble: raw.eigvec_ensemble.unwrap_or(false),
            reference_samples,
            reference_dim,
            collapse_alpha2_over_n,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_raw(&RawConfig::parse(text)?)
    }

    /// Fully explicit raw form; parsing it back yields an equal config.
    pub fn to_raw(&self) -> RawConfig {
        RawConfig {
            n: Some(self.n as i64),
            alpha2_over_n_list: Some(self.alpha2_over_n_list.clone()),
            lambda_list: Some(self.lambda_list.clone()),
            theta0: Some(Theta0::Value(self.theta0)),
            ensemble_size: Some(self.ensemble_size as i64),
            alpha_halfwidth: Some(self.alpha_halfwidth),
            r_values: Some(self.r_values.clone()),
            bins: Some(self.bins as i64),
            seed: Some(self.seed as i64),
            output_dir: Some(self.output_dir.clone()),
            cache: Some(self.cache),
            cache_dir: Some(self.cache_dir.clone()),
            big_lambda_grid: Some(self.big_lambda_grid.clone()),
            include_full_band: Some(self.include_full_band),
            probe_lambda: Some(self.probe_lambda),
            table2_r: Some(self.table2_r.clone()),
            histogram_range: Some(self.histogram_range),
            eigvec_ensemble: Some(self.eigvec_ensemble),
            reference_samples: Some(self.reference_samples as i64),
            reference_dim: Some(self.reference_dim as i64),
            collapse_alpha2_over_n: Some(self.collapse_alpha2_over_n.clone()),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_raw()).expect("config serializes")
    }

    /// SHA-256 over every setting that can change an output value. Paths and
    /// cache switches are excluded, so the same experiment hashes the same
    /// wherever it is written.
    pub fn hash(&self) -> String {
        let mut view = self.clone();
        view.output_dir = PathBuf::new();
        view.cache = false;
        view.cache_dir = PathBuf::new();
        let bytes = serde_json::to_vec(&view).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// The configured α²/N values, plus `N` itself when the full-band case
    /// is included.
    pub fn alpha2_with_full_band(&self) -> Vec<f64> {
        let mut out = self.alpha2_over_n_list.clone();
        let full = self.n as f64;
        if self.include_full_band && !out.contains(&full) {
            out.push(full);
        }
        out
    }

    pub fn mean_spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }
}
