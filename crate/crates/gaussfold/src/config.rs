//! Run configurations for the batch front-end: a single JSON or TOML file
//! per command, validated up front and serialized verbatim into every output
//! for provenance.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::Method;

/// Load a config from JSON or TOML, decided by the file extension.
pub fn load_config<C: DeserializeOwned>(path: &Path) -> Result<C> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("invalid JSON config: {e}"))),
        Some("toml") => toml::from_str(&text)
            .map_err(|e| Error::Config(format!("invalid TOML config: {e}"))),
        other => Err(Error::Config(format!(
            "config must be .json or .toml, got {:?}",
            other
        ))),
    }
}

fn default_alpha() -> f64 {
    0.05
}
fn default_sigma_prime() -> f64 {
    1.0
}
fn default_q1_list() -> Vec<f64> {
    // implementation-chosen defaults for the signal-weight sweep
    vec![0.6, 0.71, 0.8]
}
fn default_methods() -> Vec<Method> {
    vec![Method::Naive, Method::Marginal, Method::Conditional]
}
fn default_seed() -> u64 {
    std::env::var("GAUSSFOLD_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(1)
}

/// Configuration for the selection-and-test simulation command.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub a: usize,
    pub b: usize,
    pub rho: f64,
    /// Planted correlations; omit (or leave empty) for the null setting.
    #[serde(default)]
    pub omegas: Vec<f64>,
    /// Signal weights of the first fold, one simulation batch per value.
    #[serde(default = "default_q1_list")]
    pub q1: Vec<f64>,
    #[serde(default = "default_sigma_prime")]
    pub sigma_prime: f64,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    pub replicates: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

impl SimulateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.q1.is_empty() {
            return Err(Error::Config("q1 list must be non-empty".into()));
        }
        Ok(())
    }
}

/// Configuration for the cluster-validation command. Exactly one of
/// `input_csv` (observed matrix) or `blocks` (synthetic truth) must be set.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateClustersConfig {
    /// CSV with the observed `a x b` matrix (data mode).
    #[serde(default)]
    pub input_csv: Option<String>,
    /// Rows per block for the synthetic experiment.
    #[serde(default)]
    pub blocks: Vec<usize>,
    #[serde(default)]
    pub within_corr: Option<f64>,
    #[serde(default)]
    pub b: Option<usize>,
    #[serde(default)]
    pub rho: Option<f64>,
    pub q1: f64,
    #[serde(default)]
    pub replicates: Option<usize>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl ValidateClustersConfig {
    pub fn validate(&self) -> Result<()> {
        match (&self.input_csv, self.blocks.is_empty()) {
            (Some(_), true) => Ok(()),
            (None, false) => {
                if self.within_corr.is_none() || self.b.is_none() || self.rho.is_none() {
                    return Err(Error::Config(
                        "synthetic mode needs within_corr, b, and rho".into(),
                    ));
                }
                Ok(())
            }
            (Some(_), false) => Err(Error::Config(
                "set either input_csv (data mode) or blocks (synthetic mode), not both".into(),
            )),
            (None, true) => Err(Error::Config(
                "set input_csv (data mode) or blocks (synthetic mode)".into(),
            )),
        }
    }
}

/// Parametric family for the Fisher-report command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovFamily {
    /// `Sigma(phi) = phi[0] * I_p`.
    Isotropic,
    /// `Sigma(phi) = diag(phi)`.
    Diagonal,
    /// `Sigma(phi) = phi[0]^|i-j|` (AR(1) correlation).
    Ar1,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FisherReportConfig {
    pub p: usize,
    pub family: CovFamily,
    /// Mean parameters (the mean vector itself).
    pub theta: Vec<f64>,
    /// Covariance parameters for the family.
    pub phi: Vec<f64>,
    /// Signal weight; derived from `gamma` when omitted.
    #[serde(default)]
    pub q1: Option<f64>,
    /// Target covariance-information share for the tuner.
    #[serde(default)]
    pub gamma: Option<f64>,
    /// Diagonal of the covariance guess handed to the tuner (identity when
    /// omitted).
    #[serde(default)]
    pub s_guess: Option<Vec<f64>>,
    #[serde(default)]
    pub include_diagonal_terms: bool,
    /// Auxiliary noise standard deviation for the fission report; the tuned
    /// value is used when `gamma` is set and this is omitted.
    #[serde(default)]
    pub sigma_prime: Option<f64>,
    /// Optional orthogonal-split fractions to report alongside.
    #[serde(default)]
    pub split: Option<SplitConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub n: usize,
    pub sizes: Vec<usize>,
    pub kind: SplitKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitKind {
    SampleSplit,
    InfoPreserving,
}

impl FisherReportConfig {
    pub fn validate(&self) -> Result<()> {
        if self.theta.len() != self.p {
            return Err(Error::Config(format!(
                "theta must have length p = {}, got {}",
                self.p,
                self.theta.len()
            )));
        }
        let expected_phi = match self.family {
            CovFamily::Isotropic | CovFamily::Ar1 => 1,
            CovFamily::Diagonal => self.p,
        };
        if self.phi.len() != expected_phi {
            return Err(Error::Config(format!(
                "family {:?} needs {expected_phi} covariance parameter(s), got {}",
                self.family,
                self.phi.len()
            )));
        }
        if self.q1.is_none() && self.gamma.is_none() {
            return Err(Error::Config("set q1 or gamma".into()));
        }
        Ok(())
    }
}
