//! Run configuration (JSON).
//!
//! Units: rates, drifts and intensities are per year, volatilities are
//! annualised, maturities and `dt` are in years, spot and strikes are in
//! domestic currency per unit of foreign currency.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::esscher::{EsscherParams, JumpSpec};
use crate::markov_regime::{parse_matrix_csv, RateMatrix, RegimeParams, RegimeSet, TransitionMatrix};
use crate::pricing::SeriesKernel;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Free-form comments; ignored.
    #[serde(default)]
    pub notes: Vec<String>,
    /// One entry per regime.
    pub regimes: Vec<RegimeParams>,
    /// Physical jump-size law.
    pub jump: JumpSpec,
    /// Free calibration constant `K0` (1/year).
    #[serde(default)]
    pub k0: f64,
    pub chain: ChainConfig,
    pub pricing: PricingConfig,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default)]
    pub curve: Option<CurveConfig>,
    /// Replaces the calibrated Esscher parameters (no martingale check).
    #[serde(default)]
    pub esscher_override: Option<EsscherOverride>,
    /// Relative to the config file's directory.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

/// Exactly one source for the chain generator.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    /// Generator with rows summing to zero (1/year).
    #[serde(default)]
    pub rate_matrix: Option<Vec<Vec<f64>>>,
    /// One-step transition probabilities over `dt`.
    #[serde(default)]
    pub transition_matrix: Option<Vec<Vec<f64>>>,
    /// CSV written by `estimate`.
    #[serde(default)]
    pub transition_file: Option<PathBuf>,
    /// Step of the transition matrix (years).
    #[serde(default)]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    /// Points `start, start + step, ...` up to `stop` inclusive, rounded to
    /// ten decimals.
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.start.is_finite() && self.stop.is_finite() && self.step.is_finite())
            || self.step <= 0.0
            || self.stop < self.start
        {
            return Err(Error::InvalidInput(format!(
                "grid needs finite start <= stop and step > 0, got {:?}",
                self
            )));
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        if n > 100_000 {
            return Err(Error::InvalidInput("grid has more than 100000 points".into()));
        }
        Ok((0..=n).map(|i| ((self.start + i as f64 * self.step) * 1e10).round() / 1e10).collect())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PricingConfig {
    pub s0: f64,
    #[serde(default)]
    pub strikes: Option<Vec<f64>>,
    /// Strikes given as moneyness `s0 / K`.
    #[serde(default)]
    pub s_over_k: Option<Grid>,
    pub maturities: Vec<f64>,
    #[serde(default)]
    pub initial_state: Option<usize>,
    #[serde(default)]
    pub initial_distribution: Option<Vec<f64>>,
    #[serde(default)]
    pub series_kernel: SeriesKernel,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    /// Outer chain paths of the series pricer.
    #[serde(default = "default_paths")]
    pub paths: u64,
    /// Paths of the full simulation oracle.
    #[serde(default = "default_oracle_paths")]
    pub oracle_paths: u64,
    #[serde(default)]
    pub seed: u64,
    /// Paths written by `simulate`.
    #[serde(default)]
    pub sample_paths: usize,
}

fn default_paths() -> u64 {
    10_000
}

fn default_oracle_paths() -> u64 {
    100_000
}

impl Default for McConfig {
    fn default() -> Self {
        Self { paths: default_paths(), oracle_paths: default_oracle_paths(), seed: 0, sample_paths: 0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    /// Exponential jump rates `θ`; each replaces the config's jump law.
    pub jump_rates: Vec<f64>,
    pub maturities: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EsscherOverride {
    pub theta_c: Vec<f64>,
    pub theta_j: Vec<f64>,
}

/// Validated configuration with the chain resolved.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub regimes: RegimeSet,
    pub rate: RateMatrix,
    pub strikes: Vec<f64>,
    pub moneyness: Option<Vec<f64>>,
    /// Probability of each starting state.
    pub initial: Vec<f64>,
    pub output_dir: PathBuf,
}

impl Resolved {
    /// The starting state when the initial law is a point mass.
    pub fn initial_state(&self) -> Option<usize> {
        let mut it = self.initial.iter().enumerate().filter(|(_, p)| **p > 0.0);
        match (it.next(), it.next()) {
            (Some((i, p)), None) if *p == 1.0 => Some(i),
            _ => None,
        }
    }

    pub fn override_params(&self) -> Option<EsscherParams> {
        self.config.esscher_override.as_ref().map(|o| EsscherParams {
            theta_c: o.theta_c.clone(),
            theta_j: o.theta_j.clone(),
            k0: self.config.k0,
        })
    }
}

fn positive_list(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() || v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::InvalidInput(format!("{name} must be a non-empty list of finite values > 0")));
    }
    Ok(())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))
    }

    /// Reads, parses and validates; nothing is computed before this returns.
    pub fn load(path: &Path) -> Result<Resolved> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text)?.resolve(&base)
    }

    pub fn resolve(self, base: &Path) -> Result<Resolved> {
        let regimes = RegimeSet::new(self.regimes.clone())?;
        self.jump.validate()?;
        if !self.k0.is_finite() {
            return Err(Error::InvalidInput("k0 must be finite".into()));
        }
        let n = regimes.len();
        let rate = self.chain_rate(base)?;
        if rate.len() != n {
            return Err(Error::InvalidInput(format!("chain has {} states but {n} regimes are given", rate.len())));
        }

        let p = &self.pricing;
        if !(p.s0.is_finite() && p.s0 > 0.0) {
            return Err(Error::InvalidInput(format!("pricing.s0 must be finite and > 0, got {}", p.s0)));
        }
        positive_list("pricing.maturities", &p.maturities)?;
        let (strikes, moneyness) = match (&p.strikes, &p.s_over_k) {
            (Some(k), None) => {
                positive_list("pricing.strikes", k)?;
                (k.clone(), None)
            }
            (None, Some(g)) => {
                let x = g.points()?;
                positive_list("pricing.s_over_k", &x)?;
                (x.iter().map(|x| p.s0 / x).collect(), Some(x))
            }
            _ => return Err(Error::InvalidInput("give exactly one of pricing.strikes and pricing.s_over_k".into())),
        };
        let initial = match (p.initial_state, &p.initial_distribution) {
            (Some(i), None) => {
                if i >= n {
                    return Err(Error::InvalidInput(format!("initial_state {i} out of range for {n} states")));
                }
                let mut d = vec![0.0; n];
                d[i] = 1.0;
                d
            }
            (None, Some(d)) => {
                let sum: f64 = d.iter().sum();
                if d.len() != n || d.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidInput(format!(
                        "initial_distribution must hold {n} non-negative weights summing to 1"
                    )));
                }
                d.clone()
            }
            (None, None) => return Err(Error::InvalidInput("pricing needs initial_state or initial_distribution".into())),
            _ => return Err(Error::InvalidInput("give only one of initial_state and initial_distribution".into())),
        };

        if self.mc.paths == 0 {
            return Err(Error::InvalidInput("mc.paths must be >= 1".into()));
        }
        if self.mc.oracle_paths < 100 {
            return Err(Error::InvalidInput("mc.oracle_paths must be >= 100".into()));
        }
        if let Some(c) = &self.curve {
            positive_list("curve.jump_rates", &c.jump_rates)?;
            positive_list("curve.maturities", &c.maturities)?;
        }
        if let Some(o) = &self.esscher_override {
            if o.theta_c.len() != n || o.theta_j.len() != n {
                return Err(Error::InvalidInput(format!("esscher_override needs {n} entries per parameter")));
            }
            let lo = self.jump.moment_lower_bound();
            if o.theta_c.iter().chain(&o.theta_j).any(|x| !x.is_finite()) || o.theta_j.iter().any(|&t| t <= lo) {
                return Err(Error::InvalidInput(format!("esscher_override values must be finite with theta_j > {lo}")));
            }
        }
        let output_dir = base.join(self.output_dir.clone().unwrap_or_else(|| PathBuf::from("out")));
        Ok(Resolved { config: self, regimes, rate, strikes, moneyness, initial, output_dir })
    }

    fn chain_rate(&self, base: &Path) -> Result<RateMatrix> {
        let c = &self.chain;
        let dt = || c.dt.ok_or_else(|| Error::InvalidInput("chain.dt is required with a transition matrix".into()));
        match (&c.rate_matrix, &c.transition_matrix, &c.transition_file) {
            (Some(rows), None, None) => {
                if c.dt.is_some() {
                    return Err(Error::InvalidInput("chain.dt applies only to transition matrices".into()));
                }
                RateMatrix::new(rows.clone())
            }
            (None, Some(rows), None) => TransitionMatrix::new(rows.clone(), dt()?)?.to_rate(),
            (None, None, Some(file)) => {
                let path = base.join(file);
                let text = std::fs::read_to_string(&path).map_err(|e| {
                    Error::InvalidInput(format!("cannot read transition file {}: {e}", path.display()))
                })?;
                parse_matrix_csv(&text, dt()?)?.to_rate()
            }
            _ => Err(Error::InvalidInput(
                "chain needs exactly one of rate_matrix, transition_matrix, transition_file".into(),
            )),
        }
    }
}
