//! Path-level Monte Carlo oracle.
//!
//! Conditional on the regime path the log-spot solution is exact within each
//! sojourn of length `τ` in state `i`:
//!
//! ```text
//! Δ ln S = (drift_i - σ_i²/2) τ + σ_i √τ N(0,1) + Σ_{n ≤ Poisson(λ_i τ)} ln Z_n
//! ```
//!
//! with `(drift, λ, ν) = (μ, λ, ν)` under the physical measure and
//! `(μ + θ^c σ², λ*, ν̃)` under the Esscher measure. Discounting uses
//! `exp(-∫ (r^d - r^f) ds)` along the realised regime path.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::esscher::{EsscherParams, JumpSpec, RiskNeutralRegimeSet};
use crate::markov_regime::{occupation_times, ChainPath, ChainSampler, RateMatrix, RegimeSet};
use crate::pricing::PriceResult;
use crate::stats::{parallel_paths, path_rng, RunningStats};

/// Measure under which paths are generated.
#[derive(Debug, Clone, Copy)]
pub enum MeasureTag<'a> {
    Physical,
    RiskNeutral(&'a RiskNeutralRegimeSet),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpotPath {
    /// Sojourn boundaries, from 0 to the horizon.
    pub times: Vec<f64>,
    /// `ln S` at each entry of `times`.
    pub log_spot: Vec<f64>,
    pub jump_count: u64,
    pub chain: ChainPath,
    /// `∫ (r^d - r^f) ds` over the horizon.
    pub rate_integral: f64,
}

impl SpotPath {
    pub fn terminal_spot(&self) -> f64 {
        self.log_spot.last().copied().unwrap_or(f64::NAN).exp()
    }

    /// `exp(-∫ (r^d - r^f) ds) S_T`.
    pub fn discounted_terminal(&self) -> f64 {
        (self.log_spot.last().copied().unwrap_or(f64::NAN) - self.rate_integral).exp()
    }
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: u64,
}

impl From<RunningStats> for McEstimate {
    fn from(s: RunningStats) -> Self {
        McEstimate { mean: s.mean(), std_error: s.std_error(), n_paths: s.count() }
    }
}

#[derive(Debug, Clone, Copy)]
struct StateDynamics {
    drift: f64,
    sigma: f64,
    lambda: f64,
    law: JumpSpec,
    spread: f64,
}

fn dynamics(regimes: &RegimeSet, spec: &JumpSpec, measure: MeasureTag<'_>) -> Result<Vec<StateDynamics>> {
    spec.validate()?;
    if let MeasureTag::RiskNeutral(rn) = measure {
        if rn.len() != regimes.len() {
            return Err(Error::InvalidInput(format!(
                "{} regimes but {} risk-neutral states",
                regimes.len(),
                rn.len()
            )));
        }
    }
    Ok(regimes
        .states()
        .iter()
        .enumerate()
        .map(|(i, r)| match measure {
            MeasureTag::Physical => StateDynamics {
                drift: r.mu,
                sigma: r.sigma,
                lambda: r.lambda,
                law: *spec,
                spread: r.rd - r.rf,
            },
            MeasureTag::RiskNeutral(rn) => {
                let s = rn.state(i);
                StateDynamics {
                    drift: s.drift,
                    sigma: r.sigma,
                    lambda: s.lambda_star,
                    law: s.tilted,
                    spread: r.rd - r.rf,
                }
            }
        })
        .collect())
}

fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("finite positive mean");
    let n: f64 = d.sample(rng);
    n as u64
}

fn check_common(rate: &RateMatrix, regimes: &RegimeSet, initial_state: usize, horizon: f64) -> Result<()> {
    if rate.len() != regimes.len() {
        return Err(Error::InvalidInput(format!(
            "{}x{} rate matrix for {} regimes",
            rate.len(),
            rate.len(),
            regimes.len()
        )));
    }
    if initial_state >= regimes.len() {
        return Err(Error::InvalidInput(format!("initial state {initial_state} out of range")));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidInput(format!("horizon must be finite and > 0, got {horizon}")));
    }
    Ok(())
}

/// Log-return, jump count and rate integral along one regime path.
fn evolve<R: Rng + ?Sized>(
    dynamics: &[StateDynamics],
    chain: &ChainPath,
    rng: &mut R,
    mut on_step: impl FnMut(f64),
) -> (f64, u64, f64) {
    let mut x = 0.0;
    let mut jumps = 0;
    let mut integral = 0.0;
    for &(i, tau) in chain.sojourns() {
        let d = &dynamics[i];
        let z: f64 = rng.sample(StandardNormal);
        x += (d.drift - 0.5 * d.sigma * d.sigma) * tau + d.sigma * tau.sqrt() * z;
        let n = poisson_count(d.lambda * tau, rng);
        for _ in 0..n {
            x += d.law.sample_log(rng);
        }
        jumps += n;
        integral += d.spread * tau;
        on_step(x);
    }
    (x, jumps, integral)
}

/// Simulates one spot path. `spec` is the physical jump law; under
/// [`MeasureTag::RiskNeutral`] the tilted laws of the regime set are used.
#[allow(clippy::too_many_arguments)]
pub fn simulate_spot_path(
    regimes: &RegimeSet,
    rate: &RateMatrix,
    spec: &JumpSpec,
    s0: f64,
    horizon: f64,
    measure: MeasureTag<'_>,
    initial_state: usize,
    seed: u64,
) -> Result<SpotPath> {
    check_common(rate, regimes, initial_state, horizon)?;
    if !(s0.is_finite() && s0 > 0.0) {
        return Err(Error::InvalidInput(format!("s0 must be finite and > 0, got {s0}")));
    }
    let dyns = dynamics(regimes, spec, measure)?;
    let mut rng = path_rng(seed, 0);
    let chain = ChainSampler::new(rate).sample(initial_state, horizon, &mut rng);
    let ln_s0 = s0.ln();
    let mut times = vec![0.0];
    let mut log_spot = vec![ln_s0];
    let mut t = 0.0;
    let durations: Vec<f64> = chain.sojourns().iter().map(|&(_, d)| d).collect();
    let mut k = 0;
    let (_, jump_count, rate_integral) = evolve(&dyns, &chain, &mut rng, |x| {
        t += durations[k];
        k += 1;
        times.push(if k == durations.len() { horizon } else { t });
        log_spot.push(ln_s0 + x);
    });
    Ok(SpotPath { times, log_spot, jump_count, chain, rate_integral })
}

fn check_paths(n_paths: u64, min: u64) -> Result<()> {
    if n_paths < min {
        return Err(Error::InvalidInput(format!("need at least {min} paths, got {n_paths}")));
    }
    Ok(())
}

/// Call prices by raw payoff averaging under the risk-neutral dynamics,
/// one column per strike on shared paths.
#[allow(clippy::too_many_arguments)]
pub fn mc_price_strikes(
    s0: f64,
    strikes: &[f64],
    t: f64,
    regimes: &RegimeSet,
    rate: &RateMatrix,
    rn: &RiskNeutralRegimeSet,
    initial_state: usize,
    n_paths: u64,
    seed: u64,
) -> Result<Vec<PriceResult>> {
    check_common(rate, regimes, initial_state, t)?;
    check_paths(n_paths, 100)?;
    if !(s0.is_finite() && s0 > 0.0) {
        return Err(Error::InvalidInput(format!("s0 must be finite and > 0, got {s0}")));
    }
    if strikes.is_empty() || strikes.iter().any(|k| !(k.is_finite() && *k >= 0.0)) {
        return Err(Error::InvalidInput("strikes must be a non-empty list of finite values >= 0".into()));
    }
    let spec = rn.states.first().map(|s| s.tilted).ok_or_else(|| Error::InvalidInput("empty regime set".into()))?;
    let dyns = dynamics(regimes, &spec, MeasureTag::RiskNeutral(rn))?;
    let sampler = ChainSampler::new(rate);
    let stats = parallel_paths(n_paths, strikes.len(), |idx, out| {
        let mut rng = path_rng(seed, idx);
        let chain = sampler.sample(initial_state, t, &mut rng);
        let (x, _, integral) = evolve(&dyns, &chain, &mut rng, |_| {});
        let st = s0 * x.exp();
        let disc = (-integral).exp();
        for (o, &k) in out.iter_mut().zip(strikes) {
            *o = disc * (st - k).max(0.0);
        }
    });
    Ok(stats
        .into_iter()
        .map(|s| PriceResult { price: s.mean(), std_error: s.std_error(), n_paths, series_truncation: 0 })
        .collect())
}

/// Single-strike form of [`mc_price_strikes`].
#[allow(clippy::too_many_arguments)]
pub fn mc_price_call(
    s0: f64,
    k: f64,
    t: f64,
    regimes: &RegimeSet,
    rate: &RateMatrix,
    rn: &RiskNeutralRegimeSet,
    initial_state: usize,
    n_paths: u64,
    seed: u64,
) -> Result<PriceResult> {
    Ok(mc_price_strikes(s0, &[k], t, regimes, rate, rn, initial_state, n_paths, seed)?[0])
}

/// Mean of the discounted terminal spot `S^d_T / s0` under the risk-neutral
/// dynamics; 1 for a martingale.
pub fn discounted_spot_mean(
    regimes: &RegimeSet,
    rate: &RateMatrix,
    rn: &RiskNeutralRegimeSet,
    horizon: f64,
    initial_state: usize,
    n_paths: u64,
    seed: u64,
) -> Result<McEstimate> {
    check_common(rate, regimes, initial_state, horizon)?;
    check_paths(n_paths, 2)?;
    let spec = rn.states.first().map(|s| s.tilted).ok_or_else(|| Error::InvalidInput("empty regime set".into()))?;
    let dyns = dynamics(regimes, &spec, MeasureTag::RiskNeutral(rn))?;
    let sampler = ChainSampler::new(rate);
    let stats = parallel_paths(n_paths, 1, |idx, out| {
        let mut rng = path_rng(seed, idx);
        let chain = sampler.sample(initial_state, horizon, &mut rng);
        let (x, _, integral) = evolve(&dyns, &chain, &mut rng, |_| {});
        out[0] = (x - integral).exp();
    });
    Ok(stats[0].into())
}

/// Monte Carlo estimate of `E[exp <u, J(0, T)>]` from simulated chain paths.
pub fn occupation_mgf_estimate(
    rate: &RateMatrix,
    u: &[f64],
    horizon: f64,
    initial_state: usize,
    n_paths: u64,
    seed: u64,
) -> Result<McEstimate> {
    if u.len() != rate.len() || u.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("u must hold one finite entry per state".into()));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidInput(format!("horizon must be finite and > 0, got {horizon}")));
    }
    if initial_state >= rate.len() {
        return Err(Error::InvalidInput(format!("initial state {initial_state} out of range")));
    }
    check_paths(n_paths, 2)?;
    let sampler = ChainSampler::new(rate);
    let stats = parallel_paths(n_paths, 1, |idx, out| {
        let chain = sampler.sample(initial_state, horizon, &mut path_rng(seed, idx));
        let occ = occupation_times(&chain);
        out[0] = occ.times().iter().zip(u).map(|(j, u)| j * u).sum::<f64>().exp();
    });
    Ok(stats[0].into())
}

/// Per-state constants of the Esscher density.
struct DensityTerms {
    theta_c_sigma: Vec<f64>,
    theta_j: Vec<f64>,
    /// `½(θ^c σ)² + λ (M(θ^J) - 1)`.
    compensator: Vec<f64>,
}

fn density_terms(regimes: &RegimeSet, spec: &JumpSpec, params: &EsscherParams) -> Result<DensityTerms> {
    if params.len() != regimes.len() || params.theta_j.len() != regimes.len() {
        return Err(Error::InvalidInput("Esscher parameters do not match the regime count".into()));
    }
    let mut terms = DensityTerms { theta_c_sigma: vec![], theta_j: vec![], compensator: vec![] };
    for (i, r) in regimes.states().iter().enumerate() {
        let a = params.theta_c[i] * r.sigma;
        let tj = params.theta_j[i];
        let jump = if r.lambda == 0.0 { 0.0 } else { r.lambda * (spec.moment(tj)? - 1.0) };
        terms.theta_c_sigma.push(a);
        terms.theta_j.push(tj);
        terms.compensator.push(0.5 * a * a + jump);
    }
    Ok(terms)
}

/// One physical-measure path: returns `(ln S_T/s0, ∫(r^d - r^f), ln L_T)`.
fn physical_with_density<R: Rng + ?Sized>(
    dyns: &[StateDynamics],
    terms: &DensityTerms,
    chain: &ChainPath,
    rng: &mut R,
) -> (f64, f64, f64) {
    let mut x = 0.0;
    let mut integral = 0.0;
    let mut log_l = 0.0;
    for &(i, tau) in chain.sojourns() {
        let d = &dyns[i];
        let z: f64 = rng.sample(StandardNormal);
        let dw = tau.sqrt() * z;
        x += (d.drift - 0.5 * d.sigma * d.sigma) * tau + d.sigma * dw;
        log_l += terms.theta_c_sigma[i] * dw - terms.compensator[i] * tau;
        let n = poisson_count(d.lambda * tau, rng);
        for _ in 0..n {
            let lz = d.law.sample_log(rng);
            x += lz;
            log_l += terms.theta_j[i] * lz;
        }
        integral += d.spread * tau;
    }
    (x, integral, log_l)
}

/// Monte Carlo mean of the Esscher density `L_T` along physical paths; 1
/// for every in-domain parameter set.
#[allow(clippy::too_many_arguments)]
pub fn check_esscher_density(
    regimes: &RegimeSet,
    rate: &RateMatrix,
    spec: &JumpSpec,
    params: &EsscherParams,
    horizon: f64,
    initial_state: usize,
    n_paths: u64,
    seed: u64,
) -> Result<McEstimate> {
    check_common(rate, regimes, initial_state, horizon)?;
    check_paths(n_paths, 2)?;
    let dyns = dynamics(regimes, spec, MeasureTag::Physical)?;
    let terms = density_terms(regimes, spec, params)?;
    let sampler = ChainSampler::new(rate);
    let stats = parallel_paths(n_paths, 1, |idx, out| {
        let mut rng = path_rng(seed, idx);
        let chain = sampler.sample(initial_state, horizon, &mut rng);
        let (_, _, log_l) = physical_with_density(&dyns, &terms, &chain, &mut rng);
        out[0] = log_l.exp();
    });
    Ok(stats[0].into())
}

/// Call price from physical paths reweighted by the Esscher density.
#[allow(clippy::too_many_arguments)]
pub fn reweighted_price(
    s0: f64,
    k: f64,
    t: f64,
    regimes: &RegimeSet,
    rate: &RateMatrix,
    spec: &JumpSpec,
    params: &EsscherParams,
    initial_state: usize,
    n_paths: u64,
    seed: u64,
) -> Result<PriceResult> {
    check_common(rate, regimes, initial_state, t)?;
    check_paths(n_paths, 100)?;
    if !(s0.is_finite() && s0 > 0.0 && k.is_finite() && k >= 0.0) {
        return Err(Error::InvalidInput("spot must be > 0 and strike >= 0".into()));
    }
    let dyns = dynamics(regimes, spec, MeasureTag::Physical)?;
    let terms = density_terms(regimes, spec, params)?;
    let sampler = ChainSampler::new(rate);
    let stats = parallel_paths(n_paths, 1, |idx, out| {
        let mut rng = path_rng(seed, idx);
        let chain = sampler.sample(initial_state, t, &mut rng);
        let (x, integral, log_l) = physical_with_density(&dyns, &terms, &chain, &mut rng);
        out[0] = (log_l - integral).exp() * (s0 * x.exp() - k).max(0.0);
    });
    Ok(PriceResult { price: stats[0].mean(), std_error: stats[0].std_error(), n_paths, series_truncation: 0 })
}

/// Outcome of one statistical check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub estimate: f64,
    pub target: f64,
    pub std_error: f64,
    pub z_score: f64,
    pub pass: bool,
}

impl CheckOutcome {
    /// Passes when `|estimate - target| <= 3 std_error`; with zero error the
    /// two must agree to `1e-10` relative.
    pub fn new(name: impl Into<String>, estimate: f64, target: f64, std_error: f64) -> Self {
        let diff = estimate - target;
        let (z_score, pass) = if std_error > 0.0 {
            let z = diff / std_error;
            (z, z.abs() <= 3.0)
        } else {
            let ok = diff.abs() <= 1e-10 * target.abs().max(1.0);
            (if diff == 0.0 { 0.0 } else { f64::INFINITY.copysign(diff) }, ok)
        };
        CheckOutcome { name: name.into(), estimate, target, std_error, z_score, pass: pass && estimate.is_finite() }
    }
}

/// Key-value text report of several checks.
pub fn check_report(checks: &[CheckOutcome]) -> String {
    let mut out = String::new();
    for c in checks {
        let _ = writeln!(out, "{}.estimate = {:.12e}", c.name, c.estimate);
        let _ = writeln!(out, "{}.target = {:.12e}", c.name, c.target);
        let _ = writeln!(out, "{}.std_error = {:.6e}", c.name, c.std_error);
        let _ = writeln!(out, "{}.z_score = {:.4}", c.name, c.z_score);
        let _ = writeln!(out, "{}.result = {}", c.name, if c.pass { "pass" } else { "fail" });
    }
    let all = checks.iter().all(|c| c.pass);
    let _ = writeln!(out, "overall = {}", if all { "pass" } else { "fail" });
    out
}
