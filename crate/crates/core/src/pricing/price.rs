//! Outer expectation over occupation times.

use serde::{Deserialize, Serialize};

use super::exact::{exact_sum, exact_truncation, MAX_EXACT_JUMPS};
use super::quantities::{QuantityPlan, RegimeQuantities};
use super::series::{merton_sum, series_cap};
use crate::error::{Error, Result};
use crate::esscher::{solve_esscher, to_risk_neutral, JumpSpec, RiskNeutralRegimeSet};
use crate::markov_regime::{occupation_times, ChainSampler, RateMatrix, RegimeSet};
use crate::stats::{parallel_paths, path_rng};

/// How the conditional price sums over jump counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKernel {
    /// Jump sizes drawn from the tilted law itself.
    #[default]
    Exact,
    /// Merton's lognormal series with `σ_J² = Var[ln Z]`.
    Lognormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PriceResult {
    pub price: f64,
    pub std_error: f64,
    pub n_paths: u64,
    /// Highest jump count summed (worst case over paths).
    pub series_truncation: usize,
}

/// Everything besides the contract that determines a price.
#[derive(Debug, Clone, Copy)]
pub struct PricingModel<'a> {
    pub regimes: &'a RegimeSet,
    pub rate: &'a RateMatrix,
    pub rn: &'a RiskNeutralRegimeSet,
    pub kernel: SeriesKernel,
    pub initial_state: usize,
}

impl PricingModel<'_> {
    fn validate(&self) -> Result<()> {
        let n = self.regimes.len();
        if self.rate.len() != n || self.rn.len() != n {
            return Err(Error::InvalidInput(format!(
                "dimension mismatch: {n} regimes, {}x{} rate matrix, {} risk-neutral states",
                self.rate.len(),
                self.rate.len(),
                self.rn.len()
            )));
        }
        if self.initial_state >= n {
            return Err(Error::InvalidInput(format!("initial state {} out of range", self.initial_state)));
        }
        Ok(())
    }

    /// True when every path has the same occupation vector (up to states
    /// that are indistinguishable for pricing).
    fn deterministic_occupation(&self) -> bool {
        let n = self.regimes.len();
        let identical = (1..n).all(|i| {
            self.regimes.state(i) == self.regimes.state(0) && self.rn.state(i) == self.rn.state(0)
        });
        n == 1 || identical || self.rate.is_absorbing(self.initial_state)
    }
}

/// Conditional price for one occupation vector; returns the price and the
/// jump-count truncation used.
pub fn conditional_price(s: f64, k: f64, t: f64, q: &RegimeQuantities, kernel: SeriesKernel) -> Result<(f64, usize)> {
    match kernel {
        SeriesKernel::Exact => super::exact::exact_conditional_price(s, k, t, q),
        SeriesKernel::Lognormal => {
            let m_max = series_cap(t * q.lambda_bar_star);
            let sj = lognormal_variance(q);
            Ok((super::series::merton_conditional_price(s, k, t, q, sj, m_max)?, m_max))
        }
    }
}

fn lognormal_variance(q: &RegimeQuantities) -> f64 {
    q.jumps.first().map_or(0.0, |c| c.law.log_jump_variance())
}

fn validate_contract(s: f64, strikes: &[f64], t: f64, n_paths: u64) -> Result<()> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::InvalidInput(format!("spot must be finite and > 0, got {s}")));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidInput(format!("maturity must be finite and > 0, got {t}")));
    }
    if strikes.is_empty() {
        return Err(Error::InvalidInput("strike grid is empty".into()));
    }
    if let Some(k) = strikes.iter().find(|k| !(k.is_finite() && **k > 0.0)) {
        return Err(Error::InvalidInput(format!("strikes must be finite and > 0, got {k}")));
    }
    if n_paths == 0 {
        return Err(Error::InvalidInput("n_paths must be >= 1".into()));
    }
    Ok(())
}

/// Prices one call. Deterministic given `seed`; chains whose occupation
/// vector is certain skip the Monte Carlo layer (`n_paths = 1`,
/// `std_error = 0`).
pub fn price_call(s: f64, k: f64, t: f64, model: &PricingModel<'_>, n_paths: u64, seed: u64) -> Result<PriceResult> {
    Ok(price_strikes(s, &[k], t, model, n_paths, seed)?[0])
}

/// Prices several strikes on a shared set of chain paths.
pub fn price_strikes(
    s: f64,
    strikes: &[f64],
    t: f64,
    model: &PricingModel<'_>,
    n_paths: u64,
    seed: u64,
) -> Result<Vec<PriceResult>> {
    validate_contract(s, strikes, t, n_paths)?;
    model.validate()?;
    let plan = QuantityPlan::new(model.regimes, model.rn)?;
    let worst = t * plan.max_compensated_intensity();
    let cap = match model.kernel {
        SeriesKernel::Exact => {
            let m = exact_truncation(s, t, plan.max_compensated_intensity());
            if m > MAX_EXACT_JUMPS {
                return Err(Error::Unsupported(format!(
                    "expected jump count up to {worst:.1} needs more than {MAX_EXACT_JUMPS} terms; \
                     use the lognormal kernel"
                )));
            }
            m
        }
        SeriesKernel::Lognormal => series_cap(worst),
    };
    let eval = |q: &RegimeQuantities, k: f64| -> f64 {
        match model.kernel {
            SeriesKernel::Exact => exact_sum(s, k, t, q, exact_truncation(s, t, q.lambda_bar_star)),
            SeriesKernel::Lognormal => merton_sum(s, k, t, q, lognormal_variance(q), series_cap(t * q.lambda_bar_star)),
        }
    };

    if model.deterministic_occupation() {
        let mut j = vec![0.0; plan.len()];
        j[model.initial_state] = t;
        let q = plan.evaluate(&j, t);
        return Ok(strikes
            .iter()
            .map(|&k| PriceResult { price: eval(&q, k), std_error: 0.0, n_paths: 1, series_truncation: cap })
            .collect());
    }

    let sampler = ChainSampler::new(model.rate);
    let stats = parallel_paths(n_paths, strikes.len(), |idx, out| {
        let mut rng = path_rng(seed, idx);
        let path = sampler.sample(model.initial_state, t, &mut rng);
        let occ = occupation_times(&path);
        let q = plan.evaluate(occ.times(), t);
        for (o, &k) in out.iter_mut().zip(strikes) {
            *o = eval(&q, k);
        }
    });
    Ok(stats
        .iter()
        .map(|st| PriceResult {
            price: st.mean(),
            std_error: st.std_error(),
            n_paths,
            series_truncation: cap,
        })
        .collect())
}

/// One row of a price-versus-moneyness curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub s_over_k: f64,
    pub jump: PriceResult,
    pub no_jump: PriceResult,
}

/// Inputs of a jump / no-jump curve pair.
#[derive(Debug, Clone, Copy)]
pub struct CurveModel<'a> {
    pub regimes: &'a RegimeSet,
    pub rate: &'a RateMatrix,
    pub spec: JumpSpec,
    pub k0: f64,
    pub kernel: SeriesKernel,
    pub initial_state: usize,
}

/// Prices the calibrated jump model and its jump-free counterpart (all
/// intensities zero, recalibrated with `K0 = 0`) on the strikes
/// `s / x` for each moneyness `x` in `s_over_k`, sharing the seed.
pub fn price_curve(
    s: f64,
    s_over_k: &[f64],
    t: f64,
    model: &CurveModel<'_>,
    n_paths: u64,
    seed: u64,
) -> Result<Vec<CurvePoint>> {
    if let Some(x) = s_over_k.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(Error::InvalidInput(format!("moneyness must be finite and > 0, got {x}")));
    }
    let strikes: Vec<f64> = s_over_k.iter().map(|x| s / x).collect();

    let params = solve_esscher(model.regimes, &model.spec, model.k0)?;
    let rn = to_risk_neutral(model.regimes, &params, &model.spec)?;
    let flat = model.regimes.without_jumps();
    let flat_params = solve_esscher(&flat, &model.spec, 0.0)?;
    let flat_rn = to_risk_neutral(&flat, &flat_params, &model.spec)?;

    let jump = PricingModel {
        regimes: model.regimes,
        rate: model.rate,
        rn: &rn,
        kernel: model.kernel,
        initial_state: model.initial_state,
    };
    let no_jump = PricingModel { regimes: &flat, rn: &flat_rn, ..jump };
    let pj = price_strikes(s, &strikes, t, &jump, n_paths, seed)?;
    let pn = price_strikes(s, &strikes, t, &no_jump, n_paths, seed)?;
    Ok(s_over_k
        .iter()
        .zip(pj.into_iter().zip(pn))
        .map(|(&x, (jump, no_jump))| CurvePoint { s_over_k: x, jump, no_jump })
        .collect())
}

/// CSV with header `s_over_k,price_jump,stderr_jump,price_nojump,stderr_nojump`.
pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("s_over_k,price_jump,stderr_jump,price_nojump,stderr_nojump\n");
    for p in points {
        out.push_str(&format!(
            "{},{:.12},{:.12},{:.12},{:.12}\n",
            p.s_over_k, p.jump.price, p.jump.std_error, p.no_jump.price, p.no_jump.std_error
        ));
    }
    out
}
