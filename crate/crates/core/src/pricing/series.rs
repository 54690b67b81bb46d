//! Poisson-weighted Black–Scholes series with a lognormal jump kernel.
//!
//! ```text
//! C = Σ_{m=0}^{m_max} Pois(m; T λ̄*) · BS(s, k, T, Ū + m σ_J²/T, R̄ - D̄ + m G/T)
//! ```

use libm::lgamma as ln_gamma;

use super::black_scholes::bs_call;
use super::quantities::RegimeQuantities;
use crate::error::{Error, Result};

/// Series cap `⌈μ + 12√μ⌉ + 20` for a Poisson mean `μ`.
pub fn series_cap(mean: f64) -> usize {
    (mean + 12.0 * mean.sqrt()).ceil() as usize + 20
}

/// `P(N = m)` for `N ~ Poisson(mean)`.
pub fn poisson_pmf(mean: f64, m: usize) -> f64 {
    if mean == 0.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    let m = m as f64;
    (-mean + m * mean.ln() - ln_gamma(m + 1.0)).exp()
}

/// `P(N = 0), ..., P(N = m_max)`.
pub fn poisson_weights(mean: f64, m_max: usize) -> Vec<f64> {
    if mean >= 700.0 {
        return (0..=m_max).map(|m| poisson_pmf(mean, m)).collect();
    }
    let mut w = Vec::with_capacity(m_max + 1);
    let mut p = (-mean).exp();
    w.push(p);
    for m in 1..=m_max {
        p *= mean / m as f64;
        w.push(p);
    }
    w
}

/// `P(N > m)` summed directly over the upper tail.
pub fn poisson_tail(mean: f64, m: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    let mut total = 0.0;
    let mut j = m + 1;
    let mut term = poisson_pmf(mean, j);
    loop {
        total += term;
        j += 1;
        let next = term * mean / j as f64;
        if (j as f64 > mean && next <= total * 1e-18) || next == 0.0 {
            break;
        }
        term = next;
    }
    total.min(1.0)
}

/// Chernoff bound `e^{-μ} (eμ/(m+1))^{m+1}` on `P(N > m)`.
pub fn poisson_tail_bound(mean: f64, m: usize) -> f64 {
    let n = (m + 1) as f64;
    if mean == 0.0 {
        return 0.0;
    }
    if n <= mean {
        return 1.0;
    }
    (-mean + n * (1.0 + (mean / n).ln())).exp().min(1.0)
}

/// Conditional price with jumps treated as lognormal with log-variance
/// `sigma_j_sq`.
pub fn merton_conditional_price(
    s: f64,
    k: f64,
    t: f64,
    q: &RegimeQuantities,
    sigma_j_sq: f64,
    m_max: usize,
) -> Result<f64> {
    for (name, v) in [("spot", s), ("strike", k), ("maturity", t)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidInput(format!("{name} must be finite and > 0, got {v}")));
        }
    }
    if !(sigma_j_sq.is_finite() && sigma_j_sq >= 0.0) {
        return Err(Error::InvalidInput(format!("jump log-variance must be >= 0, got {sigma_j_sq}")));
    }
    Ok(merton_sum(s, k, t, q, sigma_j_sq, m_max))
}

pub(crate) fn merton_sum(s: f64, k: f64, t: f64, q: &RegimeQuantities, sigma_j_sq: f64, m_max: usize) -> f64 {
    let mean = t * q.lambda_bar_star;
    if mean == 0.0 {
        return bs_call(s, k, t, q.u_bar, q.r_bar - q.drift_comp);
    }
    let mut total = 0.0;
    for (m, w) in poisson_weights(mean, m_max).into_iter().enumerate() {
        let mf = m as f64;
        let var = q.u_bar + mf * sigma_j_sq / t;
        let r = q.r_bar - q.drift_comp + mf * q.log_gain / t;
        total += w * bs_call(s, k, t, var, r);
    }
    total
}
