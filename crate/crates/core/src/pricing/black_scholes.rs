//! Black–Scholes call on a spot with no carry beyond the rate `r`.
//!
//! ```text
//! d1 = (ln(s/k) + (r + var/2) t) / sqrt(var t),   d2 = d1 - sqrt(var t)
//! C  = s N(d1) - k e^{-r t} N(d2)
//! ```

use std::f64::consts::SQRT_2;

use libm::erfc;

use crate::error::{Error, Result};

/// Standard normal CDF through `erfc`, accurate in both tails.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

pub(crate) fn bs_call(s: f64, k: f64, t: f64, var: f64, r: f64) -> f64 {
    let disc_k = k * (-r * t).exp();
    let v = (var * t).sqrt();
    if v == 0.0 {
        return (s - disc_k).max(0.0);
    }
    let d1 = ((s / k).ln() + (r + 0.5 * var) * t) / v;
    (s * norm_cdf(d1) - disc_k * norm_cdf(d1 - v)).max(0.0)
}

/// Call price; `var = 0` gives the discounted intrinsic value
/// `max(s - k e^{-rt}, 0)`.
pub fn black_scholes_call(s: f64, k: f64, t: f64, var: f64, r: f64) -> Result<f64> {
    for (name, v) in [("spot", s), ("strike", k), ("maturity", t)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidInput(format!("{name} must be finite and > 0, got {v}")));
        }
    }
    if !(var.is_finite() && var >= 0.0) {
        return Err(Error::InvalidInput(format!("variance must be finite and >= 0, got {var}")));
    }
    if !r.is_finite() {
        return Err(Error::InvalidInput(format!("rate must be finite, got {r}")));
    }
    Ok(bs_call(s, k, t, var, r))
}
