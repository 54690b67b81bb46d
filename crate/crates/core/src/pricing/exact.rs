//! Conditional price under the exact jump-size law.
//!
//! Conditional on the occupation times, the jump part of `ln S_T` is a
//! compound Poisson sum with `N ~ Poisson(Σ λ*_i J_i)` jumps drawn from the
//! intensity-weighted mixture of the tilted laws. For exponential laws,
//!
//! ```text
//! ln Z = -ln θ̃ + ln E,   E ~ Exp(1)
//! C    = Σ_M Pois(M) Σ_{m ⊢ M} mult(m; w) ∫ BS(s e^{-D̄T + c(m) + y}, k, T, Ū, R̄) g_M(y) dy
//! ```
//!
//! where `g_M` is the density of the log of a product of `M` independent
//! standard exponentials and `c(m) = -Σ m_g ln θ̃_g`. `g_M` is tabulated once
//! by direct convolution; the inner integral is a trapezoid sum, which
//! converges geometrically because the integrand is analytic in a strip.

use std::sync::OnceLock;

use libm::lgamma as ln_gamma;

use super::black_scholes::{bs_call, norm_cdf};
use super::quantities::RegimeQuantities;
use super::series::{poisson_tail, poisson_weights};
use crate::error::{Error, Result};
use crate::esscher::JumpSpec;

/// Largest jump count the tabulated densities support.
pub const MAX_EXACT_JUMPS: usize = 64;

const H: f64 = 0.025;
const KERNEL_LO: f64 = -40.0;
const KERNEL_HI: f64 = 3.75;
const Y_LO: f64 = KERNEL_LO - 4.0 * MAX_EXACT_JUMPS as f64;
const Y_HI: f64 = 0.9 * MAX_EXACT_JUMPS as f64 + 25.0;
/// Absolute truncation target for the neglected Poisson tail, per unit spot.
const TAIL_TOL: f64 = 1e-13;
/// Terms below this probability mass per unit spot are skipped.
const TERM_TOL: f64 = 1e-18;
const D1_CUT: f64 = -10.0;
/// Above this `d2` both normal CDFs round to 1 and the payoff is linear.
const D2_LINEAR: f64 = 8.5;

struct LogProductTable {
    /// `dens[m - 1][i]` is `g_m(Y_LO + i H)`.
    dens: Vec<Vec<f64>>,
    first: Vec<usize>,
    last: Vec<usize>,
    /// `tail0[m - 1][i] = Σ_{j ≥ i} g_m(y_j)` and `tail1` the same with
    /// weight `e^{y_j}`, summed up to `last`.
    tail0: Vec<Vec<f64>>,
    tail1: Vec<Vec<f64>>,
}

fn log_exp_density(y: f64) -> f64 {
    (y - y.exp()).exp()
}

fn build_table() -> LogProductTable {
    let n = ((Y_HI - Y_LO) / H).round() as usize + 1;
    let nk = ((KERNEL_HI - KERNEL_LO) / H).round() as usize + 1;
    let off = (KERNEL_LO / H).round() as isize;
    let kernel: Vec<f64> = (0..nk).map(|j| H * log_exp_density(KERNEL_LO + j as f64 * H)).collect();
    let first_dens: Vec<f64> = (0..n).map(|i| log_exp_density(Y_LO + i as f64 * H)).collect();

    let mut dens = vec![first_dens];
    for _ in 1..MAX_EXACT_JUMPS {
        let prev = dens.last().expect("non-empty");
        // values below 1e-40 cannot move the result by a relevant amount
        let lo = prev.iter().position(|&v| v > 1e-40).unwrap_or(0) as isize;
        let hi = prev.iter().rposition(|&v| v > 1e-40).unwrap_or(0) as isize;
        let mut next = vec![0.0; n];
        for (i, out) in next.iter_mut().enumerate() {
            // prev index p = i - j - off  (y_i - t_j relative to Y_LO)
            let base = i as isize - off;
            let j_lo = (base - hi).max(0);
            let j_hi = (base - lo).min(nk as isize - 1);
            if j_lo > j_hi {
                continue;
            }
            let mut acc = 0.0;
            for j in j_lo..=j_hi {
                acc += kernel[j as usize] * prev[(base - j) as usize];
            }
            *out = acc;
        }
        dens.push(next);
    }

    let mut first = Vec::with_capacity(MAX_EXACT_JUMPS);
    let mut last = Vec::with_capacity(MAX_EXACT_JUMPS);
    for d in &dens {
        first.push(d.iter().position(|&v| v > 1e-300).unwrap_or(0));
        let mode = d.iter().enumerate().fold(0, |b, (i, &v)| if v > d[b] { i } else { b });
        let tail = (mode..n).find(|&i| d[i] * (Y_LO + i as f64 * H).exp() < 1e-25).unwrap_or(n - 1);
        last.push(tail);
    }
    let mut tail0 = Vec::with_capacity(MAX_EXACT_JUMPS);
    let mut tail1 = Vec::with_capacity(MAX_EXACT_JUMPS);
    for (d, &end) in dens.iter().zip(&last) {
        let mut t0 = vec![0.0; end + 2];
        let mut t1 = vec![0.0; end + 2];
        for i in (0..=end).rev() {
            t0[i] = t0[i + 1] + d[i];
            t1[i] = t1[i + 1] + (Y_LO + i as f64 * H).exp() * d[i];
        }
        tail0.push(t0);
        tail1.push(t1);
    }
    LogProductTable { dens, first, last, tail0, tail1 }
}

fn table() -> &'static LogProductTable {
    static TABLE: OnceLock<LogProductTable> = OnceLock::new();
    TABLE.get_or_init(build_table)
}

/// Grid value of the tabulated density of `ln(E_1 ⋯ E_m)`, for tests and
/// diagnostics: returns `(y, g_m(y))` pairs on the internal grid.
pub fn log_product_density(m: usize) -> Result<Vec<(f64, f64)>> {
    if m == 0 || m > MAX_EXACT_JUMPS {
        return Err(Error::InvalidInput(format!("jump count {m} outside 1..={MAX_EXACT_JUMPS}")));
    }
    let d = &table().dens[m - 1];
    Ok(d.iter().enumerate().map(|(i, &v)| (Y_LO + i as f64 * H, v)).collect())
}

/// `∫ BS(s e^y, k, t, var, r) g_m(y) dy` by a trapezoid sum. Where the
/// payoff is linear in `e^y` the tail sums of the table are used.
fn mixed_call(m: usize, s: f64, k: f64, t: f64, var: f64, r: f64) -> f64 {
    let tab = table();
    let d = &tab.dens[m - 1];
    let v = (var * t).sqrt();
    let disc_k = k * (-r * t).exp();
    let a = (s / k).ln() + (r + 0.5 * var) * t;
    let y_left = D1_CUT * v - a;
    let start = (((y_left - Y_LO) / H).ceil().max(0.0) as usize).max(tab.first[m - 1]);
    let end = tab.last[m - 1];
    if start > end {
        return 0.0;
    }
    let y_lin = (D2_LINEAR + v) * v - a;
    let lin = (((y_lin - Y_LO) / H).ceil().max(0.0) as usize).clamp(start, end + 1);
    let mut acc = 0.0;
    for (i, g) in d.iter().enumerate().take(lin).skip(start) {
        let y = Y_LO + i as f64 * H;
        let d1 = (a + y) / v;
        acc += (s * y.exp() * norm_cdf(d1) - disc_k * norm_cdf(d1 - v)).max(0.0) * g;
    }
    acc += s * tab.tail1[m - 1][lin] - disc_k * tab.tail0[m - 1][lin];
    acc * H
}

/// Calls `f` with every composition of `total` into `parts` non-negative
/// integers.
fn for_each_composition(total: usize, parts: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(rest: usize, slot: usize, buf: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if slot + 1 == buf.len() {
            buf[slot] = rest;
            f(buf);
            return;
        }
        for m in 0..=rest {
            buf[slot] = m;
            rec(rest - m, slot + 1, buf, f);
        }
    }
    let mut buf = vec![0; parts];
    rec(total, 0, &mut buf, f);
}

/// Number of jump-count terms needed so that the neglected tail is below
/// `1e-13 · s`; the bound is the Poisson tail at the compensated mean.
pub fn exact_truncation(s: f64, t: f64, lambda_bar_star: f64) -> usize {
    let mean = t * lambda_bar_star;
    if mean == 0.0 {
        return 0;
    }
    let mut m = 0;
    while s * poisson_tail(mean, m) >= TAIL_TOL && m <= MAX_EXACT_JUMPS {
        m += 1;
    }
    m
}

/// Conditional call price under the exact jump law; returns the price and
/// the highest jump count summed.
pub fn exact_conditional_price(s: f64, k: f64, t: f64, q: &RegimeQuantities) -> Result<(f64, usize)> {
    for (name, v) in [("spot", s), ("strike", k), ("maturity", t)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidInput(format!("{name} must be finite and > 0, got {v}")));
        }
    }
    let m_max = exact_truncation(s, t, q.lambda_bar_star);
    if m_max > MAX_EXACT_JUMPS {
        return Err(Error::Unsupported(format!(
            "expected jump count {:.1} needs more than {MAX_EXACT_JUMPS} terms; use the lognormal kernel",
            t * q.lambda_bar_star
        )));
    }
    Ok((exact_sum(s, k, t, q, m_max), m_max))
}

pub(crate) fn exact_sum(s: f64, k: f64, t: f64, q: &RegimeQuantities, m_max: usize) -> f64 {
    let s0 = s * (-q.drift_comp * t).exp();
    let count_mean = t * q.lambda_bar_j;
    let pois = poisson_weights(count_mean, m_max);
    let mut total = pois[0] * bs_call(s0, k, t, q.u_bar, q.r_bar);
    if count_mean == 0.0 || m_max == 0 {
        return total;
    }
    let weights: Vec<f64> = q.jumps.iter().map(|c| c.intensity / q.lambda_bar_j).collect();
    let ln_w: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
    let shifts: Vec<f64> = q
        .jumps
        .iter()
        .map(|c| match c.law {
            JumpSpec::Exponential { rate } => -rate.ln(),
            JumpSpec::PointMass { value } => value.ln(),
        })
        .collect();
    let continuous = matches!(q.jumps.first().map(|c| c.law), Some(JumpSpec::Exponential { .. }));

    for (m, &pm) in pois.iter().enumerate().take(m_max + 1).skip(1) {
        if pm * s0.max(s) < TERM_TOL {
            continue;
        }
        let ln_mf = ln_gamma(m as f64 + 1.0);
        let mut term = 0.0;
        for_each_composition(m, weights.len(), &mut |parts| {
            let mut ln_p = ln_mf;
            let mut shift = 0.0;
            for (g, &c) in parts.iter().enumerate() {
                if c > 0 {
                    ln_p += c as f64 * ln_w[g] - ln_gamma(c as f64 + 1.0);
                    shift += c as f64 * shifts[g];
                }
            }
            let p = ln_p.exp();
            if p * pm * s0 < TERM_TOL {
                return;
            }
            let se = s0 * shift.exp();
            let v = if continuous {
                mixed_call(m, se, k, t, q.u_bar, q.r_bar)
            } else {
                bs_call(se, k, t, q.u_bar, q.r_bar)
            };
            term += p * v;
        });
        total += pm * term;
    }
    total
}
