//! Martingale calibration of the regime-switching Esscher parameters.
//!
//! ```text
//! residual_i = r^f_i - r^d_i + μ_i + θ^c_i σ_i² + λ_i [M(θ^J_i + 1) - M(θ^J_i)]
//! θ^c_i      = (r^d_i - r^f_i - μ_i - K0) / σ_i²
//! θ^J_i      : M(θ^J_i + 1) - M(θ^J_i) = K0 / λ_i
//! ```

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::jump::{mean_jump_size, risk_neutral_intensity, JumpSpec};
use crate::error::{Error, Result};
use crate::markov_regime::RegimeSet;

const BRACKET_EPS: f64 = 1e-8;
const BRACKET_START: f64 = 8.0;
const BRACKET_MAX: f64 = 64.0;
const ROOT_TOL: f64 = 1e-12;
/// Tolerance of the martingale check in [`to_risk_neutral`].
pub const MARTINGALE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsscherParams {
    pub theta_c: Vec<f64>,
    pub theta_j: Vec<f64>,
    pub k0: f64,
}

impl EsscherParams {
    pub fn len(&self) -> usize {
        self.theta_c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta_c.is_empty()
    }

    /// The identity transform.
    pub fn identity(n: usize) -> Self {
        Self { theta_c: vec![0.0; n], theta_j: vec![0.0; n], k0: 0.0 }
    }

    fn check_against(&self, regimes: &RegimeSet, spec: &JumpSpec) -> Result<()> {
        if self.theta_c.len() != regimes.len() || self.theta_j.len() != regimes.len() {
            return Err(Error::InvalidInput(format!(
                "Esscher parameters have {}/{} entries for {} states",
                self.theta_c.len(),
                self.theta_j.len(),
                regimes.len()
            )));
        }
        if !self.k0.is_finite() {
            return Err(Error::InvalidInput("K0 must be finite".into()));
        }
        for (i, (&c, &j)) in self.theta_c.iter().zip(&self.theta_j).enumerate() {
            if !c.is_finite() || !j.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite Esscher parameter in state {i}")));
            }
            if j <= spec.moment_lower_bound() {
                return Err(Error::Domain { order: j, spec: spec.to_string() });
            }
        }
        Ok(())
    }
}

/// `g(t) = M(t + 1) - M(t)`.
fn jump_bracket(spec: &JumpSpec, t: f64) -> Result<f64> {
    Ok(spec.moment(t + 1.0)? - spec.moment(t)?)
}

/// Martingale residual of state `state` (1/year); zero iff the discounted
/// spot rate is a martingale there.
pub fn martingale_residual(
    regimes: &RegimeSet,
    params: &EsscherParams,
    spec: &JumpSpec,
    state: usize,
) -> Result<f64> {
    params.check_against(regimes, spec)?;
    if state >= regimes.len() {
        return Err(Error::InvalidInput(format!("state {state} out of range")));
    }
    let r = regimes.state(state);
    let jumps = if r.lambda == 0.0 { 0.0 } else { r.lambda * jump_bracket(spec, params.theta_j[state])? };
    Ok(r.rf - r.rd + r.mu + params.theta_c[state] * r.sigma * r.sigma + jumps)
}

/// Brent's method on a sign-changing bracket, run until the bracket collapses
/// to a few ulps; errors if the final `|f|` exceeds `tol`.
fn brent<F: Fn(f64) -> Result<f64>>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..500 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let xtol = 2.0 * f64::EPSILON * b.abs() + 1e-300;
        let m = 0.5 * (c - b);
        if fb == 0.0 || m.abs() <= xtol {
            break;
        }
        if e.abs() >= xtol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (xtol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > xtol { d } else { xtol.copysign(m) };
        fb = f(b)?;
    }
    if fb.abs() > tol {
        return Err(Error::InvalidInput(format!("root search stalled at {b} with |f| = {:e}", fb.abs())));
    }
    Ok(b)
}

fn solve_jump_parameter(spec: &JumpSpec, target: f64, state: usize) -> Result<f64> {
    let g = |t: f64| jump_bracket(spec, t);
    match *spec {
        JumpSpec::PointMass { value: 1.0 } => {
            if target == 0.0 {
                Ok(0.0)
            } else {
                Err(Error::Unbracketable { state, target, attainable_low: 0.0, attainable_high: 0.0 })
            }
        }
        JumpSpec::PointMass { .. } => {
            let (lo, hi) = (-BRACKET_MAX, BRACKET_MAX);
            let (glo, ghi) = (g(lo)?, g(hi)?);
            let (low, high) = (glo.min(ghi), glo.max(ghi));
            if !(low..=high).contains(&target) {
                return Err(Error::Unbracketable { state, target, attainable_low: low, attainable_high: high });
            }
            brent(|t| Ok(g(t)? - target), lo, hi, ROOT_TOL * target.abs().max(1.0))
        }
        JumpSpec::Exponential { .. } => {
            let lo = -1.0 + BRACKET_EPS;
            let glo = g(lo)?;
            let mut hi = BRACKET_START;
            let mut ghi = g(hi)?;
            while ghi < target && hi < BRACKET_MAX {
                hi = (2.0 * hi).min(BRACKET_MAX);
                ghi = g(hi)?;
            }
            if !(glo..=ghi).contains(&target) {
                return Err(Error::Unbracketable { state, target, attainable_low: glo, attainable_high: ghi });
            }
            brent(|t| Ok(g(t)? - target), lo, hi, ROOT_TOL * target.abs().max(1.0))
        }
    }
}

/// Solves the martingale condition state by state for a given `K0`.
pub fn solve_esscher(regimes: &RegimeSet, spec: &JumpSpec, k0: f64) -> Result<EsscherParams> {
    spec.validate()?;
    if !k0.is_finite() {
        return Err(Error::InvalidInput(format!("K0 must be finite, got {k0}")));
    }
    let n = regimes.len();
    let mut theta_c = Vec::with_capacity(n);
    let mut theta_j = Vec::with_capacity(n);
    for (i, r) in regimes.states().iter().enumerate() {
        theta_c.push((r.rd - r.rf - r.mu - k0) / (r.sigma * r.sigma));
        if r.lambda == 0.0 {
            if k0 != 0.0 {
                return Err(Error::ZeroIntensity { state: i, k0 });
            }
            theta_j.push(0.0);
        } else {
            theta_j.push(solve_jump_parameter(spec, k0 / r.lambda, i)?);
        }
    }
    Ok(EsscherParams { theta_c, theta_j, k0 })
}

/// Per-state dynamics under the transformed measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskNeutralState {
    pub theta_c: f64,
    pub theta_j: f64,
    /// `λ^{θ,J} = λ · M(θ^J)`.
    pub lambda_star: f64,
    /// `k^{θ,J} = M(θ^J + 1) / M(θ^J) - 1`.
    pub k_star: f64,
    /// Jump law under the transformed measure.
    pub tilted: JumpSpec,
    /// Diffusion drift `μ + θ^c σ²`; equals `r^d - r^f - λ* k*` once calibrated.
    pub drift: f64,
    /// Martingale residual (1/year).
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskNeutralRegimeSet {
    pub states: Vec<RiskNeutralState>,
    pub k0: f64,
}

impl RiskNeutralRegimeSet {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, i: usize) -> &RiskNeutralState {
        &self.states[i]
    }

    pub fn max_abs_residual(&self) -> f64 {
        self.states.iter().map(|s| s.residual.abs()).fold(0.0, f64::max)
    }
}

/// Dynamics under the measure induced by arbitrary in-domain parameters,
/// without requiring the martingale condition.
pub fn esscher_dynamics(
    regimes: &RegimeSet,
    params: &EsscherParams,
    spec: &JumpSpec,
) -> Result<RiskNeutralRegimeSet> {
    params.check_against(regimes, spec)?;
    let mut states = Vec::with_capacity(regimes.len());
    for (i, r) in regimes.states().iter().enumerate() {
        let tj = params.theta_j[i];
        let tc = params.theta_c[i];
        let k_star = mean_jump_size(tj, spec)?;
        states.push(RiskNeutralState {
            theta_c: tc,
            theta_j: tj,
            lambda_star: risk_neutral_intensity(r.lambda, tj, spec)?,
            k_star,
            tilted: spec.tilted(tj)?,
            drift: r.mu + tc * r.sigma * r.sigma,
            residual: martingale_residual(regimes, params, spec, i)?,
        });
    }
    Ok(RiskNeutralRegimeSet { states, k0: params.k0 })
}

/// Risk-neutral dynamics; rejects parameters whose martingale residual
/// exceeds [`MARTINGALE_TOL`] in any state.
pub fn to_risk_neutral(
    regimes: &RegimeSet,
    params: &EsscherParams,
    spec: &JumpSpec,
) -> Result<RiskNeutralRegimeSet> {
    let rn = esscher_dynamics(regimes, params, spec)?;
    if let Some((state, s)) = rn.states.iter().enumerate().find(|(_, s)| s.residual.is_nan() || s.residual.abs() > MARTINGALE_TOL) {
        return Err(Error::NotMartingale { state, residual: s.residual });
    }
    Ok(rn)
}

/// Key-value calibration report, one block per state.
pub fn calibration_report(spec: &JumpSpec, rn: &RiskNeutralRegimeSet) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "jump_spec = {spec}");
    let _ = writeln!(out, "k0 = {}", rn.k0);
    let _ = writeln!(out, "states = {}", rn.len());
    for (i, s) in rn.states.iter().enumerate() {
        let tilde = match s.tilted {
            JumpSpec::Exponential { rate } => rate,
            JumpSpec::PointMass { value } => value,
        };
        let _ = writeln!(out, "state.{i}.theta_c = {:.17e}", s.theta_c);
        let _ = writeln!(out, "state.{i}.theta_j = {:.17e}", s.theta_j);
        let _ = writeln!(out, "state.{i}.lambda_star = {:.17e}", s.lambda_star);
        let _ = writeln!(out, "state.{i}.k_star = {:.17e}", s.k_star);
        let _ = writeln!(out, "state.{i}.theta_tilde = {:.17e}", tilde);
        let _ = writeln!(out, "state.{i}.residual = {:.3e}", s.residual);
    }
    let _ = writeln!(out, "max_abs_residual = {:.3e}", rn.max_abs_residual());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov_regime::RegimeParams;
    use approx::assert_relative_eq;

    fn regime(mu: f64, sigma: f64, lambda: f64, rd: f64, rf: f64) -> RegimeParams {
        RegimeParams { mu, sigma, lambda, rd, rf }
    }

    #[test]
    fn brent_finds_cubic_root() {
        let r = brent(|x| Ok(x * x * x - 2.0), 0.0, 2.0, 1e-14).unwrap();
        assert_relative_eq!(r, 2f64.cbrt(), epsilon = 1e-13);
    }

    #[test]
    fn k0_zero_with_unit_rate_gives_zero_theta_j() {
        let regimes = RegimeSet::new(vec![regime(0.02, 0.1, 1.0, 0.03, 0.01), regime(-0.01, 0.2, 2.0, 0.05, 0.02)]).unwrap();
        let spec = JumpSpec::exponential(1.0).unwrap();
        let p = solve_esscher(&regimes, &spec, 0.0).unwrap();
        for (i, r) in regimes.states().iter().enumerate() {
            assert!(p.theta_j[i].abs() < 1e-10, "{}", p.theta_j[i]);
            assert_eq!(p.theta_c[i], (r.rd - r.rf - r.mu) / (r.sigma * r.sigma));
        }
    }

    #[test]
    fn zero_intensity_needs_zero_k0() {
        let regimes = RegimeSet::new(vec![regime(0.0, 0.1, 0.0, 0.02, 0.01)]).unwrap();
        let spec = JumpSpec::exponential(3.0).unwrap();
        assert_eq!(solve_esscher(&regimes, &spec, 0.0).unwrap().theta_j, vec![0.0]);
        let err = solve_esscher(&regimes, &spec, 0.1).unwrap_err();
        assert!(matches!(err, Error::ZeroIntensity { state: 0, .. }));
        assert!(err.is_calibration());
    }

    #[test]
    fn unit_point_mass_only_accepts_zero_k0() {
        let regimes = RegimeSet::new(vec![regime(0.0, 0.1, 1.0, 0.02, 0.01)]).unwrap();
        let spec = JumpSpec::point_mass(1.0).unwrap();
        assert!(solve_esscher(&regimes, &spec, 0.0).is_ok());
        assert!(matches!(solve_esscher(&regimes, &spec, 0.1), Err(Error::Unbracketable { .. })));
    }

    #[test]
    fn point_mass_root() {
        let regimes = RegimeSet::new(vec![regime(0.0, 0.1, 2.0, 0.02, 0.01)]).unwrap();
        let spec = JumpSpec::point_mass(1.2).unwrap();
        let p = solve_esscher(&regimes, &spec, 0.3).unwrap();
        assert!(martingale_residual(&regimes, &p, &spec, 0).unwrap().abs() < 1e-12);
        let rn = to_risk_neutral(&regimes, &p, &spec).unwrap();
        assert_relative_eq!(rn.states[0].k_star * rn.states[0].lambda_star, 0.3, epsilon = 1e-12);
    }

    #[test]
    fn unattainable_target_reports_range() {
        let regimes = RegimeSet::new(vec![regime(0.0, 0.1, 1.0, 0.02, 0.01)]).unwrap();
        let spec = JumpSpec::exponential(2.0).unwrap();
        match solve_esscher(&regimes, &spec, 1e200) {
            Err(Error::Unbracketable { attainable_low, attainable_high, .. }) => {
                assert!(attainable_low < 0.0 && attainable_high > 1e60);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unchecked_parameters_rejected() {
        let regimes = RegimeSet::new(vec![regime(0.05, 0.2, 1.0, 0.02, 0.01)]).unwrap();
        let spec = JumpSpec::exponential(5.0).unwrap();
        let p = EsscherParams::identity(1);
        assert!(esscher_dynamics(&regimes, &p, &spec).is_ok());
        assert!(matches!(to_risk_neutral(&regimes, &p, &spec), Err(Error::NotMartingale { state: 0, .. })));
    }

    #[test]
    fn calibrated_drift_matches_rate_spread() {
        let regimes = RegimeSet::new(vec![regime(0.05, 0.2, 1.5, 0.04, 0.01)]).unwrap();
        let spec = JumpSpec::exponential(2.5).unwrap();
        let p = solve_esscher(&regimes, &spec, 0.2).unwrap();
        let rn = to_risk_neutral(&regimes, &p, &spec).unwrap();
        let s = rn.states[0];
        assert_relative_eq!(s.drift, 0.04 - 0.01 - s.lambda_star * s.k_star, epsilon = 1e-12);
    }

    #[test]
    fn report_lists_every_state() {
        let regimes = RegimeSet::new(vec![regime(0.0, 0.1, 1.0, 0.02, 0.01); 2]).unwrap();
        let spec = JumpSpec::exponential(5.0).unwrap();
        let rn = to_risk_neutral(&regimes, &solve_esscher(&regimes, &spec, 0.0).unwrap(), &spec).unwrap();
        let text = calibration_report(&spec, &rn);
        assert!(text.contains("state.1.theta_tilde"));
        assert!(text.contains("max_abs_residual"));
    }
}
