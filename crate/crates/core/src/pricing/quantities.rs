//! Occupation-weighted regime averages.
//!
//! ```text
//! R̄    = Σ (r^d_i - r^f_i) J_i / T        Ū    = Σ σ_i² J_i / T
//! λ̄^J  = Σ λ*_i J_i / T                   λ̄*   = Σ (1 + k*_i) λ*_i J_i / T
//! D̄    = Σ λ*_i k*_i J_i / T              G    = Σ ln(1 + k*_i) J_i / T
//! ```

use crate::error::{Error, Result};
use crate::esscher::{JumpSpec, RiskNeutralRegimeSet};
use crate::markov_regime::{OccupationTimes, RegimeSet};

/// States sharing one risk-neutral jump law, with their pooled
/// occupation-averaged intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpComponent {
    pub law: JumpSpec,
    pub intensity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeQuantities {
    pub r_bar: f64,
    pub u_bar: f64,
    pub lambda_bar_j: f64,
    pub lambda_bar_star: f64,
    pub drift_comp: f64,
    pub log_gain: f64,
    /// Mixture of jump laws met along the path; intensities sum to
    /// `lambda_bar_j`.
    pub jumps: Vec<JumpComponent>,
}

/// Per-state constants and the state → jump-law grouping, built once per
/// model and reused for every occupation vector.
#[derive(Debug, Clone)]
pub(crate) struct QuantityPlan {
    spread: Vec<f64>,
    var: Vec<f64>,
    lambda: Vec<f64>,
    comp: Vec<f64>,
    drift: Vec<f64>,
    gain: Vec<f64>,
    group: Vec<usize>,
    laws: Vec<JumpSpec>,
}

impl QuantityPlan {
    pub(crate) fn new(regimes: &RegimeSet, rn: &RiskNeutralRegimeSet) -> Result<Self> {
        if regimes.len() != rn.len() {
            return Err(Error::InvalidInput(format!(
                "{} regimes but {} risk-neutral states",
                regimes.len(),
                rn.len()
            )));
        }
        let mut plan = QuantityPlan {
            spread: vec![],
            var: vec![],
            lambda: vec![],
            comp: vec![],
            drift: vec![],
            gain: vec![],
            group: vec![],
            laws: vec![],
        };
        for (r, s) in regimes.states().iter().zip(&rn.states) {
            plan.spread.push(r.rd - r.rf);
            plan.var.push(r.sigma * r.sigma);
            plan.lambda.push(s.lambda_star);
            plan.comp.push((1.0 + s.k_star) * s.lambda_star);
            plan.drift.push(s.lambda_star * s.k_star);
            plan.gain.push(s.k_star.ln_1p());
            let g = match plan.laws.iter().position(|l| *l == s.tilted) {
                Some(g) => g,
                None => {
                    plan.laws.push(s.tilted);
                    plan.laws.len() - 1
                }
            };
            plan.group.push(g);
        }
        Ok(plan)
    }

    pub(crate) fn len(&self) -> usize {
        self.spread.len()
    }

    /// Largest compensated intensity over the states.
    pub(crate) fn max_compensated_intensity(&self) -> f64 {
        self.comp.iter().copied().fold(0.0, f64::max)
    }

    pub(crate) fn evaluate(&self, j: &[f64], horizon: f64) -> RegimeQuantities {
        let mut q = RegimeQuantities {
            r_bar: 0.0,
            u_bar: 0.0,
            lambda_bar_j: 0.0,
            lambda_bar_star: 0.0,
            drift_comp: 0.0,
            log_gain: 0.0,
            jumps: self.laws.iter().map(|&law| JumpComponent { law, intensity: 0.0 }).collect(),
        };
        for (i, &ji) in j.iter().enumerate() {
            if ji == 0.0 {
                continue;
            }
            let w = ji / horizon;
            q.r_bar += self.spread[i] * w;
            q.u_bar += self.var[i] * w;
            q.lambda_bar_j += self.lambda[i] * w;
            q.lambda_bar_star += self.comp[i] * w;
            q.drift_comp += self.drift[i] * w;
            q.log_gain += self.gain[i] * w;
            q.jumps[self.group[i]].intensity += self.lambda[i] * w;
        }
        q.jumps.retain(|c| c.intensity > 0.0);
        q
    }
}

/// Regime averages over one occupation-time vector.
pub fn regime_quantities(
    j: &OccupationTimes,
    regimes: &RegimeSet,
    rn: &RiskNeutralRegimeSet,
) -> Result<RegimeQuantities> {
    let plan = QuantityPlan::new(regimes, rn)?;
    if j.len() != plan.len() {
        return Err(Error::InvalidInput(format!("{} occupation times for {} states", j.len(), plan.len())));
    }
    if j.horizon().is_nan() || j.horizon() <= 0.0 {
        return Err(Error::InvalidInput("occupation horizon must be > 0".into()));
    }
    Ok(plan.evaluate(j.times(), j.horizon()))
}
