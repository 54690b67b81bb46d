//! Jump-size laws and their power-moment functional.
//!
//! ```text
//! M(a) = ∫ x^a ν(dx)
//! exponential(θ):  M(a) = Γ(a + 1) / θ^a,  a > -1,   Var[log Z] = π²/6
//! point mass z:    M(a) = z^a,                        Var[log Z] = 0
//! ```

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use libm::lgamma as ln_gamma;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JumpSpec {
    /// Z ~ Exp(rate), density `rate · e^{-rate·x}` on x > 0.
    Exponential { rate: f64 },
    /// Z = value almost surely.
    PointMass { value: f64 },
}

impl JumpSpec {
    pub fn exponential(rate: f64) -> Result<Self> {
        let s = JumpSpec::Exponential { rate };
        s.validate()?;
        Ok(s)
    }

    pub fn point_mass(value: f64) -> Result<Self> {
        let s = JumpSpec::PointMass { value };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let (name, v) = match *self {
            JumpSpec::Exponential { rate } => ("exponential rate", rate),
            JumpSpec::PointMass { value } => ("point-mass value", value),
        };
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidInput(format!("{name} must be finite and > 0, got {v}")));
        }
        Ok(())
    }

    /// Infimum of the orders `a` with a finite moment.
    pub fn moment_lower_bound(&self) -> f64 {
        match self {
            JumpSpec::Exponential { .. } => -1.0,
            JumpSpec::PointMass { .. } => f64::NEG_INFINITY,
        }
    }

    /// `ln M(a)`.
    pub fn ln_moment(&self, a: f64) -> Result<f64> {
        if a.is_nan() {
            return Err(Error::InvalidInput("moment order is NaN".into()));
        }
        match *self {
            JumpSpec::Exponential { rate } => {
                if a <= -1.0 {
                    return Err(Error::Domain { order: a, spec: self.to_string() });
                }
                if a == 0.0 {
                    return Ok(0.0);
                }
                Ok(ln_gamma(a + 1.0) - a * rate.ln())
            }
            JumpSpec::PointMass { value } => Ok(a * value.ln()),
        }
    }

    /// `M(a) = E[Z^a]`.
    pub fn moment(&self, a: f64) -> Result<f64> {
        Ok(self.ln_moment(a)?.exp())
    }

    /// `E[Z] = M(1)`.
    pub fn mean(&self) -> f64 {
        match *self {
            JumpSpec::Exponential { rate } => 1.0 / rate,
            JumpSpec::PointMass { value } => value,
        }
    }

    /// `Var[log Z]`; tilt-invariant for the exponential family.
    pub fn log_jump_variance(&self) -> f64 {
        match self {
            JumpSpec::Exponential { .. } => PI * PI / 6.0,
            JumpSpec::PointMass { .. } => 0.0,
        }
    }

    /// The law `x^t ν(dx) / M(t)`.
    pub fn tilted(&self, t: f64) -> Result<Self> {
        match *self {
            JumpSpec::Exponential { rate } => {
                if t <= -1.0 || t.is_nan() {
                    return Err(Error::Domain { order: t, spec: self.to_string() });
                }
                JumpSpec::exponential(rate / (t + 1.0))
            }
            JumpSpec::PointMass { .. } => Ok(*self),
        }
    }

    /// Draws `log Z`.
    pub fn sample_log<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            JumpSpec::Exponential { rate } => {
                let e: f64 = rng.sample(Exp1);
                e.max(f64::MIN_POSITIVE).ln() - rate.ln()
            }
            JumpSpec::PointMass { value } => value.ln(),
        }
    }
}

impl std::fmt::Display for JumpSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            JumpSpec::Exponential { rate } => write!(f, "exponential(rate={rate})"),
            JumpSpec::PointMass { value } => write!(f, "point_mass(z={value})"),
        }
    }
}

/// `λ · M(θ^J)`.
pub fn risk_neutral_intensity(lambda: f64, theta_j: f64, spec: &JumpSpec) -> Result<f64> {
    Ok(lambda * spec.moment(theta_j)?)
}

/// `M(θ^J + 1) / M(θ^J) - 1`.
pub fn mean_jump_size(theta_j: f64, spec: &JumpSpec) -> Result<f64> {
    Ok((spec.ln_moment(theta_j + 1.0)? - spec.ln_moment(theta_j)?).exp_m1())
}
