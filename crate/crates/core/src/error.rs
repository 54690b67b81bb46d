use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value violated a documented precondition or type invariant.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A moment integral diverges for the requested exponent.
    #[error("moment of order {order} diverges for {spec}")]
    Domain { order: f64, spec: String },

    /// The jump-part Esscher parameter could not be bracketed.
    #[error(
        "calibration failed in state {state}: target K0/lambda = {target} lies outside the \
         attainable range [{attainable_low}, {attainable_high}] of M(t+1) - M(t)"
    )]
    Unbracketable {
        state: usize,
        target: f64,
        attainable_low: f64,
        attainable_high: f64,
    },

    /// A jump-free state cannot absorb a non-zero K0.
    #[error("calibration infeasible in state {state}: jump intensity is zero but K0 = {k0} is not")]
    ZeroIntensity { state: usize, k0: f64 },

    /// Parameters do not make the discounted spot rate a martingale.
    #[error("martingale condition violated in state {state}: residual {residual:e}")]
    NotMartingale { state: usize, residual: f64 },

    /// The trend classifier never saw one or more prior regimes.
    #[error("regime(s) never observed as prior state: {}", .names.join(", "))]
    UnobservedRegimes {
        names: Vec<&'static str>,
        counts: crate::markov_regime::CountMatrix,
    },

    #[error("{0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures that come from the martingale calibration step.
    pub fn is_calibration(&self) -> bool {
        matches!(
            self,
            Error::Unbracketable { .. } | Error::ZeroIntensity { .. } | Error::NotMartingale { .. }
        )
    }
}
