use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Market parameters active while the chain sits in one state. Rates and
/// drift are per year, volatility per square-root year.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeParams {
    pub mu: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub rd: f64,
    pub rf: f64,
}

impl RegimeParams {
    fn validate(&self, i: usize) -> Result<()> {
        let all = [self.mu, self.sigma, self.lambda, self.rd, self.rf];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!("state {i}: non-finite parameter")));
        }
        if self.sigma <= 0.0 {
            return Err(Error::InvalidInput(format!("state {i}: sigma must be > 0")));
        }
        if self.lambda < 0.0 {
            return Err(Error::InvalidInput(format!("state {i}: lambda must be >= 0")));
        }
        if self.rd < 0.0 || self.rf < 0.0 {
            return Err(Error::InvalidInput(format!("state {i}: interest rates must be >= 0")));
        }
        Ok(())
    }

    /// Domestic minus foreign rate.
    pub fn rate_spread(&self) -> f64 {
        self.rd - self.rf
    }
}

/// Per-state parameters of an `n`-state chain.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeSet {
    states: Vec<RegimeParams>,
}

impl RegimeSet {
    pub fn new(states: Vec<RegimeParams>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidInput("regime set needs at least one state".into()));
        }
        for (i, s) in states.iter().enumerate() {
            s.validate(i)?;
        }
        Ok(Self { states })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, i: usize) -> &RegimeParams {
        &self.states[i]
    }

    pub fn states(&self) -> &[RegimeParams] {
        &self.states
    }

    /// Same chain with every jump intensity set to zero.
    pub fn without_jumps(&self) -> RegimeSet {
        RegimeSet {
            states: self
                .states
                .iter()
                .map(|s| RegimeParams { lambda: 0.0, ..*s })
                .collect(),
        }
    }
}

fn row_sum_tolerance(row_max: f64) -> f64 {
    1e-12 * row_max.max(1.0)
}

/// Generator of the continuous-time chain: `pi[i][j]` is the rate of
/// jumping from `i` to `j`, and rows sum to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    pi: DMatrix<f64>,
}

impl RateMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("rate matrix must be square and non-empty".into()));
        }
        let pi = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::from_matrix(pi)
    }

    pub fn from_matrix(pi: DMatrix<f64>) -> Result<Self> {
        let n = pi.nrows();
        if n == 0 || pi.ncols() != n {
            return Err(Error::InvalidInput("rate matrix must be square and non-empty".into()));
        }
        for i in 0..n {
            let mut sum = 0.0;
            let mut row_max: f64 = 0.0;
            for j in 0..n {
                let v = pi[(i, j)];
                if !v.is_finite() {
                    return Err(Error::InvalidInput(format!("rate matrix entry ({i},{j}) is not finite")));
                }
                if i != j && v < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "rate matrix entry ({i},{j}) = {v} is negative"
                    )));
                }
                sum += v;
                row_max = row_max.max(v.abs());
            }
            if sum.abs() > row_sum_tolerance(row_max) {
                return Err(Error::InvalidInput(format!("rate matrix row {i} sums to {sum:e}, not 0")));
            }
        }
        Ok(Self { pi })
    }

    /// The `n`-state chain that never moves.
    pub fn zeros(n: usize) -> Self {
        Self { pi: DMatrix::zeros(n, n) }
    }

    pub fn len(&self) -> usize {
        self.pi.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.nrows() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pi[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.pi
    }

    /// Total rate of leaving state `i` (sum of off-diagonal entries).
    pub fn exit_rate(&self, i: usize) -> f64 {
        (0..self.len()).filter(|&j| j != i).map(|j| self.pi[(i, j)]).sum()
    }

    pub fn is_absorbing(&self, i: usize) -> bool {
        self.exit_rate(i) == 0.0
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.len())
            .map(|i| (0..self.len()).map(|j| self.pi[(i, j)]).collect())
            .collect()
    }
}

/// One-step transition probabilities for a step of `dt` years.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    p: DMatrix<f64>,
    dt: f64,
}

impl TransitionMatrix {
    pub fn new(rows: Vec<Vec<f64>>, dt: f64) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("transition matrix must be square and non-empty".into()));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidInput(format!("transition step dt = {dt} must be > 0")));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(Error::InvalidInput(format!("transition row {i} has entries outside [0,1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidInput(format!("transition row {i} sums to {sum}, not 1")));
            }
        }
        let p = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Ok(Self { p, dt })
    }

    pub fn len(&self) -> usize {
        self.p.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.p.nrows() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[(i, j)]
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.len())
            .map(|i| (0..self.len()).map(|j| self.p[(i, j)]).collect())
            .collect()
    }

    /// Generator `(P - I) / dt`. Always a valid rate matrix because the
    /// off-diagonal probabilities are non-negative and rows of `P` sum to one.
    pub fn to_rate(&self) -> Result<RateMatrix> {
        let n = self.len();
        let pi = DMatrix::from_fn(n, n, |i, j| {
            let identity = if i == j { 1.0 } else { 0.0 };
            (self.p[(i, j)] - identity) / self.dt
        });
        RateMatrix::from_matrix(pi)
    }
}
