use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::Exp1;

use super::expm::expm;
use super::types::RateMatrix;
use crate::error::{Error, Result};
use crate::stats::path_rng;

/// A realised chain trajectory on `[0, horizon]` as consecutive sojourns.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainPath {
    n_states: usize,
    initial_state: usize,
    sojourns: Vec<(usize, f64)>,
    horizon: f64,
}

impl ChainPath {
    /// Builds a path from explicit sojourns. Durations must be positive and
    /// sum to the horizon (within 1e-12 relative).
    pub fn new(n_states: usize, sojourns: Vec<(usize, f64)>) -> Result<Self> {
        let Some(&(first, _)) = sojourns.first() else {
            return Err(Error::InvalidInput("chain path needs at least one sojourn".into()));
        };
        for &(s, d) in &sojourns {
            if s >= n_states {
                return Err(Error::InvalidInput(format!("state {s} out of range for {n_states} states")));
            }
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::InvalidInput(format!("sojourn duration {d} must be > 0")));
            }
        }
        let horizon = sojourns.iter().map(|s| s.1).sum();
        Ok(Self { n_states, initial_state: first, sojourns, horizon })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    pub fn sojourns(&self) -> &[(usize, f64)] {
        &self.sojourns
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn transitions(&self) -> usize {
        self.sojourns.len() - 1
    }

    pub fn final_state(&self) -> usize {
        self.sojourns.last().map(|s| s.0).unwrap_or(self.initial_state)
    }
}

/// Time spent in each state over the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationTimes {
    j: Vec<f64>,
    horizon: f64,
}

impl OccupationTimes {
    pub fn new(j: Vec<f64>, horizon: f64) -> Result<Self> {
        if j.is_empty() {
            return Err(Error::InvalidInput("occupation vector is empty".into()));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidInput(format!("occupation horizon {horizon} must be > 0")));
        }
        if j.iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
            return Err(Error::InvalidInput("occupation times must be finite and >= 0".into()));
        }
        let total: f64 = j.iter().sum();
        if (total - horizon).abs() > 1e-12 * horizon.max(1.0) {
            return Err(Error::InvalidInput(format!(
                "occupation times sum to {total}, horizon is {horizon}"
            )));
        }
        Ok(Self { j, horizon })
    }

    /// All time spent in `state`.
    pub fn frozen(n_states: usize, state: usize, horizon: f64) -> Self {
        let mut j = vec![0.0; n_states];
        j[state] = horizon;
        Self { j, horizon }
    }

    pub fn times(&self) -> &[f64] {
        &self.j
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.j.len()
    }

    pub fn is_empty(&self) -> bool {
        self.j.is_empty()
    }
}

/// Precomputed jump tables for repeated path sampling from one generator.
#[derive(Debug, Clone)]
pub struct ChainSampler {
    exit_rates: Vec<f64>,
    // cumulative off-diagonal rates per row, with the target state
    jumps: Vec<Vec<(f64, usize)>>,
}

impl ChainSampler {
    pub fn new(rate: &RateMatrix) -> Self {
        let n = rate.len();
        let mut exit_rates = Vec::with_capacity(n);
        let mut jumps = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = 0.0;
            let mut row = Vec::new();
            for j in (0..n).filter(|&j| j != i) {
                let r = rate.get(i, j);
                if r > 0.0 {
                    acc += r;
                    row.push((acc, j));
                }
            }
            exit_rates.push(acc);
            jumps.push(row);
        }
        Self { exit_rates, jumps }
    }

    pub fn n_states(&self) -> usize {
        self.exit_rates.len()
    }

    pub fn exit_rate(&self, i: usize) -> f64 {
        self.exit_rates[i]
    }

    /// Samples a path. Sojourns are drawn sequentially, so for a fixed
    /// generator state the path for a shorter horizon is a prefix of the
    /// path for a longer one.
    pub fn sample<R: Rng + ?Sized>(&self, initial_state: usize, horizon: f64, rng: &mut R) -> ChainPath {
        let mut sojourns = Vec::new();
        let mut state = initial_state;
        let mut t = 0.0;
        loop {
            let q = self.exit_rates[state];
            let remaining = horizon - t;
            if q <= 0.0 {
                sojourns.push((state, remaining));
                break;
            }
            let hold: f64 = rng.sample::<f64, _>(Exp1) / q;
            if hold >= remaining {
                sojourns.push((state, remaining));
                break;
            }
            if hold > 0.0 {
                sojourns.push((state, hold));
                t += hold;
            }
            let u = rng.random::<f64>() * q;
            let row = &self.jumps[state];
            state = row
                .iter()
                .find(|(cum, _)| u < *cum)
                .map(|&(_, j)| j)
                .unwrap_or(row[row.len() - 1].1);
        }
        ChainPath {
            n_states: self.n_states(),
            initial_state,
            sojourns,
            horizon,
        }
    }

    /// Draws a starting state from a probability vector.
    pub fn sample_initial<R: Rng + ?Sized>(dist: &[f64], rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, &p) in dist.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        dist.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }
}

/// Simulates the chain from `initial_state` over `[0, horizon]`.
pub fn simulate_chain_path(
    rate: &RateMatrix,
    initial_state: usize,
    horizon: f64,
    seed: u64,
) -> Result<ChainPath> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidInput(format!("horizon {horizon} must be > 0")));
    }
    if initial_state >= rate.len() {
        return Err(Error::InvalidInput(format!(
            "initial state {initial_state} out of range for {} states",
            rate.len()
        )));
    }
    let sampler = ChainSampler::new(rate);
    let mut rng = path_rng(seed, 0);
    Ok(sampler.sample(initial_state, horizon, &mut rng))
}

/// Total sojourn per state.
pub fn occupation_times(path: &ChainPath) -> OccupationTimes {
    let mut j = vec![0.0; path.n_states];
    for &(s, d) in &path.sojourns {
        j[s] += d;
    }
    OccupationTimes { j, horizon: path.horizon }
}

/// `E[exp <u, J(0, T)>]` for a chain started from `initial_dist`.
///
/// With the row-generator convention used by [`RateMatrix`] this is
/// `initial_distᵀ · exp((Π + diag(u)) T) · 1`, the transpose of the
/// column-vector form.
pub fn occupation_mgf(rate: &RateMatrix, u: &[f64], horizon: f64, initial_dist: &[f64]) -> Result<f64> {
    let n = rate.len();
    if u.len() != n || initial_dist.len() != n {
        return Err(Error::InvalidInput("u and initial_dist must have one entry per state".into()));
    }
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::InvalidInput(format!("horizon {horizon} must be >= 0")));
    }
    if initial_dist.iter().any(|&p| !(0.0..=1.0).contains(&p))
        || (initial_dist.iter().sum::<f64>() - 1.0).abs() > 1e-12
    {
        return Err(Error::InvalidInput("initial_dist must be a probability vector".into()));
    }
    let a: DMatrix<f64> =
        (rate.matrix() + DMatrix::from_diagonal(&DVector::from_column_slice(u))) * horizon;
    let e = expm(&a);
    let ones = DVector::from_element(n, 1.0);
    let p0 = DVector::from_column_slice(initial_dist);
    Ok(p0.dot(&(e * ones)))
}
