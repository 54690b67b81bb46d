//! The hidden regime chain.
//!
//! Regime parameters, the chain generator, path simulation with exact
//! exponential sojourns, occupation times and their moment-generating
//! function, and the candle trend classifier that estimates a
//! three-state transition matrix from candle open prices.

mod chain;
mod estimator;
pub mod expm;
mod types;

pub use chain::{
    occupation_mgf, occupation_times, simulate_chain_path, ChainPath, ChainSampler,
    OccupationTimes,
};
pub use estimator::{
    classify_counts, counts_csv, estimate_transition_matrix, observed_rows_csv, parse_matrix_csv, parse_open_prices, CountMatrix,
    EstimatorWindows, Trend, TrendEstimate, DEFAULT_BAR_DT,
};
pub use types::{RateMatrix, RegimeParams, RegimeSet, TransitionMatrix};
