//! Pricing of European FX call options when the spot rate follows a
//! Markov-modulated Merton jump-diffusion.
//!
//! The crate is organised around the pipeline used in practice:
//!
//! * [`markov_regime`]: the hidden regime chain (generator, path simulation,
//!   occupation times, occupation-time MGF) and the three-state trend
//!   classifier that estimates a transition matrix from candle open prices.
//! * [`esscher`]: jump-size laws, the regime-switching Esscher transform and
//!   the calibration of risk-neutral parameters from the martingale condition.
//! * [`pricing`]: Black–Scholes core, occupation-weighted regime quantities,
//!   the Poisson series conditional on occupation times, and the outer Monte
//!   Carlo over occupation times.
//! * [`simulation`]: an independent path-level Monte Carlo oracle used to
//!   verify the pricer, the Esscher density and the martingale property.
//! * [`cli`]: configuration handling and the `fxjump` command line.

pub mod cli;
pub mod error;
pub mod esscher;
pub mod markov_regime;
pub mod pricing;
pub mod simulation;
pub mod stats;

pub use error::{Error, Result};
