//! European call pricing: Black–Scholes core, occupation-weighted regime
//! averages, the conditional jump series and the outer Monte Carlo over
//! chain occupation times.

mod black_scholes;
mod exact;
mod price;
mod quantities;
mod series;

pub use black_scholes::{black_scholes_call, norm_cdf};
pub use exact::{exact_conditional_price, exact_truncation, log_product_density, MAX_EXACT_JUMPS};
pub use price::{
    conditional_price, curve_csv, price_call, price_curve, price_strikes, CurveModel, CurvePoint, PriceResult,
    PricingModel, SeriesKernel,
};
pub use quantities::{regime_quantities, JumpComponent, RegimeQuantities};
pub use series::{
    merton_conditional_price, poisson_pmf, poisson_tail, poisson_tail_bound, poisson_weights, series_cap,
};
