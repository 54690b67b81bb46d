//! Jump-size laws, the regime-switching Esscher transform and the
//! martingale calibration of its parameters.

mod calibrate;
mod jump;

pub use calibrate::{
    calibration_report, esscher_dynamics, martingale_residual, solve_esscher, to_risk_neutral,
    EsscherParams, RiskNeutralRegimeSet, RiskNeutralState, MARTINGALE_TOL,
};
pub use jump::{mean_jump_size, risk_neutral_intensity, JumpSpec};
