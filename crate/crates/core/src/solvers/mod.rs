//! Sparse-regression machinery used for screening and the initial estimator.

mod lasso;
mod ols;
mod scaled;
mod tuning;

use serde::Serialize;

pub use lasso::{
    kkt_violation, lasso, lasso_objective, lasso_xy, soft_threshold, CoordinateDescent,
    LassoOptions,
};
pub use ols::{ols_on_support, InitialEstimate};
pub use scaled::{lambda_univ, scaled_lasso, ScaledLassoFit};
pub use tuning::{rho_z, select_lambda_l, theoretical_lambda_l, ztz_spectrum, LambdaChoice};

/// Output of the screening step.
#[derive(Debug, Clone, Serialize)]
pub struct ScreeningResult {
    pub beta_lasso: Vec<f64>,
    pub support_hat: Vec<usize>,
    pub lambda_l: f64,
    pub sigma_scaled: f64,
    pub rho_z: f64,
}

impl ScreeningResult {
    pub fn new(beta_lasso: Vec<f64>, lambda_l: f64, sigma_scaled: f64, rho_z: f64) -> Self {
        let support_hat = support_of(&beta_lasso);
        ScreeningResult {
            beta_lasso,
            support_hat,
            lambda_l,
            sigma_scaled,
            rho_z,
        }
    }
}

/// Indices of nonzero entries.
pub fn support_of(beta: &[f64]) -> Vec<usize> {
    beta.iter()
        .enumerate()
        .filter(|(_, &b)| b != 0.0)
        .map(|(j, _)| j)
        .collect()
}
