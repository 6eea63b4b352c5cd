//! Penalty-level rules for the screening lasso.

use serde::Serialize;

use crate::error::{LmmError, Result};
use crate::model::GroupedDesign;

use super::scaled::lambda_univ;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaChoice {
    pub lambda_l: f64,
    pub rho_z: f64,
    pub lambda_univ: f64,
}

/// `ν_max(ZᵀZ)` and `tr(ZᵀZ)`, using the block-diagonal structure of `ZᵀZ`.
pub fn ztz_spectrum(design: &GroupedDesign) -> (f64, f64) {
    let mut nu_max: f64 = 0.0;
    let mut trace = 0.0;
    for m in 0..design.n_groups() {
        let block = design.ztz_block(m);
        trace += block.trace();
        let top = if block.nrows() == 1 {
            block[(0, 0)]
        } else {
            block.symmetric_eigenvalues().max()
        };
        nu_max = nu_max.max(top);
    }
    (nu_max, trace)
}

/// `ρ_Z = √(ν_max(ZᵀZ) / (tr(ZᵀZ)/N))`.
pub fn rho_z(design: &GroupedDesign) -> Result<f64> {
    let (nu_max, trace) = ztz_spectrum(design);
    if !(trace > 0.0) {
        return Err(LmmError::InvalidArgument("random-effect design is all zeros".into()));
    }
    Ok((nu_max / (trace / design.n_obs() as f64)).sqrt())
}

/// Data-driven rule `λ_L = σ̂_scaled · √(2 log p / N) · ρ_Z`.
pub fn select_lambda_l(design: &GroupedDesign, sigma_scaled: f64) -> Result<LambdaChoice> {
    if !(sigma_scaled >= 0.0) {
        return Err(LmmError::InvalidArgument(format!(
            "noise estimate must be nonnegative, got {sigma_scaled}"
        )));
    }
    let rho = rho_z(design)?;
    let lu = lambda_univ(design.n_obs(), design.n_fixed());
    Ok(LambdaChoice {
        lambda_l: sigma_scaled * lu * rho,
        rho_z: rho,
        lambda_univ: lu,
    })
}

/// Oracle rule using the true variance components:
/// `((ξ+1)/(ξ−1)) · √(2(σ² + τ² q n)(log p − log(ε/2)) / N)`.
///
/// `n` is the largest group size, which keeps `σ² + τ² q n` an upper bound on
/// the top eigenvalue of `V` when groups are ragged.
pub fn theoretical_lambda_l(
    design: &GroupedDesign,
    sigma_star2: f64,
    tau_star2: f64,
    xi: f64,
    eps: f64,
) -> Result<f64> {
    if !(xi > 1.0) {
        return Err(LmmError::InvalidArgument(format!("xi must exceed 1, got {xi}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(LmmError::InvalidArgument(format!("eps must lie in (0, 1), got {eps}")));
    }
    let n_max = design.group_sizes().iter().copied().max().unwrap_or(0) as f64;
    let p = design.n_fixed() as f64;
    let big_n = design.n_obs() as f64;
    let var_bound = sigma_star2 + tau_star2 * design.q() as f64 * n_max;
    Ok((xi + 1.0) / (xi - 1.0) * (2.0 * var_bound * (p.ln() - (eps / 2.0).ln()) / big_n).sqrt())
}
