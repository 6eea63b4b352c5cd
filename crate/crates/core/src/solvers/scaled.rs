use crate::error::{LmmError, Result};
use crate::model::GroupedDesign;
use nalgebra::DVector;

use super::lasso::{CoordinateDescent, LassoOptions};

#[derive(Debug, Clone)]
pub struct ScaledLassoFit {
    pub beta: Vec<f64>,
    pub sigma: f64,
    pub iterations: usize,
}

/// `√(2 log p / N)`.
pub fn lambda_univ(n: usize, p: usize) -> f64 {
    (2.0 * (p as f64).ln() / n as f64).sqrt()
}

/// Joint minimizer of `‖y − Xβ‖²/(2Nσ) + σ/2 + λ‖β‖₁` by alternating a lasso
/// step at penalty `σλ` with the update `σ ← ‖y − Xβ‖/√N`.
pub fn scaled_lasso(design: &GroupedDesign, lambda_univ: f64) -> Result<ScaledLassoFit> {
    const REL_TOL: f64 = 1e-6;
    const MAX_ITER: usize = 1000;

    if !(lambda_univ > 0.0) {
        return Err(LmmError::InvalidArgument(format!(
            "scaled lasso penalty must be positive, got {lambda_univ}"
        )));
    }
    let x = design.x();
    let y = design.y();
    let root_n = (design.n_obs() as f64).sqrt();
    let sigma0 = y.norm() / root_n;
    if sigma0 == 0.0 {
        return Err(LmmError::InvalidArgument("response is identically zero".into()));
    }
    let floor = 1e-8 * sigma0;

    let mut cd = CoordinateDescent::new(x, y);
    let opts = LassoOptions::default();
    let mut beta = vec![0.0; design.n_fixed()];
    let mut sigma = sigma0;
    for it in 1..=MAX_ITER {
        cd.solve(sigma * lambda_univ, &mut beta, &opts)?;
        let resid = y - x * DVector::from_column_slice(&beta);
        let next = resid.norm() / root_n;
        if next < floor {
            return Err(LmmError::DegenerateFit { sigma: next, floor });
        }
        if (next - sigma).abs() <= REL_TOL * sigma {
            return Ok(ScaledLassoFit {
                beta,
                sigma: next,
                iterations: it,
            });
        }
        sigma = next;
    }
    Err(LmmError::NonConvergence {
        sweeps: MAX_ITER,
        max_change: f64::NAN,
        last_iterate: beta,
    })
}
