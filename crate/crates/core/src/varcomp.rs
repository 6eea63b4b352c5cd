//! Henderson Method III variance-component estimates on a screened model.
//!
//! With `X̂ = [X_Ŝ  Z]`, the estimates solve the triangular moment system
//!
//! ```text
//! σ̂² = yᵀ(I − P_X̂)y / (N − rank X̂)
//! τ̂² = [yᵀ(P_X̂ − P_{X_Ŝ})y − σ̂²(rank X̂ − rank X_Ŝ)] / tr[Zᵀ(I − P_{X_Ŝ})Z]
//! ```
//!
//! All quadratic forms go through thin orthonormal bases; no `N × N`
//! projector is formed.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{LmmError, Result};
use crate::linalg::{column_basis, hcat, projected_sq_norm, select_columns};
use crate::model::GroupedDesign;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceComponents {
    pub sigma2_hat: f64,
    /// Moment estimate before truncation; may be negative.
    pub tau2_raw: f64,
    /// `max(tau2_raw, 0)`, the value used as a plug-in.
    pub tau2_hat: f64,
    pub rank_xtilde: usize,
    pub rank_xs: usize,
    pub trace_term: f64,
}

/// Orthogonal projector onto the column space of `a` (dense; for small inputs).
pub fn projector(a: &DMatrix<f64>) -> DMatrix<f64> {
    let q = column_basis(a);
    if q.ncols() == 0 {
        return DMatrix::zeros(a.nrows(), a.nrows());
    }
    &q * q.transpose()
}

pub fn henderson_m3(design: &GroupedDesign, support: &[usize]) -> Result<VarianceComponents> {
    let n = design.n_obs();
    if let Some(&bad) = support.iter().find(|&&j| j >= design.n_fixed()) {
        return Err(LmmError::InvalidArgument(format!("support index {bad} out of range")));
    }
    let y = design.y();
    let z = design.z_dense();
    let xs = select_columns(design.x(), support);
    let q_s = column_basis(&xs);
    let q_full = column_basis(&hcat(&xs, &z));
    let rank_xs = q_s.ncols();
    let rank_xtilde = q_full.ncols();
    if rank_xtilde >= n {
        return Err(LmmError::NoResidualDf {
            n,
            rank: rank_xtilde,
        });
    }

    let z_norm2 = z.norm_squared();
    let trace_term = if rank_xs == 0 {
        z_norm2
    } else {
        z_norm2 - (q_s.tr_mul(&z)).norm_squared()
    };
    if !(trace_term > 1e-10 * z_norm2.max(1.0)) {
        return Err(LmmError::Confounded { trace: trace_term });
    }

    let fitted_full = if rank_xtilde == 0 {
        y.clone() * 0.0
    } else {
        &q_full * q_full.tr_mul(y)
    };
    let rss = (y - &fitted_full).norm_squared();
    let sigma2_hat = rss / (n - rank_xtilde) as f64;

    let reduction = projected_sq_norm(&q_full, y) - projected_sq_norm(&q_s, y);
    let tau2_raw = (reduction - sigma2_hat * (rank_xtilde - rank_xs) as f64) / trace_term;

    Ok(VarianceComponents {
        sigma2_hat,
        tau2_raw,
        tau2_hat: tau2_raw.max(0.0),
        rank_xtilde,
        rank_xs,
        trace_term,
    })
}
