use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{LmmError, Result};
use crate::linalg::select_columns;
use crate::model::GroupedDesign;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitialEstimate {
    /// Zero outside the support it was fitted on.
    pub beta_init: Vec<f64>,
}

/// Modified Gram–Schmidt with one reorthogonalization pass.
///
/// Returns `(Q, R, dependent)` where `dependent` lists the positions (within
/// `a`) of columns lying in the span of the preceding ones at relative
/// tolerance `rtol`.
pub(crate) fn gram_schmidt(a: &DMatrix<f64>, rtol: f64) -> (DMatrix<f64>, DMatrix<f64>, Vec<usize>) {
    let (n, k) = a.shape();
    let mut q = DMatrix::<f64>::zeros(n, k);
    let mut r = DMatrix::<f64>::zeros(k, k);
    let mut dependent = Vec::new();
    for j in 0..k {
        let mut v = a.column(j).clone_owned();
        let orig = v.norm();
        for _pass in 0..2 {
            for i in 0..j {
                let qi = q.column(i);
                let c = qi.dot(&v);
                r[(i, j)] += c;
                v.axpy(-c, &qi, 1.0);
            }
        }
        let rem = v.norm();
        if !(rem > rtol * orig) || orig == 0.0 {
            dependent.push(j);
            continue;
        }
        r[(j, j)] = rem;
        q.column_mut(j).copy_from(&(v / rem));
    }
    (q, r, dependent)
}

/// Relative remainder below which a supported column counts as collinear.
pub const COLLINEAR_RTOL: f64 = 1e-8;

/// Least squares restricted to `support`, zero elsewhere.
pub fn ols_on_support(design: &GroupedDesign, support: &[usize]) -> Result<InitialEstimate> {
    let p = design.n_fixed();
    let mut beta_init = vec![0.0; p];
    if support.is_empty() {
        return Ok(InitialEstimate { beta_init });
    }
    if let Some(&bad) = support.iter().find(|&&j| j >= p) {
        return Err(LmmError::InvalidArgument(format!("support index {bad} out of range")));
    }
    if support.len() > design.n_obs() {
        return Err(LmmError::RankDeficient {
            columns: support.to_vec(),
        });
    }
    let xs = select_columns(design.x(), support);
    let (q, r, dependent) = gram_schmidt(&xs, COLLINEAR_RTOL);
    if !dependent.is_empty() {
        return Err(LmmError::RankDeficient {
            columns: dependent.iter().map(|&k| support[k]).collect(),
        });
    }
    let qty: DVector<f64> = q.tr_mul(design.y());
    let coef = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| LmmError::RankDeficient {
            columns: support.to_vec(),
        })?;
    for (k, &j) in support.iter().enumerate() {
        beta_init[j] = coef[k];
    }
    Ok(InitialEstimate { beta_init })
}
