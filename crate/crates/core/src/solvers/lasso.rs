//! Lasso by cyclic coordinate descent with covariance updates.
//!
//! Objective: `‖y − Xβ‖²/N + 2λ‖β‖₁`. The stationarity condition is
//! `x_jᵀ(y − Xβ)/N = λ·sign(β_j)` on the active set and `|x_jᵀ(y − Xβ)/N| ≤ λ`
//! elsewhere.

use nalgebra::{DMatrix, DVector};

use crate::error::{LmmError, Result};
use crate::model::GroupedDesign;

#[derive(Debug, Clone)]
pub struct LassoOptions {
    /// Stop when no coefficient moves by more than this in a full sweep.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Coordinate visiting order; natural order when `None`.
    pub order: Option<Vec<usize>>,
}

impl Default for LassoOptions {
    fn default() -> Self {
        LassoOptions {
            tol: 1e-9,
            max_sweeps: 100_000,
            order: None,
        }
    }
}

pub fn soft_threshold(z: f64, lambda: f64) -> f64 {
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

/// Reusable coordinate-descent state: the scaled cross-products `Xᵀy/N`, the
/// Gram diagonal and lazily computed Gram columns.
pub struct CoordinateDescent<'a> {
    x: &'a DMatrix<f64>,
    xty: DVector<f64>,
    diag: Vec<f64>,
    gram_cols: Vec<Option<DVector<f64>>>,
    n: f64,
}

impl<'a> CoordinateDescent<'a> {
    pub fn new(x: &'a DMatrix<f64>, y: &DVector<f64>) -> Self {
        let n = x.nrows() as f64;
        let xty = x.tr_mul(y) / n;
        let diag = x.column_iter().map(|c| c.norm_squared() / n).collect();
        CoordinateDescent {
            x,
            xty,
            diag,
            gram_cols: vec![None; x.ncols()],
            n,
        }
    }

    fn gram_col(&mut self, j: usize) -> &DVector<f64> {
        if self.gram_cols[j].is_none() {
            let col = self.x.tr_mul(&self.x.column(j)) / self.n;
            self.gram_cols[j] = Some(col);
        }
        self.gram_cols[j].as_ref().unwrap()
    }

    /// `|Xᵀy/N|_∞`: the smallest λ with an all-zero solution.
    pub fn lambda_max(&self) -> f64 {
        self.xty.amax()
    }

    /// Solves in place starting from `beta`; returns the number of sweeps used.
    pub fn solve(&mut self, lambda: f64, beta: &mut [f64], opts: &LassoOptions) -> Result<usize> {
        let p = self.x.ncols();
        if beta.len() != p {
            return Err(LmmError::Dimension(format!(
                "warm start has length {}, expected {p}",
                beta.len()
            )));
        }
        if !(lambda > 0.0) {
            return Err(LmmError::InvalidArgument(format!(
                "lasso penalty must be positive, got {lambda}"
            )));
        }
        let order: Vec<usize> = match &opts.order {
            Some(o) => {
                if o.len() != p {
                    return Err(LmmError::Dimension("coordinate order has wrong length".into()));
                }
                o.clone()
            }
            None => (0..p).collect(),
        };

        let mut grad = self.xty.clone();
        for (k, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                grad.axpy(-b, self.gram_col(k), 1.0);
            }
        }

        let mut sweeps = 0usize;
        let mut last_change = f64::INFINITY;
        loop {
            // full pass
            let change = self.sweep(lambda, beta, &mut grad, order.iter().copied());
            sweeps += 1;
            last_change = last_change.min(change);
            if change <= opts.tol {
                return Ok(sweeps);
            }
            let active: Vec<usize> = order.iter().copied().filter(|&j| beta[j] != 0.0).collect();
            loop {
                if sweeps >= opts.max_sweeps {
                    return Err(LmmError::NonConvergence {
                        sweeps,
                        max_change: change,
                        last_iterate: beta.to_vec(),
                    });
                }
                let c = self.sweep(lambda, beta, &mut grad, active.iter().copied());
                sweeps += 1;
                if c <= opts.tol {
                    break;
                }
            }
            if sweeps >= opts.max_sweeps {
                return Err(LmmError::NonConvergence {
                    sweeps,
                    max_change: last_change,
                    last_iterate: beta.to_vec(),
                });
            }
        }
    }

    fn sweep(
        &mut self,
        lambda: f64,
        beta: &mut [f64],
        grad: &mut DVector<f64>,
        coords: impl Iterator<Item = usize>,
    ) -> f64 {
        let mut max_change: f64 = 0.0;
        for j in coords {
            let d = self.diag[j];
            if d <= 0.0 {
                continue;
            }
            let old = beta[j];
            let z = grad[j] + d * old;
            let new = soft_threshold(z, lambda) / d;
            let delta = new - old;
            if delta != 0.0 {
                beta[j] = new;
                grad.axpy(-delta, self.gram_col(j), 1.0);
                max_change = max_change.max(delta.abs());
            }
        }
        max_change
    }
}

/// Lasso on an explicit `(X, y)` pair.
pub fn lasso_xy(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
    opts: &LassoOptions,
) -> Result<Vec<f64>> {
    let mut cd = CoordinateDescent::new(x, y);
    let mut beta = vec![0.0; x.ncols()];
    cd.solve(lambda, &mut beta, opts)?;
    Ok(beta)
}

pub fn lasso(design: &GroupedDesign, lambda: f64) -> Result<Vec<f64>> {
    lasso_xy(design.x(), design.y(), lambda, &LassoOptions::default())
}

pub fn lasso_objective(x: &DMatrix<f64>, y: &DVector<f64>, beta: &[f64], lambda: f64) -> f64 {
    let b = DVector::from_column_slice(beta);
    let r = y - x * b;
    r.norm_squared() / x.nrows() as f64 + 2.0 * lambda * beta.iter().map(|v| v.abs()).sum::<f64>()
}

/// Largest violation of the lasso optimality conditions at `beta`.
pub fn kkt_violation(x: &DMatrix<f64>, y: &DVector<f64>, beta: &[f64], lambda: f64) -> f64 {
    let b = DVector::from_column_slice(beta);
    let grad = x.tr_mul(&(y - x * b)) / x.nrows() as f64;
    beta.iter()
        .zip(grad.iter())
        .map(|(&bj, &g)| {
            if bj == 0.0 {
                (g.abs() - lambda).max(0.0)
            } else {
                (g - lambda * bj.signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}
