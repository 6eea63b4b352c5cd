//! Ridge fit through the economy SVD of `X`, and the row-space projector
//! `P_{Xᵀ} = ΓΓᵀ` accessed row by row.

use nalgebra::{DMatrix, DVector};

use crate::error::{LmmError, Result};
use crate::linalg::{thin_svd, ThinSvd, RANK_RTOL};
use crate::model::GroupedDesign;

/// Rows of `P_{Xᵀ}` formed at once when scanning off-diagonal maxima.
const ROW_BLOCK: usize = 256;

/// Ridge estimate `(Σ̂ + λI)⁻¹Xᵀy/N` with `Σ̂ = XᵀX/N`.
#[derive(Debug, Clone)]
pub struct RidgeFit {
    pub beta_ridge: Vec<f64>,
    pub lambda_ridge: f64,
    svd: ThinSvd,
    n_obs: usize,
}

pub fn ridge_fit(design: &GroupedDesign, lambda: f64) -> Result<RidgeFit> {
    ridge_fit_xy(design.x(), design.y(), lambda)
}

pub fn ridge_fit_xy(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<RidgeFit> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(LmmError::InvalidArgument(format!(
            "ridge penalty must be positive, got {lambda}"
        )));
    }
    if x.nrows() != y.len() {
        return Err(LmmError::Dimension(format!(
            "x has {} rows, y has {}",
            x.nrows(),
            y.len()
        )));
    }
    let n_obs = x.nrows();
    let svd = thin_svd(x, RANK_RTOL);
    let mut fit = RidgeFit {
        beta_ridge: Vec::new(),
        lambda_ridge: lambda,
        svd,
        n_obs,
    };
    fit.beta_ridge = fit.apply_a(y).iter().map(|v| v / n_obs as f64).collect();
    Ok(fit)
}

impl RidgeFit {
    pub fn svd(&self) -> &ThinSvd {
        &self.svd
    }

    pub fn rank(&self) -> usize {
        self.svd.rank()
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn n_fixed(&self) -> usize {
        self.svd.v.nrows()
    }

    /// `N s_k / (s_k² + Nλ)` for each retained singular value.
    pub fn shrinkage(&self) -> Vec<f64> {
        let n = self.n_obs as f64;
        self.svd
            .s
            .iter()
            .map(|&s| n * s / (s * s + n * self.lambda_ridge))
            .collect()
    }

    /// `Γ diag(shrinkage)`, the `p × R` left factor of `A = (Σ̂ + λI)⁻¹Xᵀ`.
    fn gamma_shrunk(&self) -> DMatrix<f64> {
        let mut g = self.svd.v.clone();
        for (k, d) in self.shrinkage().into_iter().enumerate() {
            g.column_mut(k).scale_mut(d);
        }
        g
    }

    /// `A v` for `v` of length `N`.
    pub fn apply_a(&self, v: &DVector<f64>) -> DVector<f64> {
        if self.rank() == 0 {
            return DVector::zeros(self.n_fixed());
        }
        self.gamma_shrunk() * self.svd.u.tr_mul(v)
    }

    /// Dense `A = Γ diag(shrinkage) Qᵀ` (`p × N`).
    pub fn a_matrix(&self) -> DMatrix<f64> {
        if self.rank() == 0 {
            return DMatrix::zeros(self.n_fixed(), self.n_obs);
        }
        self.gamma_shrunk() * self.svd.u.transpose()
    }

    /// Rows `rows` of `A`.
    pub fn a_rows(&self, rows: &[usize]) -> DMatrix<f64> {
        let g = self.gamma_shrunk();
        let sub = DMatrix::from_fn(rows.len(), self.rank(), |i, k| g[(rows[i], k)]);
        sub * self.svd.u.transpose()
    }

    /// Row `j` of `P_{Xᵀ}`.
    pub fn pxt_row(&self, j: usize) -> Vec<f64> {
        let gamma = &self.svd.v;
        let gj = gamma.row(j).transpose();
        (gamma * gj).iter().copied().collect()
    }

    /// Diagonal of `P_{Xᵀ}`: squared row norms of `Γ`.
    pub fn pxt_diag(&self) -> Vec<f64> {
        self.svd
            .v
            .row_iter()
            .map(|r| r.norm_squared())
            .collect()
    }

    /// `P_{Xᵀ} b` for a length-`p` vector.
    pub fn pxt_apply(&self, b: &[f64]) -> Vec<f64> {
        let gamma = &self.svd.v;
        if self.rank() == 0 {
            return vec![0.0; b.len()];
        }
        let coef = gamma.tr_mul(&DVector::from_column_slice(b));
        (gamma * coef).iter().copied().collect()
    }

    /// `max_{k≠j} |(P_{Xᵀ})_{jk}|` for every `j`, computed a block of rows at a time.
    pub fn pxt_offdiag_max(&self) -> Vec<f64> {
        let p = self.n_fixed();
        let gamma = &self.svd.v;
        let mut out = vec![0.0; p];
        if self.rank() == 0 || p < 2 {
            return out;
        }
        let gamma_t = gamma.transpose();
        for start in (0..p).step_by(ROW_BLOCK) {
            let len = ROW_BLOCK.min(p - start);
            let block = gamma.rows(start, len) * &gamma_t;
            for i in 0..len {
                let j = start + i;
                out[j] = block
                    .row(i)
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != j)
                    .fold(0.0_f64, |m, (_, v)| m.max(v.abs()));
            }
        }
        out
    }
}

/// `ω_jj = (σ²‖a_j‖² + τ²‖Zᵀa_j‖²)/N`, the diagonal of `N · Cov(β̂)`.
///
/// With `A = G Qᵀ` and `G = Γ diag(shrinkage)`, `‖a_j‖² = ‖g_j‖²` and
/// `‖Zᵀa_j‖² = g_j (QᵀZ)(ZᵀQ) g_jᵀ`, so only `R × R` products are needed.
pub fn omega_diag(fit: &RidgeFit, design: &GroupedDesign, sigma2: f64, tau2: f64) -> Result<Vec<f64>> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(LmmError::InvalidArgument(format!(
            "error variance must be positive, got {sigma2}"
        )));
    }
    if !(tau2 >= 0.0 && tau2.is_finite()) {
        return Err(LmmError::InvalidArgument(format!(
            "random-effect variance must be nonnegative, got {tau2}"
        )));
    }
    if design.n_obs() != fit.n_obs() || design.n_fixed() != fit.n_fixed() {
        return Err(LmmError::Dimension("ridge fit does not match design".into()));
    }
    let n = fit.n_obs() as f64;
    let p = fit.n_fixed();
    if fit.rank() == 0 {
        return Err(LmmError::DegenerateCovariance);
    }
    let g = fit.gamma_shrunk();
    let fixed_part: Vec<f64> = g.row_iter().map(|r| r.norm_squared()).collect();

    let random_part = if tau2 > 0.0 {
        let q = &fit.svd().u;
        let zt_q = DMatrix::from_columns(
            &(0..q.ncols())
                .map(|k| design.zt_mul(q.column(k).as_slice()))
                .collect::<Vec<_>>(),
        );
        let h = zt_q.tr_mul(&zt_q);
        let gh = &g * h;
        (0..p).map(|j| gh.row(j).dot(&g.row(j))).collect()
    } else {
        vec![0.0; p]
    };

    let omega: Vec<f64> = fixed_part
        .iter()
        .zip(&random_part)
        .map(|(a, b)| (sigma2 * a + tau2 * b) / n)
        .collect();
    if omega.iter().all(|&w| w < 1e-14) {
        return Err(LmmError::DegenerateCovariance);
    }
    Ok(omega)
}

/// `β̂corr_j = β̂_j − Σ_{k≠j} (P_{Xᵀ})_{jk} β̂init_k`.
pub fn corrected_estimator(fit: &RidgeFit, beta_init: &[f64]) -> Result<Vec<f64>> {
    if beta_init.len() != fit.n_fixed() {
        return Err(LmmError::Dimension(format!(
            "initial estimate has {} entries, expected {}",
            beta_init.len(),
            fit.n_fixed()
        )));
    }
    let projected = fit.pxt_apply(beta_init);
    let diag = fit.pxt_diag();
    Ok(fit
        .beta_ridge
        .iter()
        .zip(projected)
        .zip(diag)
        .zip(beta_init)
        .map(|(((b, pb), d), bi)| b - (pb - d * bi))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn zero_response_gives_zero_fit() {
        let x = gaussian(8, 5, 1);
        let fit = ridge_fit_xy(&x, &DVector::zeros(8), 0.1).unwrap();
        assert!(fit.beta_ridge.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn heavy_penalty_shrinks_to_zero() {
        let x = gaussian(8, 5, 2);
        let y = DVector::from_fn(8, |i, _| i as f64);
        let fit = ridge_fit_xy(&x, &y, 1e8).unwrap();
        let bound = (x.transpose() * &y).norm() / (8.0 * 1e8);
        assert!(DVector::from_vec(fit.beta_ridge.clone()).norm() <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn full_row_rank_projector_is_identity() {
        let x = gaussian(20, 4, 3);
        let fit = ridge_fit_xy(&x, &DVector::zeros(20), 0.05).unwrap();
        for j in 0..4 {
            let row = fit.pxt_row(j);
            for (k, v) in row.iter().enumerate() {
                let e = if k == j { 1.0 } else { 0.0 };
                assert!((v - e).abs() < 1e-12);
            }
        }
        assert!(fit.pxt_offdiag_max().iter().all(|&m| m < 1e-12));
    }

    #[test]
    fn projector_rows_are_symmetric() {
        let x = gaussian(6, 10, 4);
        let fit = ridge_fit_xy(&x, &DVector::zeros(6), 0.05).unwrap();
        let rows: Vec<Vec<f64>> = (0..10).map(|j| fit.pxt_row(j)).collect();
        for j in 0..10 {
            for k in 0..10 {
                assert!((rows[j][k] - rows[k][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn offdiag_max_matches_rows() {
        let x = gaussian(7, 12, 5);
        let fit = ridge_fit_xy(&x, &DVector::zeros(7), 0.05).unwrap();
        let fast = fit.pxt_offdiag_max();
        for j in 0..12 {
            let row = fit.pxt_row(j);
            let brute = (0..12).filter(|&k| k != j).map(|k| row[k].abs()).fold(0.0, f64::max);
            assert!((fast[j] - brute).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_initial_estimate_leaves_ridge_unchanged() {
        let x = gaussian(6, 9, 6);
        let y = DVector::from_fn(6, |i, _| (i as f64).sin());
        let fit = ridge_fit_xy(&x, &y, 0.2).unwrap();
        let corr = corrected_estimator(&fit, &[0.0; 9]).unwrap();
        assert_eq!(corr, fit.beta_ridge);
    }

    #[test]
    fn rejects_nonpositive_penalty() {
        let x = gaussian(4, 3, 7);
        assert!(ridge_fit_xy(&x, &DVector::zeros(4), 0.0).is_err());
    }
}
