//! Independent reference computations shared by the integration tests.
//!
//! Everything here avoids the crate's SVD-based paths: solves go through
//! Cholesky factorizations of normal equations and pseudo-inverses through
//! symmetric eigendecompositions.

#![allow(dead_code)]

pub mod props;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use ridge_lmm::{build_design, GroupedDesign};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

pub fn gaussian_matrix<R: Rng>(n: usize, p: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| normal(rng))
}

/// Standardized design with `sizes` groups and `q` random-effect columns.
/// With `q = 1` the random effect is an intercept.
pub fn grouped_design<R: Rng>(sizes: &[usize], p: usize, q: usize, rng: &mut R) -> GroupedDesign {
    let n: usize = sizes.iter().sum();
    let x = gaussian_matrix(n, p, rng);
    let z = if q == 1 {
        DMatrix::from_element(n, 1, 1.0)
    } else {
        DMatrix::from_fn(n, q, |_, c| if c == 0 { 1.0 } else { normal(rng) })
    };
    let ids: Vec<usize> = sizes.iter().enumerate().flat_map(|(m, &s)| std::iter::repeat_n(m, s)).collect();
    let y: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
    build_design(&y, &x, &z, &ids).expect("valid design")
}

/// `(XᵀX/N + λI)⁻¹ Xᵀy / N` by Cholesky.
pub fn dense_ridge(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> DVector<f64> {
    let n = x.nrows() as f64;
    let p = x.ncols();
    let lhs = x.transpose() * x / n + DMatrix::identity(p, p) * lambda;
    lhs.cholesky().expect("SPD").solve(&(x.transpose() * y / n))
}

/// `(XᵀX/N + λI)⁻¹ Xᵀ` by Cholesky.
pub fn dense_a(x: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    let n = x.nrows() as f64;
    let p = x.ncols();
    let lhs = x.transpose() * x / n + DMatrix::identity(p, p) * lambda;
    lhs.cholesky().expect("SPD").solve(&x.transpose())
}

/// Moore–Penrose inverse of a symmetric PSD matrix via its eigendecomposition.
pub fn psd_pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let mut inv = DMatrix::zeros(m.nrows(), m.ncols());
    for (k, &ev) in eig.eigenvalues.iter().enumerate() {
        if ev > 1e-12 * top {
            let v = eig.eigenvectors.column(k);
            inv += v * v.transpose() / ev;
        }
    }
    inv
}

/// `Xᵀ(XXᵀ)⁺X`.
pub fn dense_row_projector(x: &DMatrix<f64>) -> DMatrix<f64> {
    x.transpose() * psd_pinv(&(x * x.transpose())) * x
}

/// `X(XᵀX)⁺Xᵀ`.
pub fn dense_col_projector(x: &DMatrix<f64>) -> DMatrix<f64> {
    x * psd_pinv(&(x.transpose() * x)) * x.transpose()
}

/// `V = σ²I + τ²ZZᵀ` from the dense `Z`.
pub fn dense_v(design: &GroupedDesign, sigma2: f64, tau2: f64) -> DMatrix<f64> {
    let z = design.z_dense();
    DMatrix::identity(design.n_obs(), design.n_obs()) * sigma2 + &z * z.transpose() * tau2
}

/// `Ω = A V Aᵀ / N`.
pub fn dense_omega(design: &GroupedDesign, lambda: f64, sigma2: f64, tau2: f64) -> DMatrix<f64> {
    let a = dense_a(design.x(), lambda);
    &a * dense_v(design, sigma2, tau2) * a.transpose() / design.n_obs() as f64
}

/// Proximal gradient (FISTA) for `‖y − Xβ‖²/N + 2λ‖β‖₁`.
pub fn fista_lasso(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64, iters: usize) -> DVector<f64> {
    let n = x.nrows() as f64;
    let p = x.ncols();
    let gram = x.transpose() * x * (2.0 / n);
    let xty = x.transpose() * y * (2.0 / n);
    let lip = gram.clone().symmetric_eigen().eigenvalues.iter().copied().fold(0.0, f64::max);
    let step = 1.0 / lip;
    let mut beta = DVector::zeros(p);
    let mut mom = beta.clone();
    let mut t = 1.0_f64;
    for _ in 0..iters {
        let grad = &gram * &mom - &xty;
        let cand = &mom - grad * step;
        let next = cand.map(|v| v.signum() * (v.abs() - 2.0 * lambda * step).max(0.0));
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        mom = &next + (&next - &beta) * ((t - 1.0) / t_next);
        beta = next;
        t = t_next;
    }
    beta
}

/// Series/continued-fraction `erfc`, written independently of the crate.
pub fn erfc_oracle(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc_oracle(-x);
    }
    if x < 2.0 {
        // erf by its Maclaurin series
        let mut term = x;
        let mut sum = x;
        let mut k = 0.0;
        loop {
            k += 1.0;
            term *= -x * x / k;
            let add = term / (2.0 * k + 1.0);
            sum += add;
            if add.abs() <= 1e-18 * sum.abs() {
                break;
            }
        }
        1.0 - sum * 2.0 / std::f64::consts::PI.sqrt()
    } else {
        // Lentz evaluation of the continued fraction
        let tiny = 1e-300;
        let mut f = x;
        let mut c = x;
        let mut d = 0.0;
        for k in 1..500 {
            let a = k as f64 / 2.0;
            d = x + a * d;
            d = if d.abs() < tiny { tiny } else { d };
            c = x + a / c;
            c = if c.abs() < tiny { tiny } else { c };
            d = 1.0 / d;
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        (-x * x).exp() / (f * std::f64::consts::PI.sqrt())
    }
}

/// Two-sided normal tail `2(1 − Φ(z))` from [`erfc_oracle`].
pub fn two_sided_oracle(z: f64) -> f64 {
    erfc_oracle(z / std::f64::consts::SQRT_2)
}

/// Monte-Carlo group p-value drawing `W_G ~ N(0, Ω_GG/N)` through a Cholesky factor.
pub fn cholesky_group_p_value(
    omega_group: &DMatrix<f64>,
    n_obs: usize,
    kappa: &[f64],
    slack: &[f64],
    observed: f64,
    draws: usize,
    seed: u64,
) -> (f64, f64) {
    let cov = omega_group / n_obs as f64;
    let l = cov.cholesky().expect("positive definite").l();
    let g = kappa.len();
    let mut r = rng(seed);
    let mut hits = 0usize;
    for _ in 0..draws {
        let z = DVector::from_fn(g, |_, _| normal(&mut r));
        let w = &l * z;
        let stat = (0..g).map(|k| kappa[k] * w[k].abs() + slack[k]).fold(f64::NEG_INFINITY, f64::max);
        if stat > observed {
            hits += 1;
        }
    }
    let p = hits as f64 / draws as f64;
    (p, (p * (1.0 - p) / draws as f64).sqrt())
}

pub fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    assert!(
        (a - b).abs() <= tol * b.abs().max(1.0),
        "{what}: {a} vs {b} (tol {tol})"
    );
}

/// Henderson Method III through dense `N × N` projectors: `(σ̂², τ̂²_raw)`.
pub fn dense_henderson(design: &GroupedDesign, support: &[usize]) -> (f64, f64) {
    let n = design.n_obs();
    let y = design.y();
    let z = design.z_dense();
    let xs = DMatrix::from_fn(n, support.len(), |i, k| design.x()[(i, support[k])]);
    let mut full = DMatrix::zeros(n, support.len() + z.ncols());
    full.columns_mut(0, support.len()).copy_from(&xs);
    full.columns_mut(support.len(), z.ncols()).copy_from(&z);
    let p_full = dense_col_projector(&full);
    let p_s = if support.is_empty() { DMatrix::zeros(n, n) } else { dense_col_projector(&xs) };
    let rank_full = p_full.trace().round();
    let rank_s = p_s.trace().round();
    let eye = DMatrix::<f64>::identity(n, n);
    let sigma2 = (y.transpose() * (&eye - &p_full) * y)[0] / (n as f64 - rank_full);
    let between = (y.transpose() * (&p_full - &p_s) * y)[0];
    let trace = (z.transpose() * (&eye - &p_s) * &z).trace();
    (sigma2, (between - sigma2 * (rank_full - rank_s)) / trace)
}

/// Irrepresentability statistic by a fresh Cholesky solve per left-out index.
pub fn direct_t_ir(x: &DMatrix<f64>, beta_star: &[f64]) -> f64 {
    let n = x.nrows() as f64;
    let p = x.ncols();
    let gram = x.transpose() * x / n;
    let active: Vec<usize> = (0..p).filter(|&j| beta_star[j] != 0.0).collect();
    let mut worst = 0.0_f64;
    for &j in &active {
        let b: Vec<usize> = active.iter().copied().filter(|&k| k != j).collect();
        if b.is_empty() {
            continue;
        }
        let g_bb = DMatrix::from_fn(b.len(), b.len(), |r, c| gram[(b[r], b[c])]);
        let signs = DVector::from_iterator(b.len(), b.iter().map(|&k| beta_star[k].signum()));
        let w = g_bb.cholesky().expect("SPD").solve(&signs);
        for k in (0..p).filter(|k| !b.contains(k)) {
            let v: f64 = b.iter().enumerate().map(|(r, &bk)| gram[(k, bk)] * w[r]).sum();
            worst = worst.max(v.abs());
        }
    }
    worst
}
