//! Property checks shared by the proptest suite and the acceptance target.
//! Each returns `Err` with a description of the first violation.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use ridge_lmm::debias::{confidence_intervals, p_single, ridge_fit, GroupTestInputs};
use ridge_lmm::solvers::{kkt_violation, lasso_xy, scaled_lasso, soft_threshold, LassoOptions};
use ridge_lmm::varcomp::projector;
use ridge_lmm::{full_pipeline, GroupedDesign, PipelineConfig, PlugIn};

use super::{gaussian_matrix, grouped_design, rng};

pub type Check = Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Coordinate descent meets the optimality conditions at `frac · λ_max`.
pub fn lasso_kkt(seed: u64, n: usize, p: usize, frac: f64) -> Check {
    let mut r = rng(seed);
    let x = gaussian_matrix(n, p, &mut r);
    let y = DVector::from_fn(n, |_, _| super::normal(&mut r));
    let lambda_max = (x.tr_mul(&y) / n as f64).amax();
    let lambda = frac * lambda_max;
    let beta = lasso_xy(&x, &y, lambda, &LassoOptions::default()).map_err(|e| e.to_string())?;
    let v = kkt_violation(&x, &y, &beta, lambda);
    ensure(v <= 1e-6 * lambda_max.max(1.0), || format!("KKT violation {v:e} at λ = {lambda}"))
}

/// With orthogonal columns of squared norm `N` the solution is `soft(xⱼᵀy/N, λ)`.
pub fn soft_threshold_orthogonal(seed: u64, n: usize, p: usize, lambda: f64) -> Check {
    let mut r = rng(seed);
    let q = gaussian_matrix(n, p, &mut r).qr().q();
    let x = q * (n as f64).sqrt();
    let y = DVector::from_fn(n, |_, _| super::normal(&mut r));
    let beta = lasso_xy(&x, &y, lambda, &LassoOptions::default()).map_err(|e| e.to_string())?;
    let xty = x.tr_mul(&y) / n as f64;
    for j in 0..p {
        let expected = soft_threshold(xty[j], lambda);
        ensure((beta[j] - expected).abs() <= 1e-8, || {
            format!("coordinate {j}: {} vs closed form {expected}", beta[j])
        })?;
    }
    Ok(())
}

fn plain_design(seed: u64, n: usize, p: usize, signal: f64) -> GroupedDesign {
    let mut r = rng(seed);
    let base = grouped_design(&vec![3; n / 3], p, 1, &mut r);
    let x = base.x().clone();
    let mut y = DVector::from_fn(x.nrows(), |_, _| super::normal(&mut r));
    y += x.column(0) * signal;
    base.with_response(y).expect("same shape")
}

/// Scaling `y` by `c > 0` scales `σ̂` and `β̂` by `c`; `σ̂` is the residual scale of `β̂`.
pub fn scaled_lasso_equivariance(seed: u64, n: usize, p: usize, c: f64) -> Check {
    let design = plain_design(seed, n, p, 1.5);
    let lu = (2.0 * (p as f64).ln() / design.n_obs() as f64).sqrt();
    let a = scaled_lasso(&design, lu).map_err(|e| e.to_string())?;
    let scaled = design.with_response(design.y() * c).map_err(|e| e.to_string())?;
    let b = scaled_lasso(&scaled, lu).map_err(|e| e.to_string())?;
    ensure((b.sigma - c * a.sigma).abs() <= 1e-5 * c * a.sigma, || {
        format!("σ̂ not equivariant: {} vs {}", b.sigma, c * a.sigma)
    })?;
    for j in 0..p {
        ensure((b.beta[j] - c * a.beta[j]).abs() <= 1e-4 * c * a.sigma, || {
            format!("β̂_{j} not equivariant: {} vs {}", b.beta[j], c * a.beta[j])
        })?;
    }
    let resid = design.y() - design.x() * DVector::from_column_slice(&a.beta);
    let fixed = resid.norm() / (design.n_obs() as f64).sqrt();
    ensure((fixed - a.sigma).abs() <= 1e-6 * a.sigma, || {
        format!("fixed point: ‖y − Xβ̂‖/√N = {fixed} vs σ̂ = {}", a.sigma)
    })?;
    let v = kkt_violation(design.x(), design.y(), &a.beta, a.sigma * lu);
    ensure(v <= 1e-5 * a.sigma * lu, || format!("β̂ is not the lasso at σ̂λ: violation {v:e}"))
}

/// Orthogonal projectors are idempotent and symmetric with trace equal to rank.
pub fn projector_identities(seed: u64, n: usize, k: usize, rank: usize) -> Check {
    let mut r = rng(seed);
    let rank = rank.min(k).min(n).max(1);
    let a = gaussian_matrix(n, rank, &mut r) * gaussian_matrix(rank, k, &mut r);
    let p = projector(&a);
    let idem = (&p * &p - &p).amax();
    let sym = (&p - p.transpose()).amax();
    ensure(idem <= 1e-10, || format!("P² − P = {idem:e}"))?;
    ensure(sym <= 1e-12, || format!("P − Pᵀ = {sym:e}"))?;
    ensure((p.trace() - rank as f64).abs() <= 1e-9, || {
        format!("trace {} vs rank {rank}", p.trace())
    })?;

    // the row-space projector of a ridge fit
    let fit = ridge_fit(&plain_design(seed, n.max(6), k.max(2), 0.0), 0.1).map_err(|e| e.to_string())?;
    let pk = fit.n_fixed();
    let rows: Vec<Vec<f64>> = (0..pk).map(|j| fit.pxt_row(j)).collect();
    let m = DMatrix::from_fn(pk, pk, |i, j| rows[i][j]);
    ensure((&m * &m - &m).amax() <= 1e-10, || "row projector is not idempotent".into())?;
    ensure((&m - m.transpose()).amax() <= 1e-12, || "row projector is not symmetric".into())?;
    ensure((m.trace() - fit.rank() as f64).abs() <= 1e-9, || {
        format!("row projector trace {} vs rank {}", m.trace(), fit.rank())
    })
}

/// `ϱ ∈ [0, 1]`, and `ϱ = 1` whenever `κ|β| ≤ C`.
pub fn p_value_range(beta: f64, kappa: f64, c: f64) -> Check {
    let p = p_single(&[beta], &[kappa], &[c])[0];
    ensure((0.0..=1.0).contains(&p), || format!("p-value {p} outside [0, 1]"))?;
    if kappa * beta.abs() <= c {
        ensure(p == 1.0, || format!("κ|β| = {} ≤ C = {c} but p = {p}", kappa * beta.abs()))?;
    }
    Ok(())
}

/// `0 ∉ CI` exactly when `ϱ ≤ α`, away from numerical ties.
pub fn decision_invariance(beta: f64, pxt: f64, omega: f64, c: f64, n: usize, alpha: f64) -> Check {
    let kappa = (n as f64 / omega).sqrt();
    let p = p_single(&[beta], &[kappa], &[c])[0];
    let ci = confidence_intervals(&[beta], &[pxt], &[omega], &[c], n, alpha).map_err(|e| e.to_string())?;
    if (p - alpha).abs() <= 1e-9 {
        return Ok(());
    }
    let excludes_zero = ci.lower[0] > 0.0 || ci.upper[0] < 0.0;
    ensure(excludes_zero == (p <= alpha), || {
        format!("p = {p}, α = {alpha}, interval [{}, {}]", ci.lower[0], ci.upper[0])
    })
}

/// Intervals widen monotonically in the slack constant.
pub fn ci_monotone_in_slack(beta: f64, pxt: f64, omega: f64, c: f64, dc: f64, n: usize) -> Check {
    let a = confidence_intervals(&[beta], &[pxt], &[omega], &[c], n, 0.05).map_err(|e| e.to_string())?;
    let b = confidence_intervals(&[beta], &[pxt], &[omega], &[c + dc], n, 0.05).map_err(|e| e.to_string())?;
    ensure(b.lower[0] <= a.lower[0] && b.upper[0] >= a.upper[0], || {
        format!("[{}, {}] not inside [{}, {}]", a.lower[0], a.upper[0], b.lower[0], b.upper[0])
    })
}

/// Negating `y` negates `β̂corr` and leaves every p-value unchanged.
pub fn sign_flip_invariance(seed: u64) -> Check {
    let design = plain_design(seed, 30, 12, 2.0);
    let flipped = design.with_response(-design.y()).map_err(|e| e.to_string())?;
    let cfg = PipelineConfig::default();
    let a = full_pipeline(&design, &cfg).map_err(|e| e.to_string())?;
    let b = full_pipeline(&flipped, &cfg).map_err(|e| e.to_string())?;
    for j in 0..design.n_fixed() {
        ensure((a.beta_corr[j] + b.beta_corr[j]).abs() <= 1e-8 * (1.0 + a.beta_corr[j].abs()), || {
            format!("β̂corr_{j}: {} vs {}", a.beta_corr[j], b.beta_corr[j])
        })?;
        ensure((a.p_single[j] - b.p_single[j]).abs() <= 1e-8, || {
            format!("p_{j}: {} vs {}", a.p_single[j], b.p_single[j])
        })?;
    }
    Ok(())
}

/// A singleton group p-value matches the single p-value within 3 Monte-Carlo
/// standard errors (plus one draw's worth of resolution).
pub fn singleton_group_agreement(seed: u64, j: usize) -> Check {
    let design = plain_design(seed, 30, 10, 0.6);
    let cfg = PipelineConfig {
        plug_in: PlugIn::Known { sigma2: 1.0, tau2: 0.5 },
        ..PipelineConfig::default()
    };
    let inf = full_pipeline(&design, &cfg).map_err(|e| e.to_string())?;
    let j = j % design.n_fixed();
    let n_mc = 20_000;
    let inputs = GroupTestInputs {
        fit: &inf.fit,
        design: &design,
        sigma2: 1.0,
        tau2: 0.5,
        beta_corr: &inf.beta_corr,
        kappa: &inf.kappa,
        c_slack: &inf.c_slack,
    };
    let g = ridge_lmm::debias::p_group(&inputs, &[j], n_mc, seed ^ 0x5eed).map_err(|e| e.to_string())?;
    let single = inf.p_single[j];
    let se = (single * (1.0 - single) / n_mc as f64).sqrt();
    ensure((g.p_value - single).abs() <= 3.0 * se + 1.0 / n_mc as f64, || {
        format!("coordinate {j}: group {} vs single {single} (se {se:e})", g.p_value)
    })
}
