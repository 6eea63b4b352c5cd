//! Slack constants, single and group p-values, and confidence intervals.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{LmmError, Result};
use crate::model::GroupedDesign;
use crate::normal;
use crate::par::map_indexed;
use crate::rng;

use super::ridge::RidgeFit;

/// Monte-Carlo draws handled by one random stream.
pub const MC_CHUNK: usize = 512;

/// `(P_{Xᵀ})_jj` at or below this is treated as unidentifiable.
pub const PXT_DIAG_RTOL: f64 = 1e-10;

/// How the slack constants `C_j` are chosen.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum SlackRule {
    /// `κ_j max_{k≠j}|P_jk| (q log p / M)^{1/2−η}`.
    Corollary { eta: f64 },
    /// `κ_j max_{k≠j}|P_jk| (log p / N)^{1/2−ξ}`, the fixed-effects analogue.
    RidgeAnalogue { xi: f64 },
    /// Caller-supplied constants.
    External { values: Vec<f64> },
}

impl Default for SlackRule {
    fn default() -> Self {
        SlackRule::Corollary { eta: 0.005 }
    }
}

/// `κ_j = √(N/ω_jj)`, set to zero where `ω_jj` is negligible relative to the largest entry.
pub fn kappa(omega_diag: &[f64], n_obs: usize) -> Vec<f64> {
    let top = omega_diag.iter().copied().fold(0.0, f64::max);
    omega_diag
        .iter()
        .map(|&w| {
            if w > 1e-14 * top && w > 0.0 {
                (n_obs as f64 / w).sqrt()
            } else {
                0.0
            }
        })
        .collect()
}

pub fn c_slack(fit: &RidgeFit, design: &GroupedDesign, kappa: &[f64], rule: &SlackRule) -> Result<Vec<f64>> {
    let p = fit.n_fixed();
    if kappa.len() != p {
        return Err(LmmError::Dimension(format!("kappa has {} entries, expected {p}", kappa.len())));
    }
    let rate = match rule {
        SlackRule::External { values } => {
            if values.len() != p {
                return Err(LmmError::Dimension(format!(
                    "{} slack constants supplied, expected {p}",
                    values.len()
                )));
            }
            if values.iter().any(|c| !(*c >= 0.0)) {
                return Err(LmmError::InvalidArgument("slack constants must be nonnegative".into()));
            }
            return Ok(values.clone());
        }
        SlackRule::Corollary { eta } => {
            check_exponent("eta", *eta)?;
            let ratio = design.q() as f64 * (p as f64).ln() / design.n_groups() as f64;
            ratio.powf(0.5 - eta)
        }
        SlackRule::RidgeAnalogue { xi } => {
            check_exponent("xi", *xi)?;
            ((p as f64).ln() / design.n_obs() as f64).powf(0.5 - xi)
        }
    };
    Ok(fit
        .pxt_offdiag_max()
        .into_iter()
        .zip(kappa)
        .map(|(m, k)| k * m * rate)
        .collect())
}

fn check_exponent(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 0.5 {
        Ok(())
    } else {
        Err(LmmError::InvalidArgument(format!("{name} must lie in (0, 1/2), got {v}")))
    }
}

/// `ϱ_j = 2(1 − Φ((κ_j|β̂corr_j| − C_j)₊))`.
pub fn p_single(beta_corr: &[f64], kappa: &[f64], c_slack: &[f64]) -> Vec<f64> {
    beta_corr
        .iter()
        .zip(kappa)
        .zip(c_slack)
        .map(|((b, k), c)| {
            let stat = (k * b.abs() - c).max(0.0);
            (2.0 * normal::upper_tail(stat)).min(1.0)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupPValue {
    pub p_value: f64,
    /// Binomial standard error of the Monte-Carlo estimate.
    pub std_error: f64,
    pub n_mc: usize,
    /// `max_{j∈G} κ_j|β̂corr_j|`.
    pub observed: f64,
}

/// Everything needed to draw the noise vector `W = A(Zv + e)/N`.
pub struct GroupTestInputs<'a> {
    pub fit: &'a RidgeFit,
    pub design: &'a GroupedDesign,
    pub sigma2: f64,
    pub tau2: f64,
    pub beta_corr: &'a [f64],
    pub kappa: &'a [f64],
    pub c_slack: &'a [f64],
}

/// Monte-Carlo estimate of `P[max_{j∈G}(κ_j|W_j| + C_j) > max_{j∈G} κ_j|β̂corr_j|]`.
///
/// Draws are split into chunks of [`MC_CHUNK`], each with its own stream
/// derived from `seed`, so the result does not depend on thread count.
pub fn p_group(inputs: &GroupTestInputs<'_>, group: &[usize], n_mc: usize, seed: u64) -> Result<GroupPValue> {
    let GroupTestInputs {
        fit,
        design,
        sigma2,
        tau2,
        beta_corr,
        kappa,
        c_slack,
    } = *inputs;
    if group.is_empty() {
        return Err(LmmError::InvalidArgument("group is empty".into()));
    }
    if n_mc < 1000 {
        return Err(LmmError::InvalidArgument(format!("need at least 1000 draws, got {n_mc}")));
    }
    let p = fit.n_fixed();
    if let Some(&bad) = group.iter().find(|&&j| j >= p) {
        return Err(LmmError::InvalidArgument(format!("group index {bad} out of range")));
    }
    if !(sigma2 > 0.0) || !(tau2 >= 0.0) {
        return Err(LmmError::InvalidArgument("variance components out of range".into()));
    }
    if group.iter().all(|&j| kappa[j] == 0.0) {
        return Err(LmmError::DegenerateCovariance);
    }

    let observed = group
        .iter()
        .map(|&j| kappa[j] * beta_corr[j].abs())
        .fold(0.0, f64::max);
    let a_group = fit.a_rows(group);
    let scale: Vec<f64> = group.iter().map(|&j| kappa[j] / fit.n_obs() as f64).collect();
    let offset: Vec<f64> = group.iter().map(|&j| c_slack[j]).collect();
    let (sigma, tau) = (sigma2.sqrt(), tau2.sqrt());

    let n_chunks = n_mc.div_ceil(MC_CHUNK);
    let counts = map_indexed(n_chunks, |c| {
        let draws = MC_CHUNK.min(n_mc - c * MC_CHUNK);
        let mut rng = rng::stream(seed, &[c as u64]);
        let noise = sample_marginal_noise(design, sigma, tau, draws, &mut rng);
        let w = &a_group * noise;
        (0..draws)
            .filter(|&d| {
                let stat = w
                    .column(d)
                    .iter()
                    .zip(&scale)
                    .zip(&offset)
                    .map(|((wj, s), off)| s * wj.abs() + off)
                    .fold(f64::NEG_INFINITY, f64::max);
                stat > observed
            })
            .count()
    });
    let exceed: usize = counts.into_iter().sum();
    let p_hat = exceed as f64 / n_mc as f64;
    Ok(GroupPValue {
        p_value: p_hat,
        std_error: (p_hat * (1.0 - p_hat) / n_mc as f64).sqrt(),
        n_mc,
        observed,
    })
}

/// `draws` independent columns of `Zv + e` with `v ~ N(0, τ²I)`, `e ~ N(0, σ²I)`.
fn sample_marginal_noise<R: rand::Rng>(
    design: &GroupedDesign,
    sigma: f64,
    tau: f64,
    draws: usize,
    rng: &mut R,
) -> DMatrix<f64> {
    let n = design.n_obs();
    let q = design.q();
    let mut out = DMatrix::zeros(n, draws);
    let ranges = design.group_ranges();
    let mut v = vec![0.0; q];
    for d in 0..draws {
        let mut col = out.column_mut(d);
        for (rows, block) in ranges.iter().zip(design.z_blocks()) {
            for vk in v.iter_mut() {
                let s: f64 = StandardNormal.sample(rng);
                *vk = tau * s;
            }
            for (i, r) in rows.clone().enumerate() {
                let e: f64 = StandardNormal.sample(rng);
                let mut val = sigma * e;
                for (k, vk) in v.iter().enumerate() {
                    val += block[(i, k)] * vk;
                }
                col[r] = val;
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceIntervals {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// False where `(P_{Xᵀ})_jj` is too small to rescale by; bounds are then infinite.
    pub reportable: Vec<bool>,
}

/// Intervals `[β̂corr_j ± (z_{1−α/2}√(ω_jj/N) + C_j√(ω_jj/N))] / (P_{Xᵀ})_jj`.
///
/// The slack enters on the same scale as in [`p_single`], so `0` lies outside
/// the interval exactly when `ϱ_j ≤ α`.
pub fn confidence_intervals(
    beta_corr: &[f64],
    pxt_diag: &[f64],
    omega_diag: &[f64],
    c_slack: &[f64],
    n_obs: usize,
    alpha: f64,
) -> Result<ConfidenceIntervals> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(LmmError::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let z = normal::quantile(1.0 - alpha / 2.0);
    let n = n_obs as f64;
    let p = beta_corr.len();
    let mut out = ConfidenceIntervals {
        lower: Vec::with_capacity(p),
        upper: Vec::with_capacity(p),
        reportable: Vec::with_capacity(p),
    };
    for j in 0..p {
        let d = pxt_diag[j];
        if !(d > PXT_DIAG_RTOL) {
            out.lower.push(f64::NEG_INFINITY);
            out.upper.push(f64::INFINITY);
            out.reportable.push(false);
            continue;
        }
        let sd = (omega_diag[j] / n).sqrt();
        let half = (z + c_slack[j]) * sd / d;
        let center = beta_corr[j] / d;
        out.lower.push(center - half);
        out.upper.push(center + half);
        out.reportable.push(true);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_statistic_gives_unit_p_value() {
        let p = p_single(&[0.1, -0.2], &[1.0, 2.0], &[0.5, 0.4]);
        assert_eq!(p, vec![1.0, 1.0]);
    }

    #[test]
    fn five_percent_threshold() {
        let p = p_single(&[1.959964 + 0.3], &[1.0], &[0.3]);
        assert!((p[0] - 0.05).abs() < 1e-6);
    }

    #[test]
    fn unit_interval_half_width() {
        let ci = confidence_intervals(&[0.0], &[1.0], &[10.0], &[0.0], 10, 0.05).unwrap();
        assert!((ci.upper[0] - 1.959964).abs() < 1e-6);
        assert!((ci.lower[0] + 1.959964).abs() < 1e-6);
    }

    #[test]
    fn tiny_diagonal_is_flagged() {
        let ci = confidence_intervals(&[1.0], &[1e-13], &[1.0], &[0.0], 1, 0.05).unwrap();
        assert!(!ci.reportable[0]);
        assert!(ci.lower[0] <= ci.upper[0]);
    }

    #[test]
    fn kappa_zero_where_variance_vanishes() {
        let k = kappa(&[4.0, 0.0, 1e-30], 16);
        assert_eq!(k[0], 2.0);
        assert_eq!(k[1], 0.0);
        assert_eq!(k[2], 0.0);
    }
}
