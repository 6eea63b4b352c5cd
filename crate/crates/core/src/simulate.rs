//! Monte-Carlo experiments: type-I error, power, group tests and interval
//! coverage on simulated grouped data.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::debias::{full_pipeline, DebiasedInference, PipelineConfig, PlugIn, SlackRule};
use crate::error::{LmmError, Result};
use crate::model::{build_design, GroupedDesign, ModelTruth};
use crate::par::map_indexed;
use crate::rng;

/// Covariance of the rows of `[X Z_u]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DesignModel {
    /// Toeplitz `0.2^{|j−k|}`.
    M1,
    /// Identity.
    M2,
}

impl std::str::FromStr for DesignModel {
    type Err = LmmError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "M1" => Ok(DesignModel::M1),
            "M2" => Ok(DesignModel::M2),
            other => Err(LmmError::InvalidArgument(format!("unknown model {other:?}"))),
        }
    }
}

/// Lag-one correlation of the Toeplitz design.
const AR_RHO: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub model: DesignModel,
    pub p: usize,
    pub q: usize,
    pub d: usize,
    pub m_groups: usize,
    pub n_per_group: usize,
    pub b: f64,
    pub sigma_star: f64,
    pub tau_star: f64,
    pub n_replicates: usize,
    pub seed: u64,
    pub alpha: f64,
    /// Monte-Carlo draws per group p-value.
    pub n_mc: usize,
    /// Replaces the `d` leading entries equal to `b` when set.
    pub beta_star: Option<Vec<f64>>,
    /// Groups to test; `None` means `{0..100}` and `{100..200}`.
    pub groups: Option<Vec<Vec<usize>>>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            model: DesignModel::M1,
            p: 300,
            q: 1,
            d: 5,
            m_groups: 25,
            n_per_group: 6,
            b: 1.0,
            sigma_star: 0.5,
            tau_star: 1.0,
            n_replicates: 200,
            seed: 1,
            alpha: 0.05,
            n_mc: 10_000,
            beta_star: None,
            groups: None,
        }
    }
}

impl ScenarioConfig {
    /// Coverage-comparison setting with `β* = [0.05, 2, 4, 3, 0.1, 0, …]`.
    pub fn comparison() -> Self {
        let mut beta = vec![0.0; 300];
        beta[..5].copy_from_slice(&[0.05, 2.0, 4.0, 3.0, 0.1]);
        ScenarioConfig {
            d: 5,
            beta_star: Some(beta),
            ..ScenarioConfig::default()
        }
    }

    pub fn n_obs(&self) -> usize {
        self.m_groups * self.n_per_group
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(LmmError::InvalidArgument(msg));
        if self.p == 0 || self.q == 0 || self.m_groups == 0 || self.n_per_group == 0 {
            return bad("p, q, M and n must all be positive".into());
        }
        if self.d > self.p {
            return bad(format!("d = {} exceeds p = {}", self.d, self.p));
        }
        if self.n_replicates == 0 {
            return bad("need at least one replicate".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !(self.sigma_star > 0.0) || !(self.tau_star >= 0.0) {
            return bad("sigma_star must be positive and tau_star nonnegative".into());
        }
        if let Some(beta) = &self.beta_star {
            if beta.len() != self.p {
                return bad(format!("beta_star has {} entries, expected {}", beta.len(), self.p));
            }
        }
        Ok(())
    }

    pub fn truth(&self) -> ModelTruth {
        let beta_star = self.beta_star.clone().unwrap_or_else(|| {
            let mut beta = vec![0.0; self.p];
            beta[..self.d].iter_mut().for_each(|b| *b = self.b);
            beta
        });
        ModelTruth {
            beta_star,
            sigma_star2: self.sigma_star * self.sigma_star,
            tau_star2: self.tau_star * self.tau_star,
        }
    }

    pub fn test_groups(&self) -> Result<Vec<Vec<usize>>> {
        let groups = match &self.groups {
            Some(g) => g.clone(),
            None => {
                if self.p < 200 {
                    return Err(LmmError::InvalidArgument(format!(
                        "default groups need p >= 200, got {}",
                        self.p
                    )));
                }
                vec![(0..100).collect(), (100..200).collect()]
            }
        };
        for g in &groups {
            if g.is_empty() {
                return Err(LmmError::InvalidArgument("empty test group".into()));
            }
            if let Some(&j) = g.iter().find(|&&j| j >= self.p) {
                return Err(LmmError::InvalidArgument(format!("group index {j} out of range")));
            }
        }
        Ok(groups)
    }
}

/// One row of `[X Z_u]` drawn from the scenario's covariance.
fn draw_row<R: Rng>(model: DesignModel, width: usize, rng: &mut R, out: &mut [f64]) {
    let innovation = (1.0 - AR_RHO * AR_RHO).sqrt();
    let mut prev = 0.0;
    for (k, slot) in out.iter_mut().enumerate().take(width) {
        let e: f64 = StandardNormal.sample(rng);
        *slot = match model {
            DesignModel::M2 => e,
            DesignModel::M1 if k == 0 => e,
            DesignModel::M1 => AR_RHO * prev + innovation * e,
        };
        prev = *slot;
    }
}

/// Raw `N × (p+q)` matrix with i.i.d. rows from the scenario's covariance.
pub fn draw_raw_design<R: Rng>(model: DesignModel, n: usize, width: usize, rng: &mut R) -> DMatrix<f64> {
    let mut raw = DMatrix::zeros(n, width);
    let mut row = vec![0.0; width];
    for i in 0..n {
        draw_row(model, width, rng, &mut row);
        for (k, v) in row.iter().enumerate() {
            raw[(i, k)] = *v;
        }
    }
    raw
}

/// `y = Xβ + Zυ + ε` on a standardized design.
pub fn draw_response<R: Rng>(design: &GroupedDesign, truth: &ModelTruth, rng: &mut R) -> DVector<f64> {
    let tau = truth.tau_star2.sqrt();
    let sigma = truth.sigma_star2.sqrt();
    let upsilon: Vec<f64> = (0..design.n_random())
        .map(|_| tau * Distribution::<f64>::sample(&StandardNormal, rng))
        .collect();
    let mut y = design.x() * DVector::from_column_slice(&truth.beta_star) + design.z_mul(&upsilon);
    for v in y.iter_mut() {
        *v += sigma * Distribution::<f64>::sample(&StandardNormal, rng);
    }
    y
}

/// Standardized design plus response for one replicate.
pub fn generate_scenario(cfg: &ScenarioConfig, replicate_seed: u64) -> Result<(GroupedDesign, ModelTruth)> {
    cfg.validate()?;
    let n = cfg.n_obs();
    let mut rng = rng::stream(replicate_seed, &[0]);
    let raw = draw_raw_design(cfg.model, n, cfg.p + cfg.q, &mut rng);
    let raw_x = raw.columns(0, cfg.p).clone_owned();
    let raw_z = raw.columns(cfg.p, cfg.q).clone_owned();
    let ids: Vec<usize> = (0..n).map(|i| i / cfg.n_per_group).collect();
    let design = build_design(&vec![0.0; n], &raw_x, &raw_z, &ids)?;
    let truth = cfg.truth();
    let y = draw_response(&design, &truth, &mut rng);
    Ok((design.with_response(y)?, truth))
}

/// A proportion with its Monte-Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateEstimate {
    pub value: f64,
    pub stderr: f64,
}

impl RateEstimate {
    /// Mean and standard error of per-replicate values.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        if xs.is_empty() {
            return RateEstimate {
                value: f64::NAN,
                stderr: f64::NAN,
            };
        }
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        RateEstimate {
            value: mean,
            stderr: (var / n).sqrt(),
        }
    }

    /// Binomial proportion of `true` values.
    pub fn from_indicators(hits: impl Iterator<Item = bool>) -> Self {
        let (k, n) = hits.fold((0usize, 0usize), |(k, n), h| (k + h as usize, n + 1));
        if n == 0 {
            return RateEstimate {
                value: f64::NAN,
                stderr: f64::NAN,
            };
        }
        let v = k as f64 / n as f64;
        RateEstimate {
            value: v,
            stderr: (v * (1.0 - v) / n as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupRate {
    pub indices_start: usize,
    pub size: usize,
    /// True when no coefficient in the group is nonzero.
    pub null_true: bool,
    pub rejection: RateEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub n_replicates: usize,
    pub n_failed: usize,
    /// Failure messages of the failed replicates, in replicate order.
    pub failures: Vec<String>,
    pub avg_type1: RateEstimate,
    /// `None` when the truth has no nonzero coefficient.
    pub avg_power: Option<RateEstimate>,
    pub group_type1: Option<RateEstimate>,
    pub group_power: Option<RateEstimate>,
    pub groups: Vec<GroupRate>,
    pub coverage: Vec<RateEstimate>,
    pub mean_sigma2_hat: f64,
    pub mean_tau2_hat: f64,
}

/// Plot-ready record `(scenario, metric, value, stderr)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub scenario: String,
    pub metric: String,
    pub value: f64,
    pub stderr: f64,
}

impl SimulationReport {
    pub fn long_table(&self, scenario: &str) -> Vec<TableRow> {
        let row = |metric: String, r: &RateEstimate| TableRow {
            scenario: scenario.to_string(),
            metric,
            value: r.value,
            stderr: r.stderr,
        };
        let mut out = vec![row("avg_type1".into(), &self.avg_type1)];
        if let Some(p) = &self.avg_power {
            out.push(row("avg_power".into(), p));
        }
        if let Some(r) = &self.group_type1 {
            out.push(row("group_type1".into(), r));
        }
        if let Some(r) = &self.group_power {
            out.push(row("group_power".into(), r));
        }
        for (g, gr) in self.groups.iter().enumerate() {
            out.push(row(format!("group_{g}_rejection"), &gr.rejection));
        }
        for (j, c) in self.coverage.iter().enumerate() {
            out.push(row(format!("coverage_{j}"), c));
        }
        out
    }
}

struct Replicate {
    reject: Vec<bool>,
    covered: Vec<bool>,
    group_reject: Vec<bool>,
    sigma2_hat: f64,
    tau2_hat: f64,
}

fn run_replicate(
    cfg: &ScenarioConfig,
    r: usize,
    pipeline: &PipelineConfig,
    groups: &[Vec<usize>],
) -> Result<Replicate> {
    let rep_seed = rng::derive_seed(cfg.seed, &[r as u64]);
    let (design, truth) = generate_scenario(cfg, rep_seed)?;
    let inf = full_pipeline(&design, pipeline)?;
    let group_reject = groups
        .iter()
        .enumerate()
        .map(|(g, idx)| {
            let seed = rng::derive_seed(rep_seed, &[1, g as u64]);
            inf.group_p_value(&design, idx, cfg.n_mc, seed)
                .map(|gp| gp.p_value <= cfg.alpha)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(&inf, &truth, cfg.alpha, group_reject))
}

fn summarize(inf: &DebiasedInference, truth: &ModelTruth, alpha: f64, group_reject: Vec<bool>) -> Replicate {
    let covered = truth
        .beta_star
        .iter()
        .enumerate()
        .map(|(j, &b)| inf.ci.lower[j] <= b && b <= inf.ci.upper[j])
        .collect();
    let (sigma2_hat, tau2_hat) = inf
        .audit
        .variance
        .map(|v| (v.sigma2_hat, v.tau2_hat))
        .unwrap_or((inf.audit.sigma2_used, inf.audit.tau2_used));
    Replicate {
        reject: inf.p_single.iter().map(|&p| p <= alpha).collect(),
        covered,
        group_reject,
        sigma2_hat,
        tau2_hat,
    }
}

fn aggregate(
    cfg: &ScenarioConfig,
    groups: &[Vec<usize>],
    outcomes: Vec<Result<Replicate>>,
) -> SimulationReport {
    let truth = cfg.truth();
    let support = truth.support();
    let is_signal: Vec<bool> = truth.beta_star.iter().map(|&b| b != 0.0).collect();
    let n_null = cfg.p - support.len();

    let mut failures = Vec::new();
    let mut ok = Vec::new();
    for (r, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(rep) => ok.push(rep),
            Err(e) => failures.push(format!("replicate {r}: {e}")),
        }
    }

    let type1: Vec<f64> = ok
        .iter()
        .map(|rep| {
            let hits = rep.reject.iter().zip(&is_signal).filter(|(&r, &s)| r && !s).count();
            hits as f64 / n_null.max(1) as f64
        })
        .collect();
    let power: Vec<f64> = ok
        .iter()
        .map(|rep| {
            let hits = rep.reject.iter().zip(&is_signal).filter(|(&r, &s)| r && s).count();
            hits as f64 / support.len().max(1) as f64
        })
        .collect();
    let group_rates: Vec<GroupRate> = groups
        .iter()
        .enumerate()
        .map(|(g, idx)| GroupRate {
            indices_start: idx[0],
            size: idx.len(),
            null_true: idx.iter().all(|&j| !is_signal[j]),
            rejection: RateEstimate::from_indicators(ok.iter().map(|rep| rep.group_reject[g])),
        })
        .collect();
    let pooled = |null: bool| {
        let picked: Vec<usize> = (0..groups.len()).filter(|&g| group_rates[g].null_true == null).collect();
        if picked.is_empty() {
            return None;
        }
        Some(RateEstimate::from_indicators(
            ok.iter().flat_map(|rep| picked.iter().map(move |&g| rep.group_reject[g])),
        ))
    };
    let coverage = (0..cfg.p)
        .map(|j| RateEstimate::from_indicators(ok.iter().map(|rep| rep.covered[j])))
        .collect();
    let mean = |f: fn(&Replicate) -> f64| {
        if ok.is_empty() {
            f64::NAN
        } else {
            ok.iter().map(f).sum::<f64>() / ok.len() as f64
        }
    };

    SimulationReport {
        n_replicates: cfg.n_replicates,
        n_failed: failures.len(),
        failures,
        avg_type1: RateEstimate::from_samples(&type1),
        avg_power: (!support.is_empty()).then(|| RateEstimate::from_samples(&power)),
        group_type1: pooled(true),
        group_power: pooled(false),
        groups: group_rates,
        coverage,
        mean_sigma2_hat: mean(|r| r.sigma2_hat),
        mean_tau2_hat: mean(|r| r.tau2_hat),
    }
}

fn run(cfg: &ScenarioConfig, groups: Vec<Vec<usize>>) -> Result<SimulationReport> {
    cfg.validate()?;
    let pipeline = PipelineConfig {
        alpha: cfg.alpha,
        ..PipelineConfig::default()
    };
    let outcomes = map_indexed(cfg.n_replicates, |r| run_replicate(cfg, r, &pipeline, &groups));
    Ok(aggregate(cfg, &groups, outcomes))
}

/// Single-coefficient rejection rates and coverage over the replicates.
pub fn run_single_tests(cfg: &ScenarioConfig) -> Result<SimulationReport> {
    run(cfg, Vec::new())
}

/// Single tests plus group tests on [`ScenarioConfig::test_groups`].
pub fn run_group_tests(cfg: &ScenarioConfig) -> Result<SimulationReport> {
    let groups = cfg.test_groups()?;
    run(cfg, groups)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub n_replicates: usize,
    pub n_failed: usize,
    /// Per-coefficient coverage with the mixed-model covariance.
    pub ours: Vec<RateEstimate>,
    /// Per-coefficient coverage when the random effects are ignored.
    pub baseline: Vec<RateEstimate>,
    /// Indices averaged for the headline contrast.
    pub contrast_indices: Vec<usize>,
    pub ours_mean: f64,
    pub baseline_mean: f64,
    /// `ours_mean − baseline_mean` with a paired standard error over replicates.
    pub gap: RateEstimate,
    /// True when the gap is at least one standard error.
    pub conclusive: bool,
}

/// Coverage of the mixed-model intervals against a baseline that sets `τ² = 0`
/// and plugs in the scaled-lasso noise level. Both use the fixed-effects slack
/// analogue with `ξ = 0.05`; screening is shared.
pub fn run_comparison(cfg: &ScenarioConfig) -> Result<ComparisonReport> {
    cfg.validate()?;
    let slack = SlackRule::RidgeAnalogue { xi: 0.05 };
    let ours_cfg = PipelineConfig {
        alpha: cfg.alpha,
        slack: slack.clone(),
        ..PipelineConfig::default()
    };
    let base_cfg = PipelineConfig {
        plug_in: PlugIn::FixedEffectsOnly,
        ..ours_cfg.clone()
    };
    let contrast_indices: Vec<usize> = (1..4).filter(|&j| j < cfg.p).collect();

    let outcomes = map_indexed(cfg.n_replicates, |r| -> Result<(Vec<bool>, Vec<bool>)> {
        let rep_seed = rng::derive_seed(cfg.seed, &[r as u64]);
        let (design, truth) = generate_scenario(cfg, rep_seed)?;
        let ours = full_pipeline(&design, &ours_cfg)?;
        let base = full_pipeline(&design, &base_cfg)?;
        let a = summarize(&ours, &truth, cfg.alpha, Vec::new()).covered;
        let b = summarize(&base, &truth, cfg.alpha, Vec::new()).covered;
        Ok((a, b))
    });
    let n_failed = outcomes.iter().filter(|o| o.is_err()).count();
    let ok: Vec<(Vec<bool>, Vec<bool>)> = outcomes.into_iter().filter_map(|o| o.ok()).collect();

    let ours: Vec<RateEstimate> = (0..cfg.p)
        .map(|j| RateEstimate::from_indicators(ok.iter().map(|(a, _)| a[j])))
        .collect();
    let baseline: Vec<RateEstimate> = (0..cfg.p)
        .map(|j| RateEstimate::from_indicators(ok.iter().map(|(_, b)| b[j])))
        .collect();
    let k = contrast_indices.len().max(1) as f64;
    let diffs: Vec<f64> = ok
        .iter()
        .map(|(a, b)| {
            contrast_indices
                .iter()
                .map(|&j| a[j] as u8 as f64 - b[j] as u8 as f64)
                .sum::<f64>()
                / k
        })
        .collect();
    let gap = RateEstimate::from_samples(&diffs);
    let avg = |v: &[RateEstimate]| contrast_indices.iter().map(|&j| v[j].value).sum::<f64>() / k;
    let conclusive = gap.value >= gap.stderr && gap.stderr > 0.0;
    Ok(ComparisonReport {
        n_replicates: cfg.n_replicates,
        n_failed,
        ours_mean: avg(&ours),
        baseline_mean: avg(&baseline),
        ours,
        baseline,
        contrast_indices,
        gap,
        conclusive,
    })
}
