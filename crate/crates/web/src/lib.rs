//! WebAssembly bindings for the browser demo. Every export returns a JSON
//! string; the plain-Rust functions behind them are usable natively.

use nalgebra::DVector;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use ridge_lmm::debias::{omega_diag, ridge_fit, ridge_fit_xy};
use ridge_lmm::diagnostics::{run_cell, CellResult, GridSettings};
use ridge_lmm::simulate::{generate_scenario, DesignModel, ScenarioConfig};
use ridge_lmm::{full_pipeline, rng, PipelineConfig};

/// Browser inputs are bounded so a click cannot hang the page.
const MAX_P: usize = 400;
const MAX_N: usize = 600;

#[derive(Debug, Clone, Copy)]
pub struct ScenarioInput {
    pub model: DesignModel,
    pub p: usize,
    pub d: usize,
    pub b: f64,
    pub sigma: f64,
    pub tau: f64,
    pub m_groups: usize,
    pub n_per_group: usize,
    pub seed: u64,
}

impl ScenarioInput {
    fn config(&self) -> Result<ScenarioConfig, String> {
        if self.p > MAX_P || self.m_groups * self.n_per_group > MAX_N {
            return Err(format!("demo limits: p ≤ {MAX_P}, N ≤ {MAX_N}"));
        }
        let cfg = ScenarioConfig {
            model: self.model,
            p: self.p,
            d: self.d,
            b: self.b,
            sigma_star: self.sigma,
            tau_star: self.tau,
            m_groups: self.m_groups,
            n_per_group: self.n_per_group,
            n_replicates: 1,
            seed: self.seed,
            ..ScenarioConfig::default()
        };
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

#[derive(Debug, Serialize)]
pub struct FitView {
    pub truth: Vec<f64>,
    /// `β̂corr_j / (P_{Xᵀ})_jj`, the interval center.
    pub estimate: Vec<f64>,
    pub ci_lower: Vec<f64>,
    pub ci_upper: Vec<f64>,
    pub p_value: Vec<f64>,
    pub selected: Vec<usize>,
    pub sigma2_hat: f64,
    pub tau2_hat: f64,
    pub lambda_l: f64,
    pub n_obs: usize,
}

/// One simulated data set and the full inference pipeline on it.
pub fn fit_scenario(input: &ScenarioInput) -> Result<FitView, String> {
    let cfg = input.config()?;
    let (design, truth) = generate_scenario(&cfg, rng::derive_seed(input.seed, &[0])).map_err(|e| e.to_string())?;
    let inf = full_pipeline(&design, &PipelineConfig::default()).map_err(|e| e.to_string())?;
    let vc = inf.audit.variance.ok_or("variance components unavailable")?;
    let estimate = inf
        .beta_corr
        .iter()
        .zip(&inf.pxt_diag)
        .zip(&inf.ci.reportable)
        .map(|((b, d), &ok)| if ok { b / d } else { f64::NAN })
        .collect();
    Ok(FitView {
        truth: truth.beta_star,
        estimate,
        ci_lower: inf.ci.lower,
        ci_upper: inf.ci.upper,
        p_value: inf.p_single,
        selected: inf.audit.support_hat,
        sigma2_hat: vc.sigma2_hat,
        tau2_hat: vc.tau2_hat,
        lambda_l: inf.audit.lambda_l,
        n_obs: design.n_obs(),
    })
}

#[derive(Debug, Serialize)]
pub struct TradeoffPoint {
    pub lambda: f64,
    /// Mean interval half-width `z √(ω_jj/N) / (P_{Xᵀ})_jj` without slack.
    pub mean_half_width: f64,
    /// `max_j |E β̂_j − (P_{Xᵀ}β*)_j| / (P_{Xᵀ})_jj`, the shrinkage bias left by the penalty.
    pub max_bias: f64,
    /// Largest `ω_jj`.
    pub max_omega: f64,
}

/// How the ridge penalty trades shrinkage bias against variance on one design.
pub fn ridge_tradeoff(input: &ScenarioInput, log10_min: f64, log10_max: f64, steps: usize) -> Result<Vec<TradeoffPoint>, String> {
    if log10_min.partial_cmp(&log10_max) != Some(std::cmp::Ordering::Less) || !(2..=200).contains(&steps) {
        return Err("need log10_min < log10_max and 2 ≤ steps ≤ 200".into());
    }
    let cfg = input.config()?;
    let (design, truth) = generate_scenario(&cfg, rng::derive_seed(input.seed, &[0])).map_err(|e| e.to_string())?;
    let n = design.n_obs() as f64;
    let signal = design.x() * DVector::from_column_slice(&truth.beta_star);
    (0..steps)
        .map(|k| {
            let lambda = 10f64.powf(log10_min + (log10_max - log10_min) * k as f64 / (steps - 1) as f64);
            let fit = ridge_fit(&design, lambda).map_err(|e| e.to_string())?;
            let omega = omega_diag(&fit, &design, truth.sigma_star2, truth.tau_star2).map_err(|e| e.to_string())?;
            let pxt = fit.pxt_diag();
            let p = pxt.len() as f64;
            let half: f64 = omega.iter().zip(&pxt).map(|(w, d)| 1.959964 * (w / n).sqrt() / d).sum::<f64>() / p;
            let mean = ridge_fit_xy(design.x(), &signal, lambda).map_err(|e| e.to_string())?.beta_ridge;
            let target = fit.pxt_apply(&truth.beta_star);
            let max_bias = (0..pxt.len())
                .map(|j| (mean[j] - target[j]).abs() / pxt[j])
                .fold(0.0, f64::max);
            Ok(TradeoffPoint {
                lambda,
                mean_half_width: half,
                max_bias,
                max_omega: omega.iter().copied().fold(0.0, f64::max),
            })
        })
        .collect()
}

/// Proportions of Wishart designs meeting the two design conditions.
pub fn assumption_cell(p: usize, d: usize, replicates: usize, seed: u64) -> Result<CellResult, String> {
    if !(1..=128).contains(&p) || d == 0 || d > p || !(1..=500).contains(&replicates) {
        return Err("need 1 ≤ d ≤ p ≤ 128 and 1 ≤ replicates ≤ 500".into());
    }
    let settings = GridSettings {
        replicates,
        seed,
        ..GridSettings::default()
    };
    Ok(run_cell(p, d, &settings))
}

fn to_json<T: Serialize>(value: Result<T, String>) -> Result<String, JsError> {
    let v = value.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

fn parse_model(model: &str) -> Result<DesignModel, JsError> {
    model.parse().map_err(|e: ridge_lmm::LmmError| JsError::new(&e.to_string()))
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen(js_name = fitScenario)]
pub fn fit_scenario_js(
    model: &str,
    p: usize,
    d: usize,
    b: f64,
    sigma: f64,
    tau: f64,
    m_groups: usize,
    n_per_group: usize,
    seed: u32,
) -> Result<String, JsError> {
    let input = ScenarioInput {
        model: parse_model(model)?,
        p,
        d,
        b,
        sigma,
        tau,
        m_groups,
        n_per_group,
        seed: seed.into(),
    };
    to_json(fit_scenario(&input))
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen(js_name = ridgeTradeoff)]
pub fn ridge_tradeoff_js(
    model: &str,
    p: usize,
    sigma: f64,
    tau: f64,
    m_groups: usize,
    n_per_group: usize,
    seed: u32,
    log10_min: f64,
    log10_max: f64,
    steps: usize,
) -> Result<String, JsError> {
    let input = ScenarioInput {
        model: parse_model(model)?,
        p,
        d: 5.min(p),
        b: 1.0,
        sigma,
        tau,
        m_groups,
        n_per_group,
        seed: seed.into(),
    };
    to_json(ridge_tradeoff(&input, log10_min, log10_max, steps))
}

#[wasm_bindgen(js_name = assumptionCell)]
pub fn assumption_cell_js(p: usize, d: usize, replicates: usize, seed: u32) -> Result<String, JsError> {
    to_json(assumption_cell(p, d, replicates, seed.into()))
}
