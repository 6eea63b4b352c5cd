//! Bias-corrected ridge inference: the estimator, its exact covariance
//! diagonal, and the resulting p-values and intervals.

mod pvalues;
mod ridge;

use serde::Serialize;

use crate::error::Result;
use crate::model::GroupedDesign;
use crate::solvers::{
    lambda_univ, lasso, ols_on_support, scaled_lasso, select_lambda_l, support_of,
};
use crate::varcomp::{henderson_m3, VarianceComponents};

pub use pvalues::{
    c_slack, confidence_intervals, kappa, p_group, p_single, ConfidenceIntervals, GroupPValue,
    GroupTestInputs, SlackRule, MC_CHUNK, PXT_DIAG_RTOL,
};
pub use ridge::{corrected_estimator, omega_diag, ridge_fit, ridge_fit_xy, RidgeFit};

/// Source of the variance components plugged into `ω_jj`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlugIn {
    /// Henderson Method III on the screened model, `τ̂²` truncated at zero.
    #[default]
    Henderson,
    /// Fixed values, e.g. the truth in a simulation.
    Known { sigma2: f64, tau2: f64 },
    /// Ignore the random effects: `τ² = 0`, `σ²` from the scaled lasso.
    FixedEffectsOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub alpha: f64,
    /// Ridge penalty; `None` means `1/N`.
    pub lambda_ridge: Option<f64>,
    pub slack: SlackRule,
    pub plug_in: PlugIn,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            alpha: 0.05,
            lambda_ridge: None,
            slack: SlackRule::default(),
            plug_in: PlugIn::default(),
        }
    }
}

/// Intermediate quantities of one pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineAudit {
    pub lambda_univ: f64,
    pub sigma_scaled: f64,
    pub scaled_iterations: usize,
    pub rho_z: f64,
    pub lambda_l: f64,
    pub beta_lasso: Vec<f64>,
    pub support_hat: Vec<usize>,
    pub beta_init: Vec<f64>,
    pub variance: Option<VarianceComponents>,
    pub sigma2_used: f64,
    pub tau2_used: f64,
    pub lambda_ridge: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DebiasedInference {
    pub beta_ridge: Vec<f64>,
    pub beta_corr: Vec<f64>,
    pub pxt_diag: Vec<f64>,
    pub omega_diag: Vec<f64>,
    pub kappa: Vec<f64>,
    pub c_slack: Vec<f64>,
    pub p_single: Vec<f64>,
    pub ci: ConfidenceIntervals,
    pub alpha: f64,
    pub slack: SlackRule,
    pub audit: PipelineAudit,
    #[serde(skip)]
    pub fit: RidgeFit,
}

impl DebiasedInference {
    /// Group p-value for `group` using the plug-in variance components of this run.
    pub fn group_p_value(
        &self,
        design: &GroupedDesign,
        group: &[usize],
        n_mc: usize,
        seed: u64,
    ) -> Result<GroupPValue> {
        let inputs = GroupTestInputs {
            fit: &self.fit,
            design,
            sigma2: self.audit.sigma2_used,
            tau2: self.audit.tau2_used,
            beta_corr: &self.beta_corr,
            kappa: &self.kappa,
            c_slack: &self.c_slack,
        };
        p_group(&inputs, group, n_mc, seed)
    }
}

/// Screening, variance components, ridge correction and inference in one pass.
pub fn full_pipeline(design: &GroupedDesign, config: &PipelineConfig) -> Result<DebiasedInference> {
    let n = design.n_obs();
    let lu = lambda_univ(n, design.n_fixed());
    let scaled = scaled_lasso(design, lu).map_err(|e| e.at("scaled_lasso"))?;
    let choice = select_lambda_l(design, scaled.sigma).map_err(|e| e.at("select_lambda_l"))?;
    let beta_lasso = lasso(design, choice.lambda_l).map_err(|e| e.at("lasso"))?;
    let support_hat = support_of(&beta_lasso);
    let init = ols_on_support(design, &support_hat).map_err(|e| e.at("ols_on_support"))?;

    let (variance, sigma2, tau2) = match config.plug_in {
        PlugIn::Henderson => {
            let vc = henderson_m3(design, &support_hat).map_err(|e| e.at("henderson_m3"))?;
            (Some(vc), vc.sigma2_hat, vc.tau2_hat)
        }
        PlugIn::Known { sigma2, tau2 } => (None, sigma2, tau2),
        PlugIn::FixedEffectsOnly => (None, scaled.sigma * scaled.sigma, 0.0),
    };

    let lambda_ridge = config.lambda_ridge.unwrap_or(1.0 / n as f64);
    let fit = ridge_fit(design, lambda_ridge).map_err(|e| e.at("ridge_fit"))?;
    let omega = omega_diag(&fit, design, sigma2, tau2).map_err(|e| e.at("omega_diag"))?;
    let beta_corr =
        corrected_estimator(&fit, &init.beta_init).map_err(|e| e.at("corrected_estimator"))?;
    let kappa = kappa(&omega, n);
    let slack = c_slack(&fit, design, &kappa, &config.slack).map_err(|e| e.at("c_slack"))?;
    let p = p_single(&beta_corr, &kappa, &slack);
    let pxt_diag = fit.pxt_diag();
    let ci = confidence_intervals(&beta_corr, &pxt_diag, &omega, &slack, n, config.alpha)
        .map_err(|e| e.at("confidence_intervals"))?;

    Ok(DebiasedInference {
        beta_ridge: fit.beta_ridge.clone(),
        beta_corr,
        pxt_diag,
        omega_diag: omega,
        kappa,
        c_slack: slack,
        p_single: p,
        ci,
        alpha: config.alpha,
        slack: config.slack.clone(),
        audit: PipelineAudit {
            lambda_univ: lu,
            sigma_scaled: scaled.sigma,
            scaled_iterations: scaled.iterations,
            rho_z: choice.rho_z,
            lambda_l: choice.lambda_l,
            beta_lasso,
            support_hat,
            beta_init: init.beta_init,
            variance,
            sigma2_used: sigma2,
            tau2_used: tau2,
            lambda_ridge,
        },
        fit,
    })
}
