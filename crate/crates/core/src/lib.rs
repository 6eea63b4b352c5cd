//! De-biased ridge inference for high-dimensional linear mixed-effect models.
//!
//! The model is `y = Xβ + Zυ + ε` with `υ ~ N(0, τ²I)` and `ε ~ N(0, σ²I)`,
//! observed in `M` independent groups. The pipeline screens fixed effects
//! with a lasso, estimates the variance components on the screened model,
//! and tests each coefficient with a bias-corrected ridge estimator whose
//! covariance accounts for the within-group correlation.

// negated float comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

#[cfg(feature = "cli")]
pub mod cli;
pub mod debias;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod model;
pub mod normal;
pub mod par;
pub mod rng;
pub mod simulate;
pub mod solvers;
pub mod varcomp;

pub use error::{LmmError, Result};
pub use model::{build_design, marginal_covariance, GroupedDesign, MarginalCovariance, ModelTruth};
pub use varcomp::{henderson_m3, VarianceComponents};
pub use debias::{full_pipeline, DebiasedInference, PipelineConfig, PlugIn, SlackRule};
