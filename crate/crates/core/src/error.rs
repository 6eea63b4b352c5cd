use thiserror::Error;

/// Errors produced by the estimation and inference routines.
#[derive(Debug, Error)]
pub enum LmmError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("group {0} is empty")]
    EmptyGroup(usize),

    #[error("column {column} of {matrix} has zero variance and cannot be standardized")]
    DegenerateColumn { matrix: &'static str, column: usize },

    #[error("lasso did not converge after {sweeps} sweeps (max coefficient change {max_change:.3e})")]
    NonConvergence {
        sweeps: usize,
        max_change: f64,
        last_iterate: Vec<f64>,
    },

    #[error("scaled lasso noise estimate collapsed to {sigma:.3e} (floor {floor:.3e})")]
    DegenerateFit { sigma: f64, floor: f64 },

    #[error("selected columns are collinear: {columns:?}")]
    RankDeficient { columns: Vec<usize> },

    #[error("random effects are confounded with the selected fixed effects (trace term {trace:.3e})")]
    Confounded { trace: f64 },

    #[error("not enough residual degrees of freedom: N = {n}, rank = {rank}")]
    NoResidualDf { n: usize, rank: usize },

    #[error(
        "every diagonal entry of the ridge covariance vanishes; the design has no row-space \
         overlap with any coordinate axis"
    )]
    DegenerateCovariance,

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<LmmError>,
    },
}

impl LmmError {
    /// Wraps an error with the name of the pipeline stage that produced it.
    pub fn at(self, stage: &'static str) -> Self {
        LmmError::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, skipping stage labels.
    pub fn root(&self) -> &LmmError {
        match self {
            LmmError::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for failures caused by degenerate numerics rather than malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self.root(),
            LmmError::NonConvergence { .. }
                | LmmError::DegenerateFit { .. }
                | LmmError::RankDeficient { .. }
                | LmmError::Confounded { .. }
                | LmmError::NoResidualDf { .. }
                | LmmError::DegenerateCovariance
        )
    }
}

pub type Result<T> = std::result::Result<T, LmmError>;
