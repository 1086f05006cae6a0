use thiserror::Error;

/// Errors raised by the numerical kernels and solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("non-positive temperature (RT = {rt:e})")]
    NonPositiveTemperature { rt: f64 },

    #[error("non-positive density (rho = {rho:e})")]
    NonPositiveDensity { rho: f64 },

    #[error("moment Gram matrix is numerically singular (rcond = {rcond:e})")]
    SingularGram { rcond: f64 },

    #[error("unsupported reconstruction degree {0}")]
    UnsupportedDegree(usize),

    #[error("grid/field mismatch: {0}")]
    GridMismatch(String),

    #[error("velocity grid has zero extent; cannot derive a time step")]
    ZeroVelocityGrid,

    #[error("tail extension added more than {limit} nodes")]
    RunawayGrid { limit: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Wraps another error with the stage and spatial cell where it happened.
    #[error("step {step}, stage `{stage}`, cell {cell}: {source}")]
    AtCell {
        step: usize,
        stage: &'static str,
        cell: usize,
        #[source]
        source: Box<SolverError>,
    },
}

impl SolverError {
    pub(crate) fn at(self, step: usize, stage: &'static str, cell: usize) -> Self {
        SolverError::AtCell { step, stage, cell, source: Box::new(self) }
    }

    /// Innermost error, with any cell context stripped.
    pub fn root(&self) -> &SolverError {
        match self {
            SolverError::AtCell { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, SolverError>;
