use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the simulator, diagnostics, or harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("weight matrix is not primitive: {0}")]
    NotPrimitive(String),

    #[error("non-finite input to {0}")]
    NonFiniteInput(&'static str),

    #[error("objective is not strongly convex: {0}")]
    NotStronglyConvex(String),

    #[error("iteration budget of {budget} exhausted (last residual {residual:e})")]
    BudgetExceeded { budget: usize, residual: f64 },

    #[error("numerical blow-up at iteration {iteration} (agent {agent})")]
    NumericalBlowup { iteration: usize, agent: usize },

    #[error("no positive certificate vector exists: sigma^H = {sigma_h}")]
    InfeasibleC { sigma_h: f64 },

    #[error("trace incomplete: {0}")]
    TraceIncomplete(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: line {line}: {msg}")]
    FileFormat {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
