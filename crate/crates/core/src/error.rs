use thiserror::Error;

/// Errors produced by the estimation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("probability {0} is outside [0, 1]")]
    ProbabilityDomain(f64),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },

    #[error("degenerate column {column}: all observed values are identical")]
    DegenerateColumn { column: usize },

    #[error("degenerate pair ({j}, {k}): column {column} has no untied pairs")]
    DegeneratePair { j: usize, k: usize, column: usize },

    #[error("ordinal code {code} out of range for {levels} levels")]
    CodeOutOfRange { code: f64, levels: usize },

    #[error("column {column} has {observed} distinct values but is declared with {declared} levels")]
    TooManyLevels {
        column: usize,
        observed: usize,
        declared: usize,
    },

    #[error("invalid cutoffs: {0}")]
    InvalidCutoffs(String),

    #[error("unsupported bridge: {0}")]
    UnsupportedBridge(String),

    #[error("unsupported ordinal pair ({j}, {k}) with {levels_j} x {levels_k} levels")]
    UnsupportedPair {
        j: usize,
        k: usize,
        levels_j: usize,
        levels_k: usize,
    },

    #[error("degenerate bridge: {0}")]
    DegenerateBridge(String),

    #[error("root finding did not converge after {iterations} iterations (bracket [{lo}, {hi}], residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        lo: f64,
        hi: f64,
        residual: f64,
    },

    #[error("sample size {n} exceeds the tractability ceiling {max}")]
    Intractable { n: usize, max: usize },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("graphical lasso did not converge within {sweeps} sweeps (last change {change:e})")]
    GlassoNoConvergence { sweeps: usize, change: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
