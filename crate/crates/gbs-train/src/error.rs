//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {dev:e}")]
    NotSymmetric { i: usize, j: usize, dev: f64 },

    #[error("matrix contains a non-finite entry at [{i}][{j}]")]
    NonFinite { i: usize, j: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("eigendecomposition did not converge")]
    EigenFailed,

    #[error("{what} exceeds the exact-computation budget ({limit})")]
    BudgetExceeded { what: &'static str, limit: String },

    #[error("unphysical A-matrix: max singular value {max_singular_value} >= {bound}")]
    UnphysicalState {
        max_singular_value: f64,
        bound: f64,
    },

    #[error("matrix is zero; rescaling target has no effect")]
    ZeroMatrix,

    #[error("target {target} unreachable; max achievable is {max_achievable}")]
    TargetUnreachable { target: f64, max_achievable: f64 },

    #[error("rescale bisection failed to reach tolerance (residual {residual:e})")]
    RescaleUnconverged { residual: f64 },

    #[error("photon cutoff captures only {mass} of the probability mass (need >= {required})")]
    CutoffMassTooLow { mass: f64, required: f64 },

    #[error("conditioned sampling acceptance below {min_acceptance:e} ({attempts} attempts)")]
    ConditionTooRare {
        attempts: usize,
        min_acceptance: f64,
    },

    #[error("sample batch is empty")]
    EmptyBatch,

    #[error("detector mismatch: expected {expected} samples")]
    DetectorMismatch { expected: &'static str },

    #[error("operation requires reparametrized weights (theta and feature vectors)")]
    NotReparametrized,

    #[error("weight w[{k}] = 0 makes the score factor singular")]
    ZeroWeight { k: usize },

    #[error("all weights are zero after post-processing")]
    AllZeroWeights,

    #[error("non-finite gradient component at index {index}")]
    NonFiniteGradient { index: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph file parse error at line {line}: {msg}")]
    GraphParse { line: usize, msg: String },

    #[error("sample file parse error at line {line}: {msg}")]
    BatchParse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
