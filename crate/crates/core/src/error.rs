use thiserror::Error;

/// Errors raised anywhere in the simulation pipeline.
///
/// Numeric payloads are widened to `f64` so the type stays independent of the
/// scalar the computation ran in.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size {n} must be a power of two and at least 8")]
    InvalidGridSize { n: usize },

    #[error("grid extent must be positive and finite, got {extent}")]
    InvalidExtent { extent: f64 },

    #[error("fields live on different grids (n={left_n}, L={left_extent} vs n={right_n}, L={right_extent})")]
    GridMismatch {
        left_n: usize,
        left_extent: f64,
        right_n: usize,
        right_extent: f64,
    },

    #[error("length mismatch: expected {expected} samples, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("{what} = {value} is not resolvable on this grid; must lie in [{min}, {max}]")]
    Unresolvable {
        what: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("invalid parameter {what} = {value}: {reason}")]
    InvalidParameter {
        what: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error(
        "propagation over z={distance} with k_z={k_z} undersamples the quadratic k-phase \
         (step {phase_step:.4} rad per k-sample, limit pi); at this spacing use n >= {required_n}"
    )]
    SamplingGuard {
        distance: f64,
        k_z: f64,
        phase_step: f64,
        required_n: usize,
    },

    #[error("mask transmission |t| = {modulus} exceeds unity at sample {index}")]
    MaskNotPassive { index: usize, modulus: f64 },

    #[error("edge leakage {fraction:e} at stage '{stage}' exceeds {threshold:e}")]
    EdgeLeakage {
        stage: String,
        fraction: f64,
        threshold: f64,
    },

    #[error("dark conditional at x1 = {x1}: total detection weight {weight:e} is zero")]
    DarkConditional { x1: f64, weight: f64 },

    #[error("conditioning position x1 = {x1} lies outside the central window |x1| <= {limit}")]
    PositionOutOfRange { x1: f64, limit: f64 },

    #[error("sweep failed at {} position(s): {}", .0.len(), summarize(.0))]
    Sweep(Vec<(f64, Error)>),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("outcome {outcome} has zero probability; its conditional is undefined")]
    ImpossibleOutcome { outcome: usize },

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

fn summarize(failures: &[(f64, Error)]) -> String {
    failures
        .iter()
        .map(|(x1, err)| format!("x1={x1}: {err}"))
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
