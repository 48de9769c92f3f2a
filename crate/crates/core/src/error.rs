use std::path::PathBuf;

/// Errors raised across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid map parameters: {0}")]
    InvalidParams(String),

    #[error("insufficient depth: needed {needed} symbols, {available} available")]
    InsufficientDepth { needed: usize, available: usize },

    #[error("point on singularity line y = {alpha} (y = {y})")]
    OnSingularity { y: f64, alpha: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("no samples hit {what}; increase the sample count or the radius")]
    ZeroHits { what: String },

    #[error(
        "bisection does not bracket target {target}: f(lo={lo}) = {f_lo}, f(hi={hi}) = {f_hi}"
    )]
    NoBracket {
        target: f64,
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("quadrature did not converge on [{a}, {b}]; refinement trace: {trace:?}")]
    Quadrature {
        a: f64,
        b: f64,
        trace: Vec<(f64, f64, f64)>,
    },

    #[error("power iteration did not converge after {iterations} iterations; last residuals {residuals:?}")]
    NoConvergence {
        iterations: usize,
        residuals: Vec<f64>,
    },

    #[error("resolution m = {0} out of range 1..=14")]
    ResolutionTooLarge(u32),

    #[error("decode error: {0}")]
    Decode(String),

    #[error("config error at line {line}, column {column}: {message}")]
    Config {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{context}: {source}")]
    Io {
        context: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
