use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected a point on S^{expected}, got S^{got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported dimension d = {0}; the sphere must have d >= 2")]
    UnsupportedDimension(usize),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("numerical degeneracy: {0}")]
    Degeneracy(String),

    #[error("sampler stalled at point {point} of {k_n} after {trials} proposals")]
    SamplerStall { point: usize, k_n: u64, trials: u64 },

    #[error("outside the sampling envelope: {0}")]
    Envelope(String),

    #[error("size guard: {0}")]
    SizeGuard(String),

    #[error("structure violation: {0}")]
    Structure(String),

    #[error("spectral truncation failed: tail {tail:.3e} exceeds tolerance {tolerance:.3e} at {levels} levels ({copies} copies)")]
    Truncation { tail: f64, tolerance: f64, levels: usize, copies: usize },

    #[error("degenerate statistic: {0}")]
    Degenerate(String),

    #[error("non-degenerate statistic: {0}")]
    NonDegenerate(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
