use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported dimension {0} (supported range is 1..=6)")]
    UnsupportedDimension(usize),

    #[error("metric `{label}` is not positive definite at {point:?}")]
    NotPositiveDefinite { label: String, point: Vec<f64> },

    #[error("metric `{label}` is singular at {point:?}")]
    SingularMetric { label: String, point: Vec<f64> },

    #[error("unknown metric label `{0}`")]
    UnknownMetric(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("curvature coefficient is undefined at dimension 1")]
    CurvatureCoefficientUndefined,

    #[error("sandwich weight `{which}` is nonpositive at {point:?}")]
    NonpositiveWeight {
        which: &'static str,
        point: Vec<f64>,
    },

    #[error("invalid quantum numbers (n={n}, l={l}, m={m}): {reason}")]
    InvalidQuantumNumbers {
        n: i64,
        l: i64,
        m: i64,
        reason: &'static str,
    },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error(
        "metric `{label}` is not conformally flat (curvature routes disagree by {mismatch:.3e})"
    )]
    NotConformallyFlat { label: String, mismatch: f64 },

    #[error("conformal operations require dimension >= 2, got {0}")]
    ConformalDimension(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
