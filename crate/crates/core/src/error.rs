use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid resolution must be even and at least 8, got {0}")]
    InvalidResolution(usize),

    #[error("momentum cutoff must be positive and finite, got {0}")]
    InvalidCutoff(f64),

    #[error("mass must be non-negative and finite, got {0}")]
    InvalidMass(f64),

    #[error("block count must be 1 or 2, got {0}")]
    InvalidBlocks(usize),

    #[error("operands live on different grids")]
    GridMismatch,

    #[error("state violates the boundary-support rule by {excursion:.4} (cutoff {limit:.4})")]
    BoundarySupport { excursion: f64, limit: f64 },

    #[error("{context} requires linear operands, but `{label}` is conjugate-linear")]
    ConjugateLinearOperand { context: &'static str, label: String },

    #[error("linearity mismatch between `{0}` and `{1}`")]
    LinearityMismatch(String, String),

    #[error("class {class} needs {requirement}, grid has mass {mass} and {blocks} block(s)")]
    ClassGridMismatch {
        class: String,
        requirement: &'static str,
        mass: f64,
        blocks: usize,
    },

    #[error("no space inversion or time reversal pair is defined for {0}")]
    InversionUnavailable(String),

    #[error("invalid triplet class tag `{0}`")]
    InvalidClassTag(String),

    #[error("sample list is empty")]
    NoSamples,

    #[error("{0}")]
    Precondition(String),

    #[error("numerical instability: {0}")]
    Instability(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
