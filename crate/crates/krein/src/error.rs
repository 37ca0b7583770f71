use num_complex::Complex64;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by spectral computations and model builders.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("evaluation point {z} is within pole tolerance of the eigenvalue {level_lambda}")]
    Pole { z: Complex64, level_lambda: f64 },

    #[error("insufficient spectral data: {requested} levels requested, {available} stored")]
    InsufficientSpectralData { requested: usize, available: usize },

    #[error(
        "truncation insufficient: certified tail bound {bound:.3e} exceeds tolerance {tolerance:.3e} (need about {needed} levels)"
    )]
    TruncationInsufficient {
        bound: f64,
        tolerance: f64,
        needed: usize,
    },

    #[error("{z} is an eigenvalue of the extension: the pencil matrix is singular")]
    SingularPencil { z: Complex64 },

    #[error("search interval touches the spectrum at {lambda}")]
    SpectrumTouchesInterval { lambda: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("matrix is not Hermitian: asymmetry {asymmetry:.3e} exceeds tolerance")]
    NonHermitian { asymmetry: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("exactness data missing: {0}")]
    ExactDataMissing(String),

    #[error("root bracketing failed in [{lo}, {hi}] on eigenvalue branch {branch}")]
    BracketingFailure { lo: f64, hi: f64, branch: usize },
}
