use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum QptError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max |M - M\u{2020}| = {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("singular linear system (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    #[error("map is not invertible: {0}")]
    NotInvertible(String),

    #[error("operator is not a valid quantum state: {0}")]
    NotAState(String),

    #[error("unitarity violation (max |U\u{2020}U - I| = {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("preparing operation is not admissible: {0}")]
    InvalidPreparingOp(String),

    #[error("input states do not span operator space (condition {condition:.3e})")]
    SpanningDeficient { condition: f64 },

    #[error("map is not completely positive (min Choi eigenvalue {min_eig:.3e})")]
    NotCompletelyPositive { min_eig: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed data: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, QptError>;
