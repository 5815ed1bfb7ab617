use crate::tensor::Dims3;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: Dims3, actual: Dims3 },

    #[error("invalid dimensions {0}: every extent must be positive")]
    EmptyDimensions(Dims3),

    #[error("value buffer has {actual} entries, dimensions {dims} require {expected}")]
    BufferLength {
        dims: Dims3,
        expected: usize,
        actual: usize,
    },

    #[error("{unknowns} unknowns exceed the dense cap of {cap}")]
    DenseCapExceeded { unknowns: usize, cap: usize },

    #[error("singular system (pivot ratio {pivot_ratio:e}, condition estimate {condition_estimate:e})")]
    Singular {
        pivot_ratio: f64,
        condition_estimate: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("reference image has zero norm")]
    ZeroReference,

    #[error("malformed tensor file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
