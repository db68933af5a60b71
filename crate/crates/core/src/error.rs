use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot contract axis {axis_a} (extent {extent_a}) of a with axis {axis_b} (extent {extent_b}) of b")]
    Contraction {
        axis_a: usize,
        axis_b: usize,
        extent_a: usize,
        extent_b: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("pixel {index} has value {value}, expected a value in [0, 1]")]
    Encoding { index: usize, value: f64 },

    #[error("qubit index {index} out of range for a {n_qubits}-qubit register")]
    QubitIndex { index: usize, n_qubits: usize },

    #[error("class {0} does not occur in the data")]
    EmptyClass(u8),

    #[error(transparent)]
    Idx(#[from] IdxError),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Failures while decoding an IDX container.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum IdxError {
    #[error("bad magic number {found:#010x}, expected {expected:#010x}")]
    BadMagic { expected: u32, found: u32 },

    #[error("file truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("images are {rows}x{cols}, expected 28x28")]
    BadDimensions { rows: u32, cols: u32 },

    #[error("label {value} at position {index} is not a digit class")]
    LabelOutOfRange { index: usize, value: u8 },

    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn shape(msg: impl Into<String>) -> Error {
    Error::Shape(msg.into())
}
