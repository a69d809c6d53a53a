use thiserror::Error;

/// Errors raised by tensor, layer, model and data operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DrenError {
    #[error("shape mismatch in {op}: expected {expected}, found {found}")]
    Shape {
        op: &'static str,
        expected: String,
        found: String,
    },

    #[error("channel count {channels} is not divisible into groups of 4")]
    Layout { channels: usize },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid model: {0}")]
    Model(String),

    #[error("label {label} out of range for {classes} classes")]
    Label { label: usize, classes: usize },

    #[error("bad IDX magic: expected {expected:#010x}, found {found:#010x}")]
    Magic { expected: u32, found: u32 },

    #[error("IDX payload truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("benchmark gate failed: {0}")]
    Gate(String),
}

pub type Result<T> = std::result::Result<T, DrenError>;

pub(crate) fn shape_err(op: &'static str, expected: impl ToString, found: impl ToString) -> DrenError {
    DrenError::Shape {
        op,
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
