//! Crate-wide error type.
//!
//! Variants mirror the failure classes the public operations can report, so
//! callers (notably the CLI) can map them onto stable exit codes without
//! string-matching messages.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Tensor rank or axis extent does not match what the operation needs.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Window, stride, padding, or rectangle geometry is unusable.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// Non-finite value or other numeric breakdown.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Index (class id, target label, …) is out of range.
    #[error("index error: {0}")]
    Index(String),

    /// Value is outside the operation's domain (e.g. not a probability vector).
    #[error("domain error: {0}")]
    Domain(String),

    /// Two collections that must correspond one-to-one do not.
    #[error("correspondence error: {0}")]
    Correspondence(String),

    /// Network configuration violates a structural rule.
    #[error("config error: {0}")]
    Config(String),

    /// Model, parameters, and inputs are mutually inconsistent.
    #[error("integrity error: {0}")]
    Integrity(String),

    /// Text input could not be parsed.
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    /// Input parsed but violates the documented schema; names the element.
    #[error("schema error in element <{element}>: {msg}")]
    Schema { element: String, msg: String },

    /// Input uses a feature this implementation deliberately does not support.
    #[error("unsupported feature: {0}")]
    Unsupported(String),

    /// Binary file format violation (bad magic, truncation, trailing bytes…).
    #[error("format error: {0}")]
    Format(String),

    /// Stored tensor shape does not match the expected one; names the tensor.
    #[error("shape error for tensor '{name}': {msg}")]
    Shape { name: String, msg: String },

    /// Catalog row failed validation; carries the 1-based data row number.
    #[error("validation error at row {row}: {msg}")]
    Validation { row: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
    pub fn geometry(msg: impl Into<String>) -> Self {
        Error::Geometry(msg.into())
    }
    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
    pub fn index(msg: impl Into<String>) -> Self {
        Error::Index(msg.into())
    }
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn correspondence(msg: impl Into<String>) -> Self {
        Error::Correspondence(msg.into())
    }
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub fn integrity(msg: impl Into<String>) -> Self {
        Error::Integrity(msg.into())
    }
    pub fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }
    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
    pub fn shape(name: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Shape { name: name.into(), msg: msg.into() }
    }
    pub fn validation(row: usize, msg: impl Into<String>) -> Self {
        Error::Validation { row, msg: msg.into() }
    }
    pub fn schema(element: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Schema { element: element.into(), msg: msg.into() }
    }
}
