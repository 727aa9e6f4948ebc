use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("no inverse: semifield zero is not invertible")]
    NoInverse,

    #[error("shape violation: {0}")]
    Shape(String),

    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("unrealizable tightness pattern: {0}")]
    UnrealizablePattern(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}
