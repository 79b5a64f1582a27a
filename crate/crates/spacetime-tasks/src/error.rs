use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("not a causal curve: segment {segment} runs backwards or outside the light cone")]
    NotCausalCurve { segment: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid task: {0}")]
    InvalidTask(String),
    #[error("undecidable in this mode: {0}")]
    Undecidable(String),
    #[error("refused: {0}")]
    Refused(String),
    #[error("quantum state error: {0}")]
    State(String),
    #[error("scheme error: {0}")]
    Scheme(String),
    #[error("audit failure at event {index}: {what}")]
    Audit { index: usize, what: String },
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
