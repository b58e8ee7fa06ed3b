use thiserror::Error;

/// Errors surfaced by the tagging engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("corpus parse error at line {line}: {message}")]
    Corpus { line: usize, message: String },

    #[error("dictionary parse error at line {line}: {message}")]
    Dictionary { line: usize, message: String },

    #[error("invalid tag structure at index {index}: {message}")]
    TagStructure { index: usize, message: String },

    #[error("invalid span set: {message}")]
    SpanStructure { message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("model file error: {0}")]
    ModelFormat(String),

    #[error("embedding file error at line {line}: {message}")]
    Embedding { line: usize, message: String },

    #[error("evaluation input mismatch: {0}")]
    Eval(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
