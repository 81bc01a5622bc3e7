use thiserror::Error;

/// Errors produced by table construction, model fitting, search, and mediation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("csv parse error at line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error("table error: {0}")]
    Table(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("models are not nested: {0}")]
    NotNested(String),

    #[error("numeric domain error: {0}")]
    Domain(String),

    #[error("search error: {0}")]
    Search(String),

    #[error("regression error: {0}")]
    Regression(String),

    #[error("mediation error: {0}")]
    Mediation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
