use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown class spec `{0}`")]
    UnknownClass(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("language mismatch between structures")]
    LanguageMismatch,
    #[error("invalid language: {0}")]
    InvalidLanguage(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("out of scope: {0}")]
    ScopeBreach(String),
    #[error("depth exhausted: {0}")]
    DepthExhausted(String),
    #[error("budget exhausted: {0}")]
    BudgetExhausted(String),
    #[error("no diagonal construction recipe for class `{0}`")]
    NoConstruction(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
