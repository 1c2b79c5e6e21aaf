use thiserror::Error;

/// Errors shared by the structure algebra and the game layer.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoreError {
    #[error("not-subvocabulary: {0}")]
    NotSubvocabulary(String),
    #[error("arity-mismatch: {0}")]
    ArityMismatch(String),
    #[error("vocab-mismatch: {0}")]
    VocabMismatch(String),
    #[error("functions-in-sum: {0}")]
    FunctionsInSum(String),
    #[error("bad-predicate: {0}")]
    BadPredicate(String),
    #[error("unbound-variable: {0}")]
    UnboundVariable(String),
    #[error("counter-mismatch: {0}")]
    CounterMismatch(String),
    #[error("corpus-too-large: {0}")]
    CorpusTooLarge(String),
    #[error("budget-exceeded: {0}")]
    BudgetExceeded(String),
    #[error("unknown-name: {0}")]
    UnknownName(String),
    #[error("invalid-input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
