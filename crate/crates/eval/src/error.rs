use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("feature dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("row {0} is not a probability distribution")]
    NotADistribution(usize),
    #[error("no scores to aggregate")]
    EmptyScores,
    #[error("score {score} for {method} outside [1, 10]")]
    ScoreOutOfRange { method: String, score: f64 },
    #[error("need at least 2 methods with images")]
    TooFewMethods,
    #[error("feature file: {0}")]
    Format(String),
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("unknown image {0}")]
    UnknownImage(String),
    #[error("duplicate verdict for {0}")]
    DuplicateVerdict(String),
}
