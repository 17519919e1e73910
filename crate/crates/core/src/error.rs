use thiserror::Error;

/// Errors raised by the library. Parsing and decoding of model or LLM output
/// is total and never produces these; they signal caller contract violations
/// or bad input data.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty label")]
    EmptyLabel,
    #[error("span [{start}, {end}) is invalid for a sentence of {len} tokens")]
    SpanOutOfRange { start: usize, end: usize, len: usize },
    #[error("spans [{0}, {1}) and [{2}, {3}) overlap or are unsorted")]
    OverlappingSpans(usize, usize, usize, usize),
    #[error("cannot sample {requested} items from {available}")]
    SampleTooLarge { requested: usize, available: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unresolved placeholder `{{{0}}}` in query template `{1}`")]
    UnresolvedPlaceholder(String, String),
    #[error("stage {0} does not exist")]
    NoSuchStage(usize),
    #[error("evaluation mode `{mode}` cannot score tuple {tuple}")]
    ModeMismatch { mode: String, tuple: String },
    #[error("training diverged at step {step}: loss {loss}")]
    Diverged { step: usize, loss: f64 },
    #[error("tagger failure: {0}")]
    Tagger(String),
    #[error("malformed record at line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
