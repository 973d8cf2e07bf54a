use thiserror::Error;

/// Errors produced by parsing, training, decoding and testing.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown category `{0}`")]
    UnknownCategory(String),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("unknown value `{value}` for feature `{feature}`")]
    UnknownValue { feature: String, value: String },
    #[error("feature `{feature}` is not allowed for category `{category}`")]
    FeatureNotAllowed { category: String, feature: String },
    #[error("duplicate feature `{0}`")]
    DuplicateFeature(String),
    #[error("malformed tag `{0}`")]
    MalformedTag(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid rule pattern `{pattern}`: {message}")]
    Pattern { pattern: String, message: String },

    #[error("empty training corpus")]
    EmptyCorpus,
    #[error("training sequence {0} has no gold tags")]
    MissingGoldTags(usize),
    #[error("length mismatch: {tokens} tokens but {tags} tags")]
    LengthMismatch { tokens: usize, tags: usize },
    #[error("search space too large for exhaustive enumeration ({0} sequences)")]
    SearchSpaceTooLarge(u128),
    #[error("no tag sequence has non-zero probability")]
    NoPath,

    #[error("at least {required} texts are required, got {got}")]
    TooFewTexts { required: usize, got: usize },
    #[error("text `{0}` has no counted words")]
    EmptyText(String),
    #[error("duplicate text id `{0}`")]
    DuplicateTextId(String),
    #[error("invalid probability {0}: must lie strictly between 0 and 1")]
    InvalidProbability(f64),
    #[error("total count must be positive")]
    ZeroTotal,
    #[error("{0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
