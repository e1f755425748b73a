use thiserror::Error;

/// Errors produced by the matching engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("enumeration limit exceeded: {total} properties > {limit}")]
    EnumerationLimit { total: usize, limit: usize },

    #[error("joint table for pair ({item}, {need}) sums to {sum}, expected 1")]
    UnnormalizedJoint { item: usize, need: usize, sum: f64 },

    #[error("{name} = {value} is not a valid probability")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("duplicate document id {doc_id:?} (line {line})")]
    DuplicateDocId { doc_id: String, line: usize },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("document {0:?} has no tokens")]
    EmptyDocument(String),

    #[error("empty histogram")]
    EmptyHistogram,

    #[error("unknown model {0:?}")]
    UnknownModel(String),

    #[error("unknown entity {0:?}")]
    UnknownEntity(String),

    #[error("cold entity {0:?}: no observed ratings")]
    ColdEntity(String),

    #[error("missing fitted model for {0:?}")]
    MissingModel(String),

    #[error("index file: {0}")]
    IndexFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
