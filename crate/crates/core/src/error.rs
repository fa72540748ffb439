use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate object id `{0}`")]
    DuplicateId(String),

    #[error("malformed feature value in data row {row}")]
    MalformedFeature { row: usize },

    #[error("malformed data row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },

    #[error("unknown object id `{0}`")]
    UnknownId(String),

    #[error("class catalog needs at least 2 classes, found {0}")]
    DegenerateCatalog(usize),

    #[error("class {class} has no objects")]
    DegenerateClass { class: usize },

    #[error("no labeled objects")]
    NoSeeds,

    #[error("invalid neighbour count k={k} for {n} candidates")]
    InvalidK { k: usize, n: usize },

    #[error("empty prior for object `{0}`")]
    EmptyPrior(String),

    #[error("prior mask given for labeled object `{0}`")]
    MaskConflict(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("nothing to evaluate")]
    EmptyEval,

    #[error("reference value must be positive, got {0}")]
    InvalidReference(f64),

    #[error("report is missing required key `{0}`")]
    MissingMetric(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("failed to read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
