use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("required column `{0}` missing from header")]
    MissingColumn(&'static str),

    #[error("no rows left for securities code {code} after filtering")]
    NoRows { code: u32 },

    #[error("labeling needs at least 2 records, got {0}")]
    TooFewRecords(usize),

    #[error("invalid split fractions train={train} validation={validation}")]
    InvalidFractions { train: f64, validation: f64 },

    #[error("split of {n} rows leaves the {range} range empty")]
    EmptySplit { n: usize, range: &'static str },

    #[error("dataset has not been split")]
    NotSplit,

    #[error("column `{0}` is constant over the training range")]
    ConstantColumn(&'static str),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("malformed labeled dataset: {0}")]
    Malformed(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid hyperparameter: {0}")]
    InvalidParam(String),

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("out-of-bag error undefined: every sample is in every bootstrap")]
    NoOobSamples,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures raised while fitting a model, as opposed to
    /// problems with the input data.
    pub fn is_training(&self) -> bool {
        matches!(
            self,
            Error::Divergence(_) | Error::InvalidParam(_) | Error::NoOobSamples
        )
    }
}
