use std::path::PathBuf;

use thiserror::Error;

use crate::signal::ChannelId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("channel {0} not found")]
    ChannelNotFound(ChannelId),
    #[error("channel {channel} is sampled at {actual} Hz, expected {expected} Hz")]
    RateMismatch {
        channel: ChannelId,
        expected: f64,
        actual: f64,
    },
    #[error("invalid signal frame: {0}")]
    InvalidFrame(String),
    #[error("invalid window spec: {0}")]
    InvalidWindow(String),
    #[error("cannot resample from {from} Hz to {to} Hz (only downsampling is supported)")]
    UnsupportedResample { from: f64, to: f64 },

    #[error("schema error: missing or misplaced column `{0}`")]
    SchemaError(String),
    #[error("timestamp error at row {0}: timestamps must be strictly increasing")]
    TimestampError(usize),
    #[error("non-finite value at row {row}, column `{column}`")]
    NonFiniteValue { row: usize, column: String },
    #[error("malformed value at row {row}: {message}")]
    MalformedRow { row: usize, message: String },
    #[error("invalid synthetic profile: {0}")]
    InvalidProfile(String),

    #[error("band [{lo}, {hi}] Hz is invalid for sample rate {rate} Hz")]
    BandError { lo: f64, hi: f64, rate: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("non-finite feature `{0}`")]
    NonFiniteFeature(String),
    #[error("feature names do not match the names bound at fit time")]
    FeatureMismatch,

    #[error("labels are degenerate: both classes are required")]
    DegenerateLabels,
    #[error("evaluation budget {budget} is smaller than the {needed} evaluations required")]
    BudgetTooSmall { budget: usize, needed: usize },
    #[error("search space is empty")]
    InvalidSearchSpace,
    #[error("split error: {0}")]
    SplitError(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("configuration evaluates on training data or skips splitting; set leakage_ack to run it on purpose")]
    LeakageNotAcknowledged,
    #[error("unsupported model document: {0}")]
    ModelFormat(String),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_stage(self, stage: &'static str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }

    /// Process exit code: 2 for configuration errors, 3 for data errors,
    /// 4 for everything that fails while the pipeline runs.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::InvalidWindow(_)
            | Error::Config(_)
            | Error::LeakageNotAcknowledged
            | Error::InvalidSearchSpace
            | Error::InvalidProfile(_)
            | Error::Json(_) => 2,
            Error::ChannelNotFound(_)
            | Error::RateMismatch { .. }
            | Error::InvalidFrame(_)
            | Error::SchemaError(_)
            | Error::TimestampError(_)
            | Error::NonFiniteValue { .. }
            | Error::MalformedRow { .. }
            | Error::ModelFormat(_)
            | Error::Io { .. }
            | Error::Csv(_) => 3,
            _ => 4,
        }
    }

    /// Innermost error, with stage annotations removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}
