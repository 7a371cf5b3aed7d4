use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid noise spectrum: {0}")]
    InvalidSpectrum(String),
    #[error("invalid trace length {len}: must be a power of two >= {min}")]
    InvalidLength { len: usize, min: usize },
    #[error("invalid sample interval {0}")]
    InvalidInterval(f64),
    #[error("traces disagree on length or sample interval")]
    MismatchedTraces,
    #[error("need at least {need} frequency bins in band, found {found}")]
    InsufficientBins { need: usize, found: usize },
    #[error("window length {got} does not match gate duration {expected}")]
    WindowLength { expected: usize, got: usize },
    #[error("mismatched curves: {0}")]
    MismatchedCurves(String),
    #[error("curve too short: {len} points, need {min}")]
    CurveTooShort { len: usize, min: usize },
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("invalid network layout: {0}")]
    InvalidLayout(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("training diverged at epoch {epoch}: cost {cost}")]
    Divergence { epoch: usize, cost: f64 },
    #[error("true amplitude must be positive, got {0}")]
    NonPositiveAmplitude(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("encoding mismatch: expected {expected}, found {found}")]
    EncodingMismatch { expected: String, found: String },
    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { expected: u32, found: u32 },
    #[error("checksum mismatch in {0}")]
    Checksum(PathBuf),
    #[error("malformed file {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn staged(stage: &'static str, err: Error) -> Self {
        match err {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }

    /// Innermost error, looking through stage tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }

    /// Process exit code: 2 config error, 3 stage failure, 4 numerical divergence.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Divergence { .. } => 4,
            Error::Config(_)
            | Error::InvalidSpectrum(_)
            | Error::InvalidLength { .. }
            | Error::InvalidInterval(_)
            | Error::InvalidGrid(_)
            | Error::InvalidHyperparams(_)
            | Error::InvalidLayout(_)
            | Error::Json(_) => 2,
            _ => 3,
        }
    }
}
