use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported WFDB signal format {0}")]
    UnsupportedFormat(u32),

    #[error("truncated signal: expected {expected} bytes, found {found}")]
    TruncatedSignal { expected: usize, found: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("spectrum is all zero")]
    AllZeroSpectrum,

    #[error("source row {0} of the transport plan carries no mass")]
    ZeroMassRow(usize),

    #[error("non-finite activation in encoder layer {layer}")]
    NonFiniteActivation { layer: usize },

    #[error("non-finite loss")]
    NonFiniteLoss,

    #[error("training diverged at epoch {epoch} (loss {loss})")]
    DivergedTraining {
        epoch: usize,
        loss: f64,
        log: crate::model::TrainingLog,
    },

    #[error("empty evaluation")]
    EmptyEvaluation,

    #[error("runs were evaluated on different test sets ({0} vs {1})")]
    IncomparableRuns(String, String),

    #[error("augmentation stalled: {0}")]
    AugmentationStalled(String),

    #[error("bad checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
