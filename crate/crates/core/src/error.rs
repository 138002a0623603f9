use thiserror::Error;

/// Errors produced by the segmentation, tracking and evaluation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty edge map")]
    EmptyEdgeMap,
    #[error("no edges detected")]
    NoEdges,
    #[error("degenerate histogram")]
    DegenerateHistogram,
    #[error("no viable candidates")]
    NoViableCandidates,
    #[error("empty selection")]
    EmptySelection,
    #[error("empty candidate set")]
    EmptyCandidateSet,
    #[error("plant lost")]
    PlantLost,
    #[error("empty point list")]
    EmptyPoints,
    #[error("empty mask")]
    EmptyMask,
    #[error("zero labeled leaf length")]
    ZeroLeafLength,
    #[error("underdetermined: {samples} samples for {params} parameters")]
    Underdetermined { samples: usize, params: usize },
    #[error("zero variance")]
    ZeroVariance,
    #[error("training data contains a single class")]
    SingleClass,
    #[error("missing predicted frame {frame} in video {video}")]
    MissingFrame { video: String, frame: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {message}")]
    Format { context: String, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn format(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Format {
            context: context.into(),
            message: message.to_string(),
        }
    }

    /// Process exit code for the command-line front end: 2 for I/O and schema
    /// problems, 3 for algorithmic failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. }
            | Error::Format { .. }
            | Error::InvalidArgument(_)
            | Error::DimensionMismatch(_)
            | Error::MissingFrame { .. } => 2,
            _ => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
