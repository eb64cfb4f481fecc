use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input at a known line (1-based).
    #[error("{origin}:{line}: {msg}")]
    Parse {
        origin: String,
        line: usize,
        msg: String,
    },

    #[error("{origin}: duplicate utterance id {id:?} on lines {first} and {second}")]
    DuplicateId {
        origin: String,
        id: String,
        first: usize,
        second: usize,
    },

    #[error("hypothesis utterance {0:?} has no reference")]
    UnknownUtterance(String),

    #[error("invalid token {surface:?}: {reason}")]
    InvalidToken {
        surface: String,
        reason: &'static str,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("utterance {utt_id:?} rank {rank}: {which} score required but absent")]
    MissingScore {
        utt_id: String,
        rank: u32,
        which: &'static str,
    },

    #[error("label sequence of length {labels} needs at least {required} frames, got {frames}")]
    InfeasibleLabel {
        labels: usize,
        required: usize,
        frames: usize,
    },

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("wav: {0}")]
    Wav(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
