use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),

    #[error("cannot interpolate: class {0} has a single sample")]
    CannotInterpolate(String),

    #[error("duval undefined: CH4 + C2H4 + C2H2 is zero")]
    DuvalUndefined,

    #[error("stratification impossible: class {class} has {count} samples for {folds} folds")]
    Stratification {
        class: String,
        count: usize,
        folds: usize,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    #[error("malformed model file: {0}")]
    ModelFormat(String),

    #[error("unsupported model format_version {found} (expected {expected})")]
    ModelVersion { found: u64, expected: u64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
