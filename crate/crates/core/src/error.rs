use std::path::PathBuf;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("inconsistent measurement: total power {total} mW is below noise power {noise} mW")]
    InconsistentMeasurement { total: f64, noise: f64 },

    #[error("{value} is outside the supported range [{min}, {max}]")]
    OutOfRange { value: f64, min: f64, max: f64 },

    #[error("corrupt wavelet decomposition: {0}")]
    CorruptDecomposition(String),

    #[error("invalid training set: {0}")]
    InvalidTrainingSet(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error in {path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("sweep cell (snr={snr_db} dB, set={gesture_set}) failed: {source}")]
    Cell {
        snr_db: f64,
        gesture_set: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::error::Error::InvalidArgument(format!($($arg)*))
    };
}
pub(crate) use invalid;
