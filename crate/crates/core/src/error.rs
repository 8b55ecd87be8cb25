use std::fmt;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug)]
pub enum Error {
    /// An argument fell outside the domain of a function or distribution.
    Domain(String),
    /// The caller supplied an argument combination that makes no sense.
    Usage(String),
    /// A parameter record or model violates an invariant.
    Validation {
        field: String,
        message: String,
    },
    /// Every path through the model has probability zero.
    ImpossibleSequence,
    /// Viterbi found no path with non-zero probability.
    NoFeasiblePath,
    /// Observation `index` of sequence `sequence` lies outside the support of every state.
    Unsupported {
        sequence: usize,
        index: usize,
        value: f64,
    },
    /// An emission fit failed for one state during training.
    StateFit {
        state: usize,
        source: Box<Error>,
    },
    /// Malformed sequence text.
    Parse {
        line: usize,
        message: String,
    },
    Json(String),
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Usage(msg) => write!(f, "usage error: {msg}"),
            Error::Validation { field, message } => write!(f, "invalid {field}: {message}"),
            Error::ImpossibleSequence => write!(f, "sequence impossible under model"),
            Error::NoFeasiblePath => write!(f, "no feasible path"),
            Error::Unsupported { sequence, index, value } => write!(
                f,
                "observation {value} at sequence {sequence}, index {index} is outside the support of every state"
            ),
            Error::StateFit { state, source } => write!(f, "state {state}: {source}"),
            Error::Parse { line: 0, message } => write!(f, "{message}"),
            Error::Parse { line, message } => write!(f, "line {line}: {message}"),
            Error::Json(msg) => write!(f, "json: {msg}"),
            Error::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::StateFit { source, .. } => Some(source.as_ref()),
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}
