use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The closed-form microstrip impedance is only valid for wide traces.
    #[error("microstrip impedance formula requires w/h >= 1, got w/h = {ratio}")]
    Validity { ratio: f64 },

    #[error("{what} {value} outside [{lo}, {hi}]")]
    Range {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error(
        "no stub length in (0, lambda_g/4) realises {target:e} F; achievable range is [{min:e}, {max:e}] F"
    )]
    Synthesis { target: f64, min: f64, max: f64 },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no significant frequency shift in trace")]
    NoEvent,

    #[error("S11 minimum sits at sweep edge ({frequency} Hz); widen the span")]
    EdgeMinimum { frequency: f64 },

    #[error("ingest error: {0}")]
    Ingest(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code: 2 for user/config errors, 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Fit(_) => 3,
            _ => 2,
        }
    }
}
