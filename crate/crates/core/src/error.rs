use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid argument: shape mismatch, non-finite entry, out-of-range index.
    #[error("invalid input: {0}")]
    Input(String),

    /// A network, dataset or pattern document could not be read.
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    /// A hidden row of a forge target has no realizing weight vector.
    #[error("target row {row} is not realizable by a ReLU neuron on this dataset")]
    InfeasibleRow { row: usize },

    /// The output layer of a forged twin could not reproduce the reference outputs.
    #[error("output fit residual {residual:e} exceeds tolerance {tol:e}")]
    Residual { residual: f64, tol: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::parse(
            format!("line {}, column {}", e.line(), e.column()),
            e.to_string(),
        )
    }
}
