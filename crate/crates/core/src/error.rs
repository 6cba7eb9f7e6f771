use thiserror::Error;

/// Failure modes shared by every computation in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Inputs outside the geometry the algorithms handle.
    #[error("domain error: {0}")]
    Domain(String),
    /// Working precision could not resolve the quantity being computed.
    #[error("precision exhausted: {0}")]
    Precision(String),
    /// An iteration limit was reached before the stopping condition.
    #[error("budget exhausted after {steps} steps: {context}")]
    Budget { steps: u64, context: String },
    /// A computed object failed an identity it must satisfy.
    #[error("consistency check failed: {0}")]
    Consistency(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn precision(msg: impl Into<String>) -> Self {
        Error::Precision(msg.into())
    }

    pub(crate) fn budget(steps: u64, context: impl Into<String>) -> Self {
        Error::Budget {
            steps,
            context: context.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) => 2,
            Error::Precision(_) | Error::Consistency(_) => 3,
            Error::Budget { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
