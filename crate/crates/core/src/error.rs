use thiserror::Error;

/// Errors raised by the library.
///
/// The three variants line up with the CLI exit codes: `Invalid` is a usage
/// problem, `Resource` a size guard, `Numerical` a failed computation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("resource guard exceeded: {0}")]
    Resource(String),
    #[error("numerical failure in {module}: {detail}")]
    Numerical {
        module: &'static str,
        detail: String,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }

    pub(crate) fn numerical(module: &'static str, detail: impl Into<String>) -> Self {
        Error::Numerical {
            module,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
