use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("graph is disconnected; consensus may be unreachable")]
    Disconnected,

    #[error("frozen system: alpha01 = alpha10 = 0 with a mixed configuration")]
    Frozen,

    #[error("absorption is unreachable: {0}")]
    Divergent(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("singular linear system")]
    Singular,
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
