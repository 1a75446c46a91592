use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("target has no tokens to score")]
    EmptyTarget,

    #[error("scorer backend unavailable: {cause}")]
    BackendUnavailable {
        /// HTTP status when the endpoint answered, `None` for transport failures.
        status: Option<u16>,
        cause: String,
    },

    #[error("malformed backend response: {0}")]
    BadResponse(String),

    #[error("cannot normalize an empty score list")]
    EmptyList,

    #[error("unknown language profile `{0}`")]
    UnknownProfile(String),

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures that originate in the scoring backend rather than in the input.
    pub fn is_backend(&self) -> bool {
        matches!(self, Error::BackendUnavailable { .. } | Error::BadResponse(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
