use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("resource cap exceeded: {what} (limit {limit})")]
    Resource { what: String, limit: usize },

    #[error("untrusted region: {0}")]
    UntrustedRegion(String),

    #[error("disconnected in ball: {0}")]
    DisconnectedInBall(String),

    #[error("presentation is not C'({lambda}): {detail}")]
    NotSmallCancellation { lambda: String, detail: String },

    #[error("construction failed: {0}")]
    Construction(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit code for the CLI: 2 for horizon/resource trouble, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Resource { .. }
            | Error::UntrustedRegion(_)
            | Error::DisconnectedInBall(_)
            | Error::Construction(_) => 2,
            _ => 1,
        }
    }
}
