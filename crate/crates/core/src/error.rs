use crate::codec::CodecError;
use crate::location::LocationId;

/// Failure raised by a local computation.
pub type LocalError = Box<dyn std::error::Error + Send + Sync>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("Unknown location: {0}")]
    UnknownLocation(LocationId),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("codec error: {0}")]
    Codec(#[from] CodecError),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("local computation at `{location}` failed: {source}")]
    Local {
        location: LocationId,
        #[source]
        source: LocalError,
    },
    /// Another endpoint of the same run failed, so this one gave up waiting.
    #[error("run aborted: {0}")]
    Aborted(String),
    #[error("endpoint `{location}` failed: {message}")]
    EndpointFailed {
        location: LocationId,
        message: String,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
