//! Transport, framing, offline artifacts, sessions and bandwidth
//! accounting.

pub mod artifact;
pub mod bench;
pub mod frame;
pub mod messages;
pub mod session;
pub mod transport;

pub use frame::{Frame, FrameError, SessionId, Tag};
pub use transport::{Direction, Transcript, Transport};

#[derive(Debug, thiserror::Error)]
pub enum WireError {
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Decode(#[from] crate::codec::DecodeError),
    #[error(transparent)]
    Artifact(#[from] artifact::ArtifactError),
    #[error(transparent)]
    Eval(#[from] crate::encoding::EvalError),
    #[error(transparent)]
    Malicious(#[from] crate::malicious::MalError),
    #[error("peer aborted: {0}")]
    Aborted(String),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("malicious mode needs client keys")]
    MissingKeys,
    #[error("connection closed")]
    Closed,
}
