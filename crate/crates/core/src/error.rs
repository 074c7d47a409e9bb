use thiserror::Error;

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Capacity,
    KeyReuse,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("domain error: {0}")]
    Domain(&'static str),

    #[error("singular system: rank {rank} < {size}")]
    Rank { rank: usize, size: usize },

    #[error("invalid parameters: {0}")]
    Parameter(String),

    #[error("insufficient shares: have {have}, need {need} ({} more)", need - have)]
    InsufficientShares { have: usize, need: usize },

    #[error("corrupted shares: {0}")]
    Corruption(String),

    #[error(
        "file of {bits} bits exceeds capacity n(t-z) = {limit} bits \
         (key length n = {key_bits} bits, t = {t}, z = {z})"
    )]
    Capacity {
        bits: u64,
        limit: u64,
        key_bits: u64,
        t: usize,
        z: usize,
    },

    #[error("key reuse refused: user {user}, server {server} already consumed")]
    KeyReuse { user: u16, server: u16 },

    #[error("no key for user {user}, server {server}")]
    KeyNotFound { user: u16, server: u16 },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("state space of {atoms} atoms exceeds the audit limit of {limit}")]
    Scale { atoms: u128, limit: u128 },

    #[error("setup error: {0}")]
    Setup(String),

    #[error("format error at offset {offset}: {msg}")]
    Format { offset: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Capacity { .. } | Error::InsufficientShares { .. } => ErrorKind::Capacity,
            Error::KeyReuse { .. } => ErrorKind::KeyReuse,
            Error::Format { .. } | Error::Io(_) | Error::Json(_) => ErrorKind::Io,
            _ => ErrorKind::Validation,
        }
    }

    pub(crate) fn format(offset: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            offset,
            msg: msg.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
