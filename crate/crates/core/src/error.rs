//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, OsmError>;

#[derive(Debug, Error)]
pub enum OsmError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    /// A file did not carry the magic bytes we expected.
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 8], found: [u8; 8] },

    /// A file ended early or carried inconsistent lengths.
    #[error("malformed file: {0}")]
    Format(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// Page id that was never allocated, or was freed.
    #[error("page {0} is not live")]
    PageAccess(u64),

    /// Insert into a buffer that is already at capacity; flush first.
    #[error("buffer is full")]
    BufferFull,

    /// Bulk-load run violated its precondition (not strictly ascending, or
    /// overlapping the keys already in the tree).
    #[error("bulk load precondition violated: {0}")]
    BulkOrder(String),
}
