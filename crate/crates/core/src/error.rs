use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("ply header error at line {line}: {msg}")]
    PlyHeader { line: usize, msg: String },

    #[error("ply data error at byte offset {offset}: {msg}")]
    PlyData { offset: usize, msg: String },

    #[error("unsupported ply format: {0}")]
    UnsupportedFormat(String),

    #[error("ply vertex data truncated: expected {expected} values, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("missing channel {0:?}")]
    MissingChannel(String),

    #[error("channel {name:?} has {len} values but the cloud has {expected} points")]
    ChannelLength { name: String, len: usize, expected: usize },

    #[error("depth {depth} too deep for cloud of {points} points")]
    DepthTooDeep { depth: u32, points: usize },

    #[error("block graph needs at least 2 points, got {0}")]
    GraphTooSmall(usize),

    #[error("eigendecomposition did not converge{}", block.map(|b| format!(" in block {b}")).unwrap_or_default())]
    NoConvergence { block: Option<usize> },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("bad bitstream magic")]
    BadMagic,

    #[error("unsupported bitstream version {0}")]
    UnsupportedVersion(u8),

    #[error("bitstream truncated: {0}")]
    BitstreamTruncated(String),

    #[error("corrupt bitstream: {0}")]
    CorruptBitstream(String),

    #[error("point count mismatch: bitstream has {expected}, geometry has {got}")]
    PointCountMismatch { expected: usize, got: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
