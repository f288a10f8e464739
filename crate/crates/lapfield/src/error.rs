use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid is {height}x{width}; the 3x3 stencil needs at least 3x3")]
    GridTooSmall { height: usize, width: usize },

    #[error("shape mismatch: expected {expected:?}, got {got:?} (height, width, channels)")]
    ShapeMismatch {
        expected: (usize, usize, usize),
        got: (usize, usize, usize),
    },

    #[error("data length {len} does not match {height}x{width}x{channels}")]
    DataLength {
        height: usize,
        width: usize,
        channels: usize,
        len: usize,
    },

    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },

    #[error("invalid solver configuration: {0}")]
    BadConfig(String),

    #[error("dense solver limited to {max} unknowns, got {got}")]
    DenseSizeCap { max: usize, got: usize },

    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("solver requires the 5-point stencil k0, got {0}")]
    StencilNotSupported(String),

    #[error("kernel size {0} must be an odd number >= 3")]
    BadKernelSize(usize),

    #[error("{levels} pyramid levels would shrink a {height}x{width} grid below 3 pixels per side")]
    TooManyLevels {
        levels: usize,
        height: usize,
        width: usize,
    },

    #[error("upsample target {target:?} is incompatible with input {input:?}")]
    UpsampleDims {
        input: (usize, usize),
        target: (usize, usize),
    },

    #[error("bad magic: expected \"LAPC\"")]
    BadMagic,

    #[error("unsupported container version {0}")]
    UnsupportedVersion(u8),

    #[error("truncated stream: needed {needed} more bytes")]
    Truncated { needed: usize },

    #[error("sparse index {index} out of range for {limit} pixels")]
    IndexOutOfRange { index: u32, limit: usize },

    #[error("sparse indices must be strictly increasing (saw {prev} then {next})")]
    IndexOrder { prev: u32, next: u32 },

    #[error("{trailing} trailing bytes after payload")]
    TrailingBytes { trailing: usize },

    #[error("invalid field value: {0}")]
    InvalidValue(String),

    #[error("no usable images in {0}")]
    EmptyDataset(String),

    #[error("training loss became non-finite at epoch {epoch}")]
    NanLoss { epoch: usize },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("unsupported image: {0}")]
    UnsupportedImage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
