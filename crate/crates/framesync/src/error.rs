use thiserror::Error;

/// Errors produced across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    #[error("polynomial of degree {degree} is not primitive (period {period}, expected {expected})")]
    NotPrimitive {
        degree: u32,
        period: u64,
        expected: u64,
    },

    #[error("LFSR seed must be a nonzero {0}-bit state")]
    ZeroSeed(u32),

    #[error("sync word construction undefined for N={n}, K={k}: requires N >= K")]
    ConstructionUndefined { n: usize, k: u32 },

    #[error("no LFSR specification for degree {0}")]
    MissingDegree(u32),

    #[error("output stream exhausted after {read} symbols, expected {expected}")]
    StreamExhausted { read: u64, expected: u64 },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("instance too large: {0}")]
    SizeLimit(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("config error: {0}")]
    ConfigInvalid(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
