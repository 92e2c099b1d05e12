use thiserror::Error;

/// Errors produced by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported constellation size: {0}")]
    UnsupportedSize(String),
    #[error("codebook of {size} codewords exceeds the enumeration budget of {budget}")]
    CapacityExceeded { size: String, budget: u64 },
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("codeword is valid but not used by the bit mapping")]
    UnusedCodeword,
    #[error("tuple is not a codeword: {0}")]
    NotInCodebook(String),
    #[error("at least two codewords are required")]
    TooFewCodewords,
    #[error("search space of 2^{bits} candidates exceeds the limit of 2^{limit}")]
    SearchSpaceTooLarge { bits: u32, limit: u32 },
    #[error("frame contains no blocks")]
    EmptyFrame,
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors raised by a size guard rather than a malformed request.
    pub fn is_guard_rail(&self) -> bool {
        matches!(
            self,
            Error::SearchSpaceTooLarge { .. } | Error::CapacityExceeded { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
