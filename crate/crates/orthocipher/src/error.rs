//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure mode of the library. The CLI maps each variant to a
/// distinct exit code, so variants stay fine-grained.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid dimension {dim}: {reason}")]
    InvalidDimension { dim: usize, reason: &'static str },

    #[error("non-finite value at position {position}")]
    NonFinite { position: usize },

    #[error("matrix is not orthogonal: max |M*M^T - I| entry is {deviation:.3e}")]
    OrthogonalityViolation { deviation: f64 },

    #[error("character {symbol:?} at position {position} is not in the 63-symbol alphabet")]
    UnknownSymbol { position: usize, symbol: char },

    #[error("code {code} at position {position} is outside 1..=63")]
    InvalidCode { position: usize, code: u8 },

    #[error(
        "block {block}: component(s) {positions:?} vanish under the key transform \
         and cannot be recovered"
    )]
    DegenerateBlock { block: u64, positions: Vec<usize> },

    #[error("block {block}: decoding failed: {reason}")]
    DecodeFailure { block: u64, reason: String },

    #[error("block {block}: {count} distinct plaintext blocks verify against this ciphertext")]
    AmbiguousDecode { block: u64, count: usize },

    #[error("matrix is not symmetric: max |A - A^T| entry is {deviation:.3e}")]
    NotSymmetric { deviation: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("{combinations} coefficient combinations exceed the limit of {limit}")]
    CombinationSpaceTooLarge { combinations: u128, limit: u64 },

    #[error("malformed key file: {0}")]
    MalformedKeyFile(String),

    #[error("malformed ciphertext file: {0}")]
    MalformedCiphertext(String),

    #[error("message is empty")]
    EmptyMessage,

    #[error("parameters do not match the ciphertext header: {0}")]
    ParamsMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
