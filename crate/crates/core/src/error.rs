use thiserror::Error;

/// Errors raised by the group, MSM, field and protocol layers.
///
/// A verifier *reject* is not an error: it is reported through
/// [`crate::protocol::Verdict`]. Errors describe malformed inputs.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("empty input vector")]
    EmptyInput,

    #[error("fixed point Q must not be the identity")]
    IdentityFixedPoint,

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("toy group order {0} is out of the supported range [2, 2^62)")]
    OrderOutOfRange(u64),

    #[error("block size {requested} outside the safe range 1..={limit}")]
    InvalidBlockSize { requested: usize, limit: usize },

    #[error("invalid group element encoding")]
    InvalidElement,

    #[error("non-canonical scalar encoding")]
    InvalidScalar,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("verifier rejected an honest response")]
    HonestRejected,
}

pub type Result<T> = std::result::Result<T, Error>;
