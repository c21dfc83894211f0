use thiserror::Error;

use crate::codec::CodecError;

/// Why a protocol step refused its input.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("malformed message: {0}")]
    Malformed(CodecError),
    #[error("unmasked element is not in [1, p-1]")]
    OutOfRange,
    #[error("unmasked element is outside the order-q subgroup")]
    SubgroupFail,
    #[error("received element is invalid")]
    InvalidElement,
    #[error("authentication tag mismatch")]
    TagMismatch,
    #[error("step called in phase {0}")]
    WrongPhase(&'static str),
}
