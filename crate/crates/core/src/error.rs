use thiserror::Error;

use crate::series::RingSpec;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("ring mismatch: {0} vs {1}")]
    RingMismatch(RingSpec, RingSpec),
    #[error("u-truncation mismatch: {0} vs {1}")]
    UTruncMismatch(u32, u32),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid ring: {0}")]
    InvalidRing(String),
    #[error("inadmissible monomial {0}")]
    Inadmissible(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("not integrable: {0}")]
    NotIntegrable(String),
    #[error("residues not nilpotent: {0}")]
    NotNilpotent(String),
    #[error("not horizontal: {0}")]
    NotHorizontal(String),
    #[error("internal consistency failure: {0}")]
    Consistency(String),
}
