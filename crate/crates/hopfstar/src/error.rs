//! Library error type for fallible constructors.
//!
//! Checks report failures as data ([`crate::check::CheckReport`]); this enum
//! is only for operations that cannot produce a value at all.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("exponential requires every term to vanish at h^0 (nilpotent argument)")]
    ExpNotNilpotent,
    #[error("finite-dimensional backend table is malformed: {0}")]
    BadTable(String),
    #[error("{0}")]
    Invalid(String),
}
