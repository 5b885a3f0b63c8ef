//! Typed failures shared by every module.
//!
//! Phases are only defined when the amplitudes they are taken from do not
//! vanish; those situations are reported as errors carrying the offending
//! index rather than surfacing as NaN.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value at position {index}")]
    NonFinite { index: usize },

    #[error("zero vector (norm^2 = {norm_sq:e})")]
    ZeroVector { norm_sq: f64 },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("phase undefined: link {link} has modulus {modulus:e}")]
    UndefinedPhase { link: usize, modulus: f64 },

    #[error("weak value undefined: overlap modulus {modulus:e}")]
    UndefinedWeakValue { modulus: f64 },

    #[error("weak-value identity not applicable: states {first} and {second} are orthogonal (overlap {modulus:e})")]
    IdentityNotApplicable { first: usize, second: usize, modulus: f64 },

    #[error("connection singular at sample {sample}: <psi|O|psi> = {value:e}")]
    SingularConnection { sample: usize, value: f64 },

    #[error("endpoints are orthogonal (overlap modulus {modulus:e})")]
    OrthogonalEndpoints { modulus: f64 },

    #[error("state {index} is not unit-normalised (norm {norm})")]
    NotNormalized { index: usize, norm: f64 },

    #[error("basis is not orthonormal: <{first}|{second}> deviates by {deviation:e}")]
    NonOrthogonalBasis {
        first: usize,
        second: usize,
        deviation: f64,
    },

    #[error("spectrum is degenerate: levels {first} and {second} separated by {gap:e}")]
    DegenerateSpectrum { first: usize, second: usize, gap: f64 },

    #[error("Lippmann-Schwinger kernel is singular (condition number {condition:e})")]
    SingularKernel { condition: f64 },

    #[error("amplitude has a pole at this energy: |1 - lambda I| = {modulus:e}")]
    PoleAtEnergy { modulus: f64 },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("parameters not strictly increasing at index {index}")]
    NonMonotone { index: usize },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: String, reason: String },
}

impl Error {
    pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_owned(),
            reason: reason.into(),
        }
    }
}
