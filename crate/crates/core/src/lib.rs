//! Generalised geometric phases: discrete chains, continuous curves, null
//! curves, and the places they show up in dynamics, perturbation theory and
//! scattering.

pub mod curve;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod job;
pub mod json;
pub mod perturbation;
pub mod phase;
pub mod random;
pub mod scattering;

pub use error::{Error, Result};
pub use hilbert::{Complex, Observable, StateVector, Tolerances};
pub use phase::PhaseResult;
