//! Global (non)contextuality of Born-rule empirical models.
//!
//! Observables are split into projective decompositions of the identity
//! ([`spectral`]), grouped into maximal commuting contexts with one joint
//! distribution each ([`contexts`]), and the existence of a single global
//! distribution reproducing every context is decided as a linear
//! feasibility problem ([`globalfit`]). The [`simulator`] samples the same
//! distributions run by run, with the measured property fixed before the
//! apparatus handle is consulted.

pub mod contexts;
pub mod error;
pub mod globalfit;
pub mod scenario;
pub mod simulator;
pub mod spectral;

pub use error::{Error, Result};
