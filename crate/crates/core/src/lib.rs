//! Simulator for a quantum eraser whose two "paths" are the opposite OAM
//! modes |±ℓ⟩ of one photon, marked by the polarization of its entangled
//! twin through spin-orbit coupling.
//!
//! The crate is organized bottom-up:
//!
//! - [`hilbert`]: sparse two-photon kets, local operators, projections and
//!   the dense density-matrix oracle.
//! - [`elements`]: q-plates, wave plates, polarizers, fibers, sector
//!   holograms and delays compiled to local operators.
//! - [`experiment`]: source states, the element pipeline, exact coincidence
//!   probabilities, Poisson count sampling and the event timeline.
//! - [`analysis`]: fringe fitting, visibility, distinguishability,
//!   complementarity and pattern rendering.

pub mod analysis;
pub mod elements;
pub mod error;
pub mod experiment;
pub mod hilbert;
mod quad;
pub mod rng;

pub use error::{Error, Result};
