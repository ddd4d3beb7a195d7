//! Simulation of composable two-party cryptography in Minkowski spacetime.
//!
//! Resources, protocol converters, simulators and distinguishers are all
//! [`engine::Block`]s wired into [`engine::System`]s. A closed system runs as a
//! deterministic discrete-event loop that checks every emission against the
//! light cone, and the [`stats`] module turns runs into exact or Monte Carlo
//! distinguishing advantages.

pub mod attacks;
pub mod engine;
pub mod error;
pub mod primitives;
pub mod protocols;
pub mod quantum;
pub mod spacetime;
pub mod stats;

pub use error::{Error, Result};
