//! Quantum-optical statistics of high-harmonic radiation emitted by a
//! classically driven two-level emitter, and backaction on a quantized pulse.
//!
//! Units: ħ = 1 and the atomic transition frequency ω₀ sets the scale.

pub mod cutoff;
pub mod drive;
pub mod error;
pub mod floquet;
pub mod hilbert;
pub mod integrate;
pub mod lattice;
pub mod observables;
pub mod propagator;
pub mod run;
pub mod special;
pub mod spectrum;

pub use error::{Error, Result};
