//! Weak-measurement reversal of amplitude damping on two-qubit states.
//!
//! The crate is organised bottom-up: dense operator algebra in [`qops`],
//! damping channels, ion-trap pulses, the ideal filter, two trapped-ion
//! realisations of it, the fidelity metrics used to compare them and the
//! end-to-end gate pipeline.

pub mod channels;
pub mod error;
pub mod filter;
pub mod gates;
pub mod metrics;
pub mod pipeline;
pub mod qops;
pub mod scheme_a;
pub mod scheme_b;

pub use error::{Error, Result};
