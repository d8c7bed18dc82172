//! Decoherence-protected single-qubit gates.
//!
//! Gates are compiled into BB1 composite pulses whose rotations are each
//! embedded in a dynamical-decoupling cycle, simulated under dephasing noise
//! and amplitude miscalibration, and scored by process tomography.

pub mod compiler;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod noise;
pub mod rng;
pub mod sim;
pub mod tomography;

pub use error::{Error, Result};
