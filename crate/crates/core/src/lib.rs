//! Monitored qubit-chain dynamics: brick-wall Haar circuits interleaved with
//! weak σ3 measurements, the Lyapunov spectrum of the resulting non-unitary
//! evolution operator, and the diagnostics built on top of it (spectral gap,
//! entanglement of the dominant Lyapunov vector, purification of mixed
//! states, finite-size extrapolation).
//!
//! The crate is `no_std` and only needs `alloc`. Everything that touches the
//! filesystem lives in the companion `monitored-sim` crate.
//!
//! Conventions shared by every module:
//!
//! * sites are indexed `0..L` from the left end of the open chain;
//! * site 0 is the most significant bit of a basis index;
//! * bit value 0 is |↑⟩ (σ3 = +1), bit value 1 is |↓⟩;
//! * time steps are counted from 1.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod channel;
pub mod entanglement;
mod error;
pub mod linalg;
pub mod lyapunov;
pub mod mixedsim;
pub mod qstate;
pub mod seed;
pub mod tolerances;

pub use error::{Error, Result};
pub use linalg::C64;
