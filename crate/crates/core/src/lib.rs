//! Numerical simulator and experiment harness for quantum reservoir
//! computing with small spin networks.
//!
//! The crate covers four reservoir protocols (fully restarting, memory
//! restricted, weak measurement, dissipative), transverse-field Ising
//! Hamiltonian ensembles, linear readout training, information processing
//! capacity over delayed Legendre targets, chaotic benchmark tasks
//! (Lorenz-63, Mackey-Glass), and a deterministic sweep harness with CSV/JSON
//! export.

pub mod benchmarks;
pub mod error;
pub mod hamiltonians;
pub mod harness;
pub mod ipc;
pub mod protocols;
pub mod quantum;
pub mod readout;

pub use error::{Error, Result};
