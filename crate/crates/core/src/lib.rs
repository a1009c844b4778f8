//! Simulation and characterization of universal quantum computation with
//! trapped-ion qubits encoded in a decoherence-free subspace.

pub mod cli;
pub mod dfs;
pub mod error;
pub mod gates;
pub mod motion;
pub mod noise;
pub mod quantum;
pub mod rng;
pub mod tomography;

pub use error::{Error, Result};
