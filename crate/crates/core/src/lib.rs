//! Exact diagonalization and eigenstate-thermalization diagnostics for
//! spin-1 XXZ chains, with random-matrix and Haar references.

pub mod basis;
pub mod cli_io;
pub mod entanglement;
pub mod error;
pub mod eth;
pub mod hamiltonian;
pub mod quench;
pub mod rmt;
pub mod spectra;
pub mod stats;
pub mod symmetry_eth;

pub use error::{Error, Result};
pub use num_complex::Complex64 as c64;
