//! Semiclassical Schrödinger evolution on the flat torus: exact lattice
//! algebra, Fourier-diagonal propagation, Wigner pairings and two-microlocal
//! calculus for quantum-limit studies.

pub mod error;
pub mod fmt;
pub mod hamiltonian;
pub mod lattice;
pub mod profile;
pub mod propagator;
pub mod state;
pub mod wigner;
pub mod microlocal;

pub use error::{Error, Result};
