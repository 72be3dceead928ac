//! Generalized special Lagrangian torus fibres of Calabi-Yau hypersurfaces in
//! toric varieties near the large complex limit.
//!
//! The crate builds fibres by transporting Lagrangian graphs along the
//! Hamiltonian-gradient flow of a hypersurface family and solving the
//! constant-phase equation by a preconditioned Newton iteration.

pub mod atlas;
pub mod cli;
pub mod error;
pub mod family;
pub mod linalg;
pub mod solver;
pub mod spectral;
pub mod toric;
pub mod transport;

pub use error::{Error, Result};
