//! The Calabi-Yau family in vertex charts: defining polynomial, residue
//! volume form, Hamiltonian-gradient flow field and singular-set sampling.

pub mod chart;
pub mod global;
pub mod poly;
pub mod singular;

pub use chart::{FamilyChart, HypersurfacePoint, Param, TangentFrame};
pub use global::GlobalFamily;
pub use poly::{Monomial, SparsePoly};
pub use singular::{fs_moment, poly_roots, singular_set_samples, SingularSample};
