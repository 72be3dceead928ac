//! Toric Kähler data: potentials, moment maps and polytope combinatorics.

pub mod moment;
pub mod polytope;
pub mod potential;

pub use moment::{base_projection, inverse_moment_map, metric_hessian, moment_map, MomentFrame};
pub use polytope::{ReflexivePolytopePair, VertexChart};
pub use potential::{constraint_differential, Constraint, ExpTerm, ToricKahlerPotential};

/// Restriction of an ambient potential to `x_g = c - sum x_k` or `x_g -> -inf`.
pub fn induce_potential(
    ambient: &ToricKahlerPotential,
    graph_index: usize,
    constraint: Constraint,
) -> crate::error::Result<ToricKahlerPotential> {
    ambient.induce(graph_index, constraint)
}
