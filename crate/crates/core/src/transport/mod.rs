//! Hamiltonian-gradient transport of Lagrangian graphs into the family.

pub mod graph;
pub mod integrator;
pub mod torus;

pub use graph::{FibreProblem, LagrangianGraph, ReferenceKind, ReferenceTorus};
pub use integrator::{default_delta_sing, singular_proximity, Flow, FlowPath, FlowSettings, FlowStats, StepMode};
pub use torus::{
    form_values, kahler_form, lagrangian_defect, metric_norm_sqr, pullback_phase, spectral_frames, unwrap_phase,
    TransportedTorus,
};
