//! Discretized phase operator, preconditioned Newton solves and continuation.

pub mod continuation;
pub mod newton;
pub mod norms;
pub mod operator;

pub use continuation::{continuation, ContinuationPolicy, ContinuationStep};
pub use newton::{estimate_r0, newton_solve, random_field, real_basis, SolverOptions, SolverReport};
pub use norms::{norm_surrogate, phase_decomposition, NormSurrogate};
pub use operator::{
    assemble_f, default_moment_step, linearization_coefficients, FlatPreconditioner, LinearizationCoefficients,
    PhaseResidual,
};
