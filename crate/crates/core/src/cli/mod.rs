//! Configuration, record streams and the subcommands of the command-line tool.

pub mod commands;
pub mod config;
pub mod records;

pub use commands::{
    build_fibration, cmd_amoeba, cmd_build_fibration, cmd_monodromy, cmd_solve_fibre, cmd_verify, exit_code,
    sample_faces, verify, BuildSummary, Check, Overrides, Session,
};
pub use config::{AmoebaSpec, BaseSpec, FamilySpec, FibrationSpec, LoopSpec, RunConfig};
pub use records::{RecordStream, Header};
