//! Configuration, file formats, and orchestration around the solver crate.

pub mod config;
pub mod files;
pub mod pipeline;

pub use config::RunConfig;
pub use pipeline::{
    build_pipeline, cmd_basis, cmd_converge, cmd_ns_mode, cmd_solve, cmd_verify, Manifest,
    SolveOutcome, SweepResult,
};
