//! Library side of the benchmark CLI: experiment specs, the seeded
//! multi-start runner, hyperparameter sweeps, and the cloud cost/time
//! models. The `gcans` binary is a thin clap wrapper over these.

pub mod cost;
pub mod runner;
pub mod spec;
pub mod sweep;

/// Environment variable that overrides the spec's output directory.
pub const OUTPUT_DIR_ENV: &str = "GCANS_OUT_DIR";
