//! Configuration files, command orchestration and artifacts.

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;

pub use commands::{run, Command, Outcome, RunOptions, SolveKind};
pub use config::{parse, Config, LoadedConfig, Phase};
pub use output::{config_hash, run_id, RunManifest};
