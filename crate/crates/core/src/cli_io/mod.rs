//! Configuration, spectrum cache, cached solves and output files.

pub mod cache;
pub mod commands;
pub mod config;
pub mod output;
pub mod pipeline;

pub use cache::{cache_dir_from_env, SpectrumCache};
pub use config::{CachePolicy, RunConfig};
pub use output::{fmt_f64, write_run, Cell, RunOutput, SolveStats, Table};
pub use pipeline::{partition, SolvedSector, Solver};
