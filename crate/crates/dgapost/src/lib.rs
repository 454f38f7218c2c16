//! Experiment driver for the `dgapost-core` finite element engine.
//!
//! Configuration files, problem data presets, convergence tables, CSV and VTK
//! output, and the `dgapost` command line.

pub mod config;
pub mod data;
pub mod error;
pub mod expr;
pub mod output;
pub mod presets;
pub mod run;
pub mod selfcheck;
pub mod table;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use run::{output_dir, run, RunOutput};
