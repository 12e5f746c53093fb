//! Command-line harness around `burgers-core`: JSON configuration, a
//! binary field format, run manifests and the composite studies.

pub mod commands;
pub mod config;
pub mod error;
pub mod fieldfile;
pub mod manifest;
pub mod table;

pub use commands::{replay, run, CommandKind, Outcome};
pub use config::LabConfig;
pub use error::LabError;

/// Environment variable selecting the worker thread count.
pub const THREADS_ENV: &str = "BURGERS_LAB_THREADS";
