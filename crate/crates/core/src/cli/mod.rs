//! Command line front end: JSON run configuration, the staged pipeline and
//! its on-disk artifacts.

pub mod config;
pub mod run;

pub use config::{ConfigIssue, RunConfig, Validated};
pub use run::{dump_mesh, run, RunManifest, RunOptions, RunStatus};
