//! Command-line harness: configuration profiles, run directories,
//! champion replay and plot-data export.

pub mod commands;
pub mod config;
pub mod error;
pub mod run;

pub use config::{Profile, RunConfig};
pub use error::{CliError, Result};
pub use run::{evolve_run, ChampionKind, ChampionRecord, RunManifest, RunOptions, RunSummary};
