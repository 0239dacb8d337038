//! File formats, ingestion, scenario loading and the command-line front end
//! for the `windroute-core` planners.

pub mod cli;
pub mod config;
mod error;
pub mod files;
pub mod grid_spec;
pub mod ingest;
pub mod run;

pub use error::{Error, Result};
pub use windroute_core as core;
