//! IO, run configuration, experiment pipelines and the `hotcs` command line
//! on top of [`hotcs_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod pipelines;

pub use error::{Error, Result};
