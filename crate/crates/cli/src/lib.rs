//! Support code for the `dren` binary: checkpoint files, run configs, the
//! property suites behind `dren verify` and the depth sweep.

pub mod checkpoint;
pub mod config;
pub mod error;
pub mod sweep;
pub mod verify;

pub use error::{CliError, Result};
