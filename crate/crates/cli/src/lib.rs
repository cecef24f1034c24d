//! Command-line front end: `simulate`, `analyze`, `optimize` and `sweep`.
//!
//! Exit codes: 0 success, 2 configuration, 3 parse, 4 insufficient data,
//! 5 I/O.

pub mod commands;
pub mod config;
pub mod error;
pub mod format;

pub use commands::{run, Cli};
pub use error::{CliError, Result};
