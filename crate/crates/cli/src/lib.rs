//! Library side of the `arrogance` command: sample file formats, report
//! documents and the `estimate` / `generate` / `compare` commands.

pub mod commands;
pub mod error;
pub mod io;
pub mod params;
pub mod report;

pub use error::{CliError, EXIT_INPUT, EXIT_METHOD, EXIT_SUPPORT};
