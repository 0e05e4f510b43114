//! Command-line driver: configuration parsing, scenario dispatch and CSV output.

pub mod commands;
pub mod config;

pub use commands::{CliError, RunSummary, EXIT_OK, EXIT_PROPERTY, EXIT_RUNTIME, EXIT_VALIDATION};
pub use config::{parse_config, ConfigError, RunConfig};

use std::path::Path;

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    Ok(parse_config(&text)?)
}
