//! Config-driven experiment runner for `codedlab-core`.

pub mod config;
pub mod output;
pub mod run;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

pub use config::{parse_config, Command, ConfigError, ExperimentConfig, Format};
pub use output::{format_float, write_csv, write_jsonl};
pub use run::{has_unrecoverable, run, ResultRow, UNRECOVERABLE};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config errors:\n{}", .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    Config(Vec<ConfigError>),
    #[error("experiment rejected: {0}")]
    Experiment(#[from] codedlab_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Experiment(_) => 2,
            CliError::Io { .. } => 4,
        }
    }
}

/// Read and parse a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text).map_err(CliError::Config)
}

/// Write rows in the configured format to `path`.
pub fn write_rows(rows: &[ResultRow], config: &ExperimentConfig, path: &Path) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = BufWriter::new(File::create(path).map_err(io)?);
    match config.format {
        Format::Csv => write_csv(rows, config, file),
        Format::Jsonl => write_jsonl(rows, config, file),
    }
    .map_err(io)
}
