use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

/// Provenance record written next to every set of outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// Command-line arguments after the binary name; `rerun` parses these again.
    pub args: Vec<String>,
    /// Fully resolved parameters, defaults included.
    pub params: Value,
    pub outputs: Vec<PathBuf>,
    pub tool_version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(subcommand: &str, args: &[String], params: Value, outputs: Vec<PathBuf>) -> Self {
        Self {
            subcommand: subcommand.to_owned(),
            args: args.to_vec(),
            params,
            outputs,
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }

    pub fn path(out: &Path, subcommand: &str) -> PathBuf {
        out.join(format!("{subcommand}.manifest.json"))
    }

    pub fn write(&self, out: &Path) -> Result<PathBuf, CliError> {
        let path = Self::path(out, &self.subcommand);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: not a run manifest: {e}", path.display())))
    }
}
