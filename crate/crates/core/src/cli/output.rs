use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::ValueEnum;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::Settings;
use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(CliError::Validation(format!("unknown format `{other}` (csv or json)"))),
        }
    }
}

#[derive(Serialize)]
struct JsonTable<'a, T> {
    config_hash: &'a str,
    rows: &'a [T],
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_hash: &'a str,
    settings: &'a BTreeMap<String, String>,
    files: &'a BTreeMap<String, String>,
}

/// Writes command products either into `--out` (with a manifest of file
/// hashes) or to stdout.
pub struct Output {
    dir: Option<PathBuf>,
    pub format: Format,
    config_hash: String,
    files: BTreeMap<String, String>,
}

impl Output {
    pub fn new(dir: Option<PathBuf>, format: Format, config_hash: String) -> Result<Self, CliError> {
        if let Some(d) = &dir {
            std::fs::create_dir_all(d).map_err(|e| CliError::Internal(format!("cannot create {}: {e}", d.display())))?;
        }
        Ok(Self {
            dir,
            format,
            config_hash,
            files: BTreeMap::new(),
        })
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    pub fn has_dir(&self) -> bool {
        self.dir.is_some()
    }

    /// Writes `bytes` to `name` inside the output directory, or to stdout.
    pub fn emit(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        match &self.dir {
            Some(dir) => {
                let path = dir.join(name);
                if let Some(parent) = path.parent() {
                    std::fs::create_dir_all(parent).map_err(|e| CliError::Internal(e.to_string()))?;
                }
                std::fs::write(&path, bytes).map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))?;
                self.files.insert(name.to_string(), hex::encode(Sha256::digest(bytes)));
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(bytes).map_err(|e| CliError::Internal(e.to_string()))?;
            }
        }
        Ok(())
    }

    pub fn table<T: Serialize>(&mut self, stem: &str, rows: &[T]) -> Result<(), CliError> {
        match self.format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                for row in rows {
                    w.serialize(row).map_err(|e| CliError::Internal(e.to_string()))?;
                }
                let bytes = w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?;
                self.emit(&format!("{stem}.csv"), &bytes)
            }
            Format::Json => {
                let table = JsonTable {
                    config_hash: &self.config_hash,
                    rows,
                };
                let mut bytes = serde_json::to_vec_pretty(&table).map_err(|e| CliError::Internal(e.to_string()))?;
                bytes.push(b'\n');
                self.emit(&format!("{stem}.json"), &bytes)
            }
        }
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
        bytes.push(b'\n');
        self.emit(name, &bytes)
    }

    /// Writes `manifest.json` when an output directory is in use.
    pub fn finish(self, command: &str, settings: &Settings) -> Result<(), CliError> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let manifest = Manifest {
            command,
            config_hash: &self.config_hash,
            settings: settings.resolved(),
            files: &self.files,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| CliError::Internal(e.to_string()))?;
        bytes.push(b'\n');
        std::fs::write(dir.join("manifest.json"), bytes).map_err(|e| CliError::Internal(e.to_string()))
    }
}
