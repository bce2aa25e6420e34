//! Service configuration: one TOML file plus environment overrides.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sheetkg_core::session::ProjectConfig;
use thiserror::Error;

pub const PORT_VAR: &str = "SHEETKG_PORT";
pub const STORAGE_VAR: &str = "SHEETKG_STORAGE_DIR";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid value {value:?} for {var}")]
    Env { var: &'static str, value: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub host: String,
    pub port: u16,
    /// Projects are persisted here; `None` keeps them in memory only.
    pub storage_dir: Option<PathBuf>,
    pub base_uri: String,
    pub epoch: NaiveDate,
    /// Largest accepted workbook upload in bytes.
    pub max_upload: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        let project = ProjectConfig::default();
        ServiceConfig {
            host: "127.0.0.1".into(),
            port: 8080,
            storage_dir: None,
            base_uri: project.base_uri,
            epoch: project.epoch,
            max_upload: 64 * 1024 * 1024,
        }
    }
}

impl ServiceConfig {
    /// Reads `path` when given; unknown keys are ignored so that one file
    /// can also carry command-line defaults.
    pub fn from_file(path: Option<&Path>) -> Result<Self, ConfigError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Applies port and storage overrides from `lookup`.
    pub fn with_env(mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        if let Some(v) = lookup(PORT_VAR) {
            self.port = v.trim().parse().map_err(|_| ConfigError::Env { var: PORT_VAR, value: v })?;
        }
        if let Some(v) = lookup(STORAGE_VAR) {
            self.storage_dir = (!v.is_empty()).then(|| PathBuf::from(v));
        }
        Ok(self)
    }

    /// File, then process environment.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        Self::from_file(path)?.with_env(|k| std::env::var(k).ok())
    }

    pub fn project(&self) -> ProjectConfig {
        ProjectConfig {
            base_uri: self.base_uri.clone(),
            epoch: self.epoch,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn env_overrides_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sheetkg.toml");
        std::fs::write(&path, "port = 9000\nepoch = \"1899-12-30\"\nworkbook = \"ignored.xlsx\"\n").unwrap();
        let file = ServiceConfig::from_file(Some(&path)).unwrap();
        assert_eq!(file.port, 9000);
        assert_eq!(file.epoch, NaiveDate::from_ymd_opt(1899, 12, 30).unwrap());
        let env = file
            .clone()
            .with_env(|k| match k {
                PORT_VAR => Some("7000".into()),
                STORAGE_VAR => Some("/tmp/p".into()),
                _ => None,
            })
            .unwrap();
        assert_eq!(env.port, 7000);
        assert_eq!(env.storage_dir, Some(PathBuf::from("/tmp/p")));
        assert!(file.with_env(|k| (k == PORT_VAR).then(|| "x".into())).is_err());
    }
}
