//! Flag defaults from the project config file.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Deserialize;

use crate::commands::CliError;
use crate::{Format, GraphArg};

/// Keys this tool reads; service keys in the same file are ignored here.
#[derive(Debug, Default, Deserialize)]
pub struct FileConfig {
    pub workbook: Option<PathBuf>,
    pub log: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub graph: Option<GraphArg>,
    pub base_uri: Option<String>,
    pub epoch: Option<NaiveDate>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Relative paths in the file are taken from the file's directory.
    pub fn resolve_paths(mut self, path: Option<&Path>) -> Self {
        let Some(dir) = path.and_then(Path::parent) else {
            return self;
        };
        for p in [&mut self.workbook, &mut self.log, &mut self.out].into_iter().flatten() {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        self
    }
}
