//! Spreadsheet ingestion and the typed cell model.

mod csv;
mod deeplink;
mod model;
mod stats;
mod xlsx;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use self::csv::CSV_SHEET;
pub use self::stats::{sheet_stats, workbook_stats, SheetStats, WorkbookStats};
pub use deeplink::{normalize_base, segment as deeplink_segment, DeepLinkUri, DeepLinker, LinkError};
pub use model::{
    column_letters, format_number, normalize_runs, parse_a1, Cell, CellRef, CellValue, Sheet,
    TextRun, Workbook, WorkbookId,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WorkbookError {
    #[error("malformed xlsx part `{part}` near byte {offset}: {message}")]
    Xlsx {
        part: String,
        offset: u64,
        message: String,
    },
    #[error("malformed csv at line {line} (byte {offset}): {message}")]
    Csv {
        line: u64,
        offset: u64,
        message: String,
    },
    #[error("unsupported input format `{0}`; expected `xlsx` or `csv`")]
    UnsupportedFormat(String),
    #[error("duplicate sheet name `{0}`")]
    DuplicateSheet(String),
    #[error("cell {cell} holds a {kind} value, not text")]
    NotText { cell: String, kind: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFormat {
    Xlsx,
    Csv,
}

impl SourceFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceFormat::Xlsx => "xlsx",
            SourceFormat::Csv => "csv",
        }
    }

    /// Zip containers are xlsx, everything else is read as csv.
    pub fn sniff(bytes: &[u8]) -> Self {
        if bytes.starts_with(b"PK\x03\x04") {
            SourceFormat::Xlsx
        } else {
            SourceFormat::Csv
        }
    }

    /// Guesses from a file extension.
    pub fn from_path(path: &std::path::Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        ext.parse().ok()
    }
}

impl fmt::Display for SourceFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SourceFormat {
    type Err = WorkbookError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "xlsx" | "xlsm" => Ok(SourceFormat::Xlsx),
            "csv" => Ok(SourceFormat::Csv),
            other => Err(WorkbookError::UnsupportedFormat(other.to_string())),
        }
    }
}

pub fn checksum(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn load_workbook(bytes: &[u8], format: SourceFormat) -> Result<Workbook, WorkbookError> {
    let checksum = checksum(bytes);
    let id = WorkbookId::from_checksum(&checksum);
    let sheets = match format {
        SourceFormat::Xlsx => xlsx::read(bytes, &id)?,
        SourceFormat::Csv => csv::read(bytes, &id)?,
    };
    let mut names = HashSet::new();
    for sheet in &sheets {
        if !names.insert(sheet.name.as_str()) {
            return Err(WorkbookError::DuplicateSheet(sheet.name.clone()));
        }
    }
    Ok(Workbook {
        id,
        checksum,
        sheets,
    })
}

/// Concatenated run texts, leaving out struck runs unless `include_struck`.
pub fn visible_text(cell: &Cell, include_struck: bool) -> Result<String, WorkbookError> {
    if !cell.is_text() {
        return Err(WorkbookError::NotText {
            cell: cell.cell_ref.a1(),
            kind: cell.value.kind(),
        });
    }
    Ok(cell
        .runs
        .iter()
        .filter(|r| include_struck || !r.struck)
        .map(|r| r.text.as_str())
        .collect())
}
