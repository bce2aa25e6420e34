//! The five extraction procedures. Each is a pure function of a workbook
//! snapshot and its parameters and returns a staging payload that can be
//! reviewed, adjusted and finally committed by a session.

pub mod date;
pub mod person;
pub mod regex;
pub mod relation;
pub mod stats;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::GraphError;
use crate::transform::TransformError;
use crate::workbook::{Cell, CellRef, CellValue, TextRun, Workbook};

pub use self::date::{date_extract, DateHit, DateOutlier, DateParams, DateStaging};
pub use self::person::{
    apply_person_edit, person_extract, Mention, PersonEdit, PersonId, PersonIndex, PersonRecord,
};
pub use self::regex::{regex_extract, GroupRef, RegexMatch, RegexMiss, RegexMode, RegexParams, RegexStaging};
pub use self::relation::{
    relationship_discover, JoinCondition, RelationPair, RelationParams, RelationshipStaging,
};
pub use self::stats::{descriptive_statistics, Occurrence, StagedMiss, StatRow, StatSummary, StatsParams};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExtractError {
    #[error("selection is empty")]
    EmptySelection,
    #[error("cell {0} does not belong to the loaded workbook")]
    UnresolvableCell(String),
    #[error("invalid pattern `{pattern}`: {message}")]
    InvalidPattern { pattern: String, message: String },
    #[error("pattern `{pattern}` has no capture group {group}")]
    MissingGroup { pattern: String, group: String },
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("person {0} not found in index")]
    UnknownPerson(String),
    #[error("invalid person edit: {0}")]
    InvalidEdit(String),
}

/// An ordered, explicit list of cells chosen by the user.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub cells: Vec<CellRef>,
}

impl Selection {
    pub fn new(cells: impl IntoIterator<Item = CellRef>) -> Self {
        Selection {
            cells: cells.into_iter().collect(),
        }
    }

    /// Cells `rows` of column `col` in `sheet`.
    pub fn column(wb: &Workbook, sheet: &str, col: u32, rows: std::ops::RangeInclusive<u32>) -> Self {
        Selection::new(rows.map(|r| wb.cell_ref(sheet, r, col)))
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Resolves the selection to the cells it covers, in order.
    ///
    /// Refs addressing empty positions are dropped, as are formula cells and
    /// repeated refs. A ref to another workbook or a missing sheet is an error.
    pub fn resolve<'w>(&self, wb: &'w Workbook) -> Result<Vec<&'w Cell>, ExtractError> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for r in &self.cells {
            if r.workbook_id != wb.id || wb.sheet(&r.sheet).is_none() {
                return Err(ExtractError::UnresolvableCell(r.to_string()));
            }
            if !seen.insert(r) {
                continue;
            }
            match wb.cell(r) {
                Some(c) if !matches!(c.value, CellValue::Formula(_)) => out.push(c),
                _ => {}
            }
        }
        Ok(out)
    }
}

/// Byte ranges of the struck runs of `runs` within their concatenation.
fn struck_ranges(runs: &[TextRun]) -> Vec<std::ops::Range<usize>> {
    let mut pos = 0;
    let mut out = Vec::new();
    for r in runs {
        let end = pos + r.text.len();
        if r.struck {
            out.push(pos..end);
        }
        pos = end;
    }
    out
}

/// Whether the text span `start..end` of the cell consists of struck text.
///
/// A span counts as struck when it has at least one non-whitespace character
/// and every such character lies in a struck run.
pub fn span_is_struck(runs: &[TextRun], start: usize, end: usize) -> bool {
    let text: String = runs.iter().map(|r| r.text.as_str()).collect();
    let struck = struck_ranges(runs);
    let mut any = false;
    for (i, c) in text[start..end].char_indices() {
        if c.is_whitespace() {
            continue;
        }
        any = true;
        let at = start + i;
        if !struck.iter().any(|r| r.contains(&at)) {
            return false;
        }
    }
    any
}

/// Full text of a cell as seen by text extractors.
pub(crate) fn cell_text(cell: &Cell) -> String {
    match &cell.value {
        CellValue::Text(s) => s.clone(),
        other => other.display_text(),
    }
}

pub(crate) fn compile(pattern: &str) -> Result<::regex::Regex, ExtractError> {
    ::regex::Regex::new(pattern).map_err(|e| ExtractError::InvalidPattern {
        pattern: pattern.to_string(),
        message: e.to_string(),
    })
}
