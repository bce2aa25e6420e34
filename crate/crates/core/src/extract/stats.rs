//! Descriptive statistics over a selection: the distinct values of the
//! selected cells with counts, each a candidate resource of one class.

use serde::{Deserialize, Serialize};

use super::{ExtractError, Selection};
use crate::graph::{Resource, Vocabulary};
use crate::transform::TransformExpr;
use crate::workbook::{CellRef, Workbook};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsParams {
    /// Pipeline splitting cell text into values; `None` takes the text whole.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<TransformExpr>,
    /// Also count values taken from struck runs.
    #[serde(default = "yes")]
    pub include_struck: bool,
    /// Class of every created resource.
    pub class: Resource,
    /// Predicate linking a cell to its resources; defaults to `sk:matches`.
    #[serde(default = "Vocabulary::matches")]
    pub property: Resource,
}

fn yes() -> bool {
    true
}

impl StatsParams {
    pub fn new(class: Resource) -> Self {
        StatsParams {
            transform: None,
            include_struck: true,
            class,
            property: Vocabulary::matches(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Occurrence {
    pub cell: CellRef,
    pub struck: bool,
}

/// One distinct value. Label and creation fields are user-editable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatRow {
    pub value: String,
    pub count: usize,
    pub create: bool,
    pub preferred_label: String,
    #[serde(default)]
    pub alt_labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
    pub occurrences: Vec<Occurrence>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StagedMiss {
    pub cell: CellRef,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatSummary {
    pub class: Resource,
    pub property: Resource,
    /// Rows in order of first appearance.
    pub rows: Vec<StatRow>,
    /// Cells that produced no value.
    pub misses: Vec<StagedMiss>,
}

impl StatSummary {
    pub fn total(&self) -> usize {
        self.rows.iter().map(|r| r.count).sum()
    }

    pub fn row(&self, value: &str) -> Option<&StatRow> {
        self.rows.iter().find(|r| r.value == value)
    }
}

/// Counts the distinct transformed values of the selected cells.
///
/// Unstruck text of a cell is transformed as one string; each struck run is
/// transformed separately so its values keep the struck flag. Values are
/// trimmed and empty ones dropped.
pub fn descriptive_statistics(
    wb: &Workbook,
    selection: &Selection,
    params: &StatsParams,
) -> Result<StatSummary, ExtractError> {
    if selection.is_empty() {
        return Err(ExtractError::EmptySelection);
    }
    let identity = TransformExpr::parse("")?;
    let expr = params.transform.as_ref().unwrap_or(&identity);
    let mut rows: Vec<StatRow> = Vec::new();
    let mut misses = Vec::new();

    for cell in selection.resolve(wb)? {
        let runs = cell.effective_runs();
        let mut pieces: Vec<(String, bool)> = vec![(
            runs.iter().filter(|r| !r.struck).map(|r| r.text.as_str()).collect(),
            false,
        )];
        if params.include_struck {
            pieces.extend(runs.iter().filter(|r| r.struck).map(|r| (r.text.clone(), true)));
        }
        let mut produced = 0;
        for (text, struck) in pieces {
            if text.trim().is_empty() {
                continue;
            }
            for value in expr.eval(&text)? {
                let value = value.trim();
                if value.is_empty() {
                    continue;
                }
                produced += 1;
                let occ = Occurrence {
                    cell: cell.cell_ref.clone(),
                    struck,
                };
                match rows.iter_mut().find(|r| r.value == value) {
                    Some(row) => {
                        row.count += 1;
                        row.occurrences.push(occ);
                    }
                    None => rows.push(StatRow {
                        value: value.to_string(),
                        count: 1,
                        create: true,
                        preferred_label: value.to_string(),
                        alt_labels: Vec::new(),
                        comment: None,
                        occurrences: vec![occ],
                    }),
                }
            }
        }
        if produced == 0 {
            misses.push(StagedMiss {
                cell: cell.cell_ref.clone(),
                reason: "no value after transformation".into(),
            });
        }
    }
    Ok(StatSummary {
        class: params.class.clone(),
        property: params.property.clone(),
        rows,
        misses,
    })
}
