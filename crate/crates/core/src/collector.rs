//! Turns annotated rows into typed instances and lifts cell-to-cell
//! relations to instance-level triples.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, GraphError, Literal, Minter, Resource, Term, Triple, Vocabulary};
use crate::workbook::{CellRef, DeepLinker};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CollectError {
    #[error("row range {first}..={last} is empty")]
    EmptyRange { first: u32, last: u32 },
    #[error("rows {0:?} were already collected; set `rerun` to replace them")]
    AlreadyCollected(Vec<u32>),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectorConfig {
    pub sheet: String,
    /// 0-based first and last row, inclusive.
    pub first_row: u32,
    pub last_row: u32,
    /// Class for rows that carry no type hint.
    pub default_type: Resource,
    /// Rows lacking any of these (unstruck) annotations are reported, not collected.
    #[serde(default)]
    pub required_properties: Vec<Resource>,
    /// Predicate whose literal names the instance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_id_property: Option<Resource>,
    /// Replace instances of rows collected before.
    #[serde(default)]
    pub rerun: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub iri: Resource,
    pub sheet: String,
    pub row: u32,
    pub types: Vec<Resource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Knowledge graph statements with this instance as subject.
    pub property_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedRow {
    pub row: u32,
    pub reason: String,
    pub missing: Vec<Resource>,
}

/// Live instances and skipped rows of a session.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceReport {
    pub instances: Vec<Instance>,
    pub skipped_rows: Vec<SkippedRow>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectReport {
    pub instances: Vec<Instance>,
    /// Annotated rows that produced no instance.
    pub skipped_rows: Vec<SkippedRow>,
    /// Rows in range without any annotation.
    pub unannotated: Vec<u32>,
    pub triples: Vec<Triple>,
}

/// Annotations of the cells of `sheet`, grouped by row.
fn annotations_by_row<'g>(
    matching: &'g Graph,
    linker: &DeepLinker,
    sheet: &str,
) -> BTreeMap<u32, Vec<&'g Triple>> {
    let mut rows: BTreeMap<u32, Vec<&Triple>> = BTreeMap::new();
    for t in matching.iter() {
        if let Ok(cell) = linker.resolve(t.subject.as_str()) {
            if cell.sheet == sheet {
                rows.entry(cell.row).or_default().push(t);
            }
        }
    }
    rows
}

/// Builds one instance per annotated row of the configured range.
///
/// Type hints become `rdf:type`, remainder comments become `rdfs:comment`
/// (struck ones keep the struck variant), cell relations are left for
/// [`lift_relationships`], and every other annotation is copied verbatim.
pub fn collect_instances(
    matching: &Graph,
    linker: &DeepLinker,
    minter: &Minter,
    config: &CollectorConfig,
) -> Result<CollectReport, CollectError> {
    if config.first_row > config.last_row {
        return Err(CollectError::EmptyRange {
            first: config.first_row,
            last: config.last_row,
        });
    }
    let by_row = annotations_by_row(matching, linker, &config.sheet);
    let type_hint = Vocabulary::type_hint();
    let remainder = Vocabulary::remainder_comment();
    let mut report = CollectReport::default();

    for row in config.first_row..=config.last_row {
        let Some(anns) = by_row.get(&row) else {
            report.unannotated.push(row);
            continue;
        };
        let missing: Vec<Resource> = config
            .required_properties
            .iter()
            .filter(|p| !anns.iter().any(|t| &t.predicate == *p))
            .cloned()
            .collect();
        if !missing.is_empty() {
            let names: Vec<&str> = missing.iter().map(|p| p.as_str()).collect();
            report.skipped_rows.push(SkippedRow {
                row,
                reason: format!("missing required properties: {}", names.join(", ")),
                missing,
            });
            continue;
        }
        let label = config.instance_id_property.as_ref().and_then(|p| {
            anns.iter()
                .filter(|t| &t.predicate == p)
                .find_map(|t| t.object.as_literal().map(|l| l.lexical().to_string()))
        });
        let iri = minter.instance(&config.sheet, row, label.as_deref())?;
        let mut triples = Vec::new();
        let mut types: Vec<Resource> = Vec::new();
        for t in anns {
            let p = &t.predicate;
            if Vocabulary::is_cell_relation(p) {
                continue;
            }
            if *p == type_hint {
                if let Some(class) = t.object.as_resource() {
                    if !types.contains(class) {
                        types.push(class.clone());
                    }
                }
                continue;
            }
            let predicate = if Vocabulary::normal_variant(p) == remainder {
                Vocabulary::routed(&Vocabulary::comment(), Vocabulary::is_struck(p))
            } else {
                p.clone()
            };
            triples.push(Triple::new(iri.clone(), predicate, t.object.clone()));
        }
        if types.is_empty() {
            types.push(config.default_type.clone());
        }
        for class in &types {
            triples.push(Triple::new(iri.clone(), Vocabulary::rdf_type(), class.clone()));
        }
        if let Some(l) = &label {
            triples.push(Triple::new(iri.clone(), Vocabulary::label(), Literal::string(l)));
        }
        triples.push(Triple::new(
            iri.clone(),
            Vocabulary::source_row(),
            Literal::string(format!("{}!{}", config.sheet, row + 1)),
        ));
        let property_count = triples.len();
        report.triples.extend(triples);
        report.instances.push(Instance {
            iri,
            sheet: config.sheet.clone(),
            row,
            types,
            label,
            property_count,
        });
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedPair {
    pub a: CellRef,
    pub b: CellRef,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftReport {
    pub added: Vec<Triple>,
    pub skipped: Vec<SkippedPair>,
}

/// Maps every `(cellA, relatedCell/P, cellB)` annotation to `(instA, P, instB)`
/// using the instances of the rows of both cells. `only` restricts the lift
/// to one instance-level predicate.
pub fn lift_relationships(
    matching: &Graph,
    linker: &DeepLinker,
    instance_of: impl Fn(&CellRef) -> Option<Resource>,
    only: Option<&Resource>,
) -> LiftReport {
    let mut report = LiftReport::default();
    for t in matching.iter() {
        let Some(p) = Vocabulary::related_cell_target(&t.predicate) else {
            continue;
        };
        if only.is_some_and(|o| *o != p) {
            continue;
        }
        let Term::Resource { iri: target } = &t.object else {
            continue;
        };
        let (Ok(a), Ok(b)) = (linker.resolve(t.subject.as_str()), linker.resolve(target.as_str())) else {
            continue;
        };
        match (instance_of(&a), instance_of(&b)) {
            (Some(ia), Some(ib)) => report.added.push(Triple::new(ia, p, ib)),
            (ia, _) => {
                let which = if ia.is_none() { &a } else { &b };
                report.skipped.push(SkippedPair {
                    reason: format!("row of {which} has no instance"),
                    a,
                    b,
                });
            }
        }
    }
    report
}
