//! Discovery of cell-to-cell relationships by comparing keys of two groups.

use serde::{Deserialize, Serialize};

use super::regex::GroupRef;
use super::{cell_text, compile, ExtractError, Selection};
use crate::graph::Resource;
use crate::workbook::{CellRef, Workbook};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JoinCondition {
    /// Key of B starts with key of A.
    Prefix,
    Equal,
    /// Key of B ends with key of A.
    Suffix,
    /// Captured group of A equals captured group of B.
    Groups { group_a: GroupRef, group_b: GroupRef },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationParams {
    pub regex_a: String,
    pub regex_b: String,
    pub condition: JoinCondition,
    /// Instance-level predicate the related rows will be lifted to.
    pub predicate: Resource,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationPair {
    pub a: CellRef,
    pub b: CellRef,
    pub key_a: String,
    pub key_b: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationshipStaging {
    pub group_a: Vec<CellRef>,
    pub group_b: Vec<CellRef>,
    pub unassigned: Vec<CellRef>,
    pub warnings: Vec<String>,
    pub pairs: Vec<RelationPair>,
    /// Number of key comparisons performed, always `|A| * |B|`.
    pub comparisons: u64,
}

/// Partitions the selection with `regex_a` and `regex_b` and pairs every
/// `a` with every `b` satisfying the join condition. Keys are the whole
/// match unless the condition names groups.
pub fn relationship_discover(
    wb: &Workbook,
    selection: &Selection,
    params: &RelationParams,
) -> Result<RelationshipStaging, ExtractError> {
    if selection.is_empty() {
        return Err(ExtractError::EmptySelection);
    }
    let re_a = compile(&params.regex_a)?;
    let re_b = compile(&params.regex_b)?;
    let (ga, gb) = match &params.condition {
        JoinCondition::Groups { group_a, group_b } => {
            group_a.check(&re_a)?;
            group_b.check(&re_b)?;
            (group_a.clone(), group_b.clone())
        }
        _ => (GroupRef::Index(0), GroupRef::Index(0)),
    };
    let key = |re: &::regex::Regex, g: &GroupRef, text: &str| {
        re.captures(text)
            .map(|c| g.get(&c).map(|m| m.as_str().to_string()))
    };

    let mut out = RelationshipStaging {
        group_a: Vec::new(),
        group_b: Vec::new(),
        unassigned: Vec::new(),
        warnings: Vec::new(),
        pairs: Vec::new(),
        comparisons: 0,
    };
    let mut a_keys = Vec::new();
    let mut b_keys = Vec::new();
    for cell in selection.resolve(wb)? {
        let text = cell_text(cell);
        let r = cell.cell_ref.clone();
        match (key(&re_a, &ga, &text), key(&re_b, &gb, &text)) {
            (Some(ka), kb) => {
                if kb.is_some() {
                    out.warnings
                        .push(format!("{r} matches both patterns and was put in group A"));
                }
                out.group_a.push(r.clone());
                a_keys.push((r, ka));
            }
            (None, Some(kb)) => {
                out.group_b.push(r.clone());
                b_keys.push((r, kb));
            }
            (None, None) => out.unassigned.push(r),
        }
    }
    for (ra, ka) in &a_keys {
        for (rb, kb) in &b_keys {
            out.comparisons += 1;
            let (Some(ka), Some(kb)) = (ka, kb) else {
                continue;
            };
            let hit = match params.condition {
                JoinCondition::Prefix => kb.starts_with(ka.as_str()),
                JoinCondition::Suffix => kb.ends_with(ka.as_str()),
                JoinCondition::Equal | JoinCondition::Groups { .. } => ka == kb,
            };
            if hit && !ka.is_empty() {
                out.pairs.push(RelationPair {
                    a: ra.clone(),
                    b: rb.clone(),
                    key_a: ka.clone(),
                    key_b: kb.clone(),
                });
            }
        }
    }
    Ok(out)
}
