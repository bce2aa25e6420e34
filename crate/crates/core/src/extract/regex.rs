//! Pattern-based extraction of literals or constant resources from cells.

use serde::{Deserialize, Serialize};

use super::{cell_text, compile, span_is_struck, ExtractError, Selection};
use crate::graph::{Datatype, Literal, Resource, Term};
use crate::workbook::{CellRef, Workbook};

/// Capture group addressed by index or by name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupRef {
    Index(usize),
    Name(String),
}

impl Default for GroupRef {
    fn default() -> Self {
        GroupRef::Index(0)
    }
}

impl std::fmt::Display for GroupRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GroupRef::Index(i) => write!(f, "{i}"),
            GroupRef::Name(n) => f.write_str(n),
        }
    }
}

impl GroupRef {
    pub(crate) fn check(&self, re: &::regex::Regex) -> Result<(), ExtractError> {
        let ok = match self {
            GroupRef::Index(i) => *i < re.captures_len(),
            GroupRef::Name(n) => re.capture_names().flatten().any(|c| c == n),
        };
        if ok {
            Ok(())
        } else {
            Err(ExtractError::MissingGroup {
                pattern: re.as_str().to_string(),
                group: self.to_string(),
            })
        }
    }

    pub(crate) fn get<'h>(&self, caps: &::regex::Captures<'h>) -> Option<::regex::Match<'h>> {
        match self {
            GroupRef::Index(i) => caps.get(*i),
            GroupRef::Name(n) => caps.name(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RegexMode {
    /// The captured text, coerced to `datatype`, becomes a literal.
    Literal {
        #[serde(default)]
        group: GroupRef,
        #[serde(default = "string_type")]
        datatype: Datatype,
    },
    /// Every matching cell is linked to one fixed resource.
    Constant { resource: Resource },
}

fn string_type() -> Datatype {
    Datatype::String
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegexParams {
    pub pattern: String,
    #[serde(flatten)]
    pub mode: RegexMode,
    pub property: Resource,
    /// Predicate for the text around the match; unset drops it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remainder_property: Option<Resource>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegexMatch {
    pub cell: CellRef,
    pub matched_text: String,
    pub value: Term,
    pub struck: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remainder: Option<String>,
    #[serde(default)]
    pub remainder_struck: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegexMiss {
    pub cell: CellRef,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegexStaging {
    pub matched: Vec<RegexMatch>,
    pub missed: Vec<RegexMiss>,
}

/// Applies `params.pattern` to every selected cell. Only the first match of
/// a cell counts.
pub fn regex_extract(
    wb: &Workbook,
    selection: &Selection,
    params: &RegexParams,
) -> Result<RegexStaging, ExtractError> {
    if selection.is_empty() {
        return Err(ExtractError::EmptySelection);
    }
    let re = compile(&params.pattern)?;
    if let RegexMode::Literal { group, .. } = &params.mode {
        group.check(&re)?;
    }
    let mut out = RegexStaging {
        matched: Vec::new(),
        missed: Vec::new(),
    };
    for cell in selection.resolve(wb)? {
        let text = cell_text(cell);
        let runs = cell.effective_runs();
        let miss = |reason: &str| RegexMiss {
            cell: cell.cell_ref.clone(),
            reason: reason.to_string(),
        };
        let Some(caps) = re.captures(&text) else {
            out.missed.push(miss("no match"));
            continue;
        };
        let whole = caps.get(0).expect("group 0 always participates");
        let (span, value) = match &params.mode {
            RegexMode::Literal { group, datatype } => {
                let Some(m) = group.get(&caps) else {
                    out.missed.push(miss("capture group did not participate"));
                    continue;
                };
                match Literal::new(m.as_str(), *datatype) {
                    Ok(lit) => (m.range(), Term::from(lit)),
                    Err(_) => {
                        out.missed.push(miss(&format!("`{}` is not a valid {datatype}", m.as_str())));
                        continue;
                    }
                }
            }
            RegexMode::Constant { resource } => (whole.range(), Term::from(resource.clone())),
        };
        let before = &text[..whole.start()];
        let after = &text[whole.end()..];
        let remainder = format!("{} {}", before.trim(), after.trim()).trim().to_string();
        let remainder_struck = !remainder.is_empty()
            && (before.trim().is_empty() || span_is_struck(&runs, 0, whole.start()))
            && (after.trim().is_empty() || span_is_struck(&runs, whole.end(), text.len()));
        out.matched.push(RegexMatch {
            cell: cell.cell_ref.clone(),
            matched_text: whole.as_str().to_string(),
            value,
            struck: span_is_struck(&runs, span.start, span.end),
            remainder: (!remainder.is_empty() && params.remainder_property.is_some())
                .then_some(remainder),
            remainder_struck,
        });
    }
    Ok(out)
}
