//! Person name recognition and reconciliation into a person index.
//!
//! Cell text is cut at strike-through boundaries, newlines and semicolons.
//! Each piece may start with a parenthesised comment such as `(new)`; the
//! rest is a surface form, read as `Last, First` when it has a comma and as
//! `First ... Last` otherwise.

use serde::{Deserialize, Serialize};

use super::{cell_text, span_is_struck, ExtractError, Selection};
use crate::workbook::{CellRef, Workbook};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PersonId(pub String);

impl std::fmt::Display for PersonId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub cell: CellRef,
    pub surface: String,
    pub struck: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonRecord {
    pub id: PersonId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_name: Option<String>,
    pub last_name: String,
    pub mentions: Vec<Mention>,
    #[serde(default)]
    pub needs_review: bool,
}

impl PersonRecord {
    pub fn display_name(&self) -> String {
        match &self.first_name {
            Some(f) => format!("{f} {}", self.last_name),
            None => self.last_name.clone(),
        }
    }

    fn key(&self) -> (String, Option<String>) {
        (norm(&self.last_name), self.first_name.as_deref().map(norm))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonIndex {
    pub persons: Vec<PersonRecord>,
    #[serde(default)]
    next_id: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum PersonEdit {
    /// Exchanges first and last name of a person.
    SwapNames { person: PersonId },
    /// Moves all mentions of `absorb` into `keep` and deletes `absorb`.
    Merge { keep: PersonId, absorb: PersonId },
    /// Sets both names explicitly.
    Rename {
        person: PersonId,
        #[serde(default)]
        first_name: Option<String>,
        last_name: String,
    },
    /// Records that `surface` in `cell` refers to `person`.
    AddMention { person: PersonId, cell: CellRef, surface: String },
    /// Without `surface`, drops every mention in `cell`.
    RemoveMention {
        person: PersonId,
        cell: CellRef,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        surface: Option<String>,
    },
    RemovePerson { person: PersonId },
}

/// Case-insensitive comparison key of a name part.
fn norm(s: &str) -> String {
    s.trim().trim_end_matches('.').to_lowercase()
}

fn first_compatible(a: Option<&str>, b: Option<&str>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => {
            let (a, b) = (a.replace('.', "").to_lowercase(), b.replace('.', "").to_lowercase());
            let (a, b) = (a.trim(), b.trim());
            a.starts_with(b) || b.starts_with(a)
        }
        _ => true,
    }
}

/// Splits a surface form into `(first, last)`.
pub fn parse_name(surface: &str) -> Option<(Option<String>, String)> {
    let clean = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ");
    if let Some((last, first)) = surface.split_once(',') {
        let last = clean(last);
        let first = clean(first);
        if last.is_empty() {
            return None;
        }
        return Some(((!first.is_empty()).then_some(first), last));
    }
    let tokens: Vec<&str> = surface.split_whitespace().collect();
    match tokens.split_last() {
        None => None,
        Some((last, [])) => Some((None, last.to_string())),
        Some((last, rest)) => Some((Some(rest.join(" ")), last.to_string())),
    }
}

/// Surface forms of a cell with byte spans into the full cell text.
fn surface_forms(text: &str, runs: &[crate::workbook::TextRun]) -> Vec<(usize, usize, Option<String>)> {
    let mut out = Vec::new();
    let mut pos = 0;
    for run in runs {
        let run_end = pos + run.text.len();
        let mut start = pos;
        for (i, c) in run.text.char_indices() {
            if c == '\n' || c == ';' || c == '\r' {
                piece(text, start, pos + i, &mut out);
                start = pos + i + c.len_utf8();
            }
        }
        piece(text, start, run_end, &mut out);
        pos = run_end;
    }
    out
}

fn piece(text: &str, mut start: usize, end: usize, out: &mut Vec<(usize, usize, Option<String>)>) {
    let mut comment = None;
    loop {
        let rest = &text[start..end];
        let trimmed = rest.trim_start();
        start += rest.len() - trimmed.len();
        if let Some(body) = trimmed.strip_prefix('(') {
            if let Some(close) = body.find(')') {
                let c = body[..close].trim();
                if !c.is_empty() {
                    comment = Some(match comment {
                        Some(prev) => format!("{prev} {c}"),
                        None => c.to_string(),
                    });
                }
                start += close + 2;
                continue;
            }
        }
        break;
    }
    let s = text[start..end].trim_end();
    if !s.is_empty() {
        out.push((start, start + s.len(), comment));
    }
}

impl PersonIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, id: &PersonId) -> Option<&PersonRecord> {
        self.persons.iter().find(|p| &p.id == id)
    }

    fn position(&self, id: &PersonId) -> Result<usize, ExtractError> {
        self.persons
            .iter()
            .position(|p| &p.id == id)
            .ok_or_else(|| ExtractError::UnknownPerson(id.0.clone()))
    }

    fn mint_id(&mut self) -> PersonId {
        self.next_id += 1;
        PersonId(format!("p{}", self.next_id))
    }

    pub fn mention_count(&self) -> usize {
        self.persons.iter().map(|p| p.mentions.len()).sum()
    }

    /// Attaches a parsed surface form to the best matching record, creating
    /// one when no record fits or when the choice is ambiguous.
    fn reconcile(&mut self, first: Option<String>, last: String, mention: Mention) {
        let key = (norm(&last), first.as_deref().map(norm));
        if let Some(p) = self.persons.iter_mut().find(|p| p.key() == key) {
            p.mentions.push(mention);
            return;
        }
        let candidates: Vec<usize> = self
            .persons
            .iter()
            .enumerate()
            .filter(|(_, p)| {
                norm(&p.last_name) == key.0 && first_compatible(p.first_name.as_deref(), first.as_deref())
            })
            .map(|(i, _)| i)
            .collect();
        let best = candidates.iter().map(|&i| self.persons[i].mentions.len()).max();
        let top: Vec<usize> = candidates
            .iter()
            .copied()
            .filter(|&i| Some(self.persons[i].mentions.len()) == best)
            .collect();
        match top.as_slice() {
            [] => {
                let id = self.mint_id();
                self.persons.push(PersonRecord {
                    id,
                    first_name: first,
                    last_name: last,
                    mentions: vec![mention],
                    needs_review: false,
                });
            }
            [i] => {
                let p = &mut self.persons[*i];
                if let Some(f) = first {
                    let fuller = p
                        .first_name
                        .as_deref()
                        .is_none_or(|cur| f.replace('.', "").len() > cur.replace('.', "").len());
                    if fuller {
                        p.first_name = Some(f);
                    }
                }
                p.mentions.push(mention);
            }
            _ => {
                let id = self.mint_id();
                self.persons.push(PersonRecord {
                    id,
                    first_name: first,
                    last_name: last,
                    mentions: vec![mention],
                    needs_review: true,
                });
            }
        }
        self.normalize();
    }

    /// Merges records whose normalized names coincide, keeping the earliest.
    fn normalize(&mut self) {
        let mut first_of = std::collections::HashMap::new();
        let mut kept: Vec<PersonRecord> = Vec::with_capacity(self.persons.len());
        for p in std::mem::take(&mut self.persons) {
            match first_of.get(&p.key()) {
                Some(&i) => {
                    let target: &mut PersonRecord = &mut kept[i];
                    target.mentions.extend(p.mentions);
                }
                None => {
                    first_of.insert(p.key(), kept.len());
                    kept.push(p);
                }
            }
        }
        self.persons = kept;
    }

    /// Checks the structural invariants of the index.
    pub fn is_well_formed(&self) -> bool {
        let mut keys = std::collections::HashSet::new();
        let mut ids = std::collections::HashSet::new();
        self.persons.iter().all(|p| {
            !p.last_name.trim().is_empty()
                && !p.mentions.is_empty()
                && keys.insert(p.key())
                && ids.insert(p.id.clone())
        })
    }
}

/// Recognizes person mentions in the selection and reconciles them into
/// `index` (usually empty), returning the updated index.
pub fn person_extract(
    wb: &Workbook,
    selection: &Selection,
    mut index: PersonIndex,
) -> Result<PersonIndex, ExtractError> {
    if selection.is_empty() {
        return Err(ExtractError::EmptySelection);
    }
    for cell in selection.resolve(wb)? {
        let text = cell_text(cell);
        let runs = cell.effective_runs();
        for (start, end, comment) in surface_forms(&text, &runs) {
            let surface = &text[start..end];
            let Some((first, last)) = parse_name(surface) else {
                continue;
            };
            let mention = Mention {
                cell: cell.cell_ref.clone(),
                surface: surface.to_string(),
                struck: span_is_struck(&runs, start, end),
                comment,
            };
            index.reconcile(first, last, mention);
        }
    }
    Ok(index)
}

/// Applies one user correction. The index is left unchanged on error.
pub fn apply_person_edit(
    wb: &Workbook,
    index: &PersonIndex,
    edit: &PersonEdit,
) -> Result<PersonIndex, ExtractError> {
    let mut ix = index.clone();
    match edit {
        PersonEdit::SwapNames { person } => {
            let i = ix.position(person)?;
            let p = &mut ix.persons[i];
            let Some(first) = p.first_name.take() else {
                return Err(ExtractError::InvalidEdit(format!("{person} has no first name to swap")));
            };
            p.first_name = Some(std::mem::replace(&mut p.last_name, first));
        }
        PersonEdit::Rename {
            person,
            first_name,
            last_name,
        } => {
            if last_name.trim().is_empty() {
                return Err(ExtractError::InvalidEdit("last name must not be empty".into()));
            }
            let i = ix.position(person)?;
            let p = &mut ix.persons[i];
            p.last_name = last_name.trim().to_string();
            p.first_name = first_name
                .as_deref()
                .map(str::trim)
                .filter(|f| !f.is_empty())
                .map(str::to_string);
            p.needs_review = false;
        }
        PersonEdit::Merge { keep, absorb } => {
            if keep == absorb {
                return Err(ExtractError::InvalidEdit("cannot merge a person into itself".into()));
            }
            let j = ix.position(absorb)?;
            ix.position(keep)?;
            let absorbed = ix.persons.remove(j);
            let i = ix.position(keep)?;
            let p = &mut ix.persons[i];
            for m in absorbed.mentions {
                if !p.mentions.contains(&m) {
                    p.mentions.push(m);
                }
            }
            p.needs_review = false;
        }
        PersonEdit::AddMention {
            person,
            cell,
            surface,
        } => {
            let i = ix.position(person)?;
            let c = wb
                .cell(cell)
                .ok_or_else(|| ExtractError::UnresolvableCell(cell.to_string()))?;
            let text = cell_text(c);
            let Some(start) = (!surface.is_empty()).then(|| text.find(surface.as_str())).flatten() else {
                return Err(ExtractError::InvalidEdit(format!("`{surface}` does not occur in {cell}")));
            };
            let mention = Mention {
                cell: cell.clone(),
                surface: surface.clone(),
                struck: span_is_struck(&c.effective_runs(), start, start + surface.len()),
                comment: None,
            };
            let p = &mut ix.persons[i];
            if p.mentions.iter().any(|m| m.cell == *cell && m.surface == *surface) {
                return Err(ExtractError::InvalidEdit(format!("{person} already has this mention")));
            }
            p.mentions.push(mention);
        }
        PersonEdit::RemoveMention {
            person,
            cell,
            surface,
        } => {
            let i = ix.position(person)?;
            let p = &mut ix.persons[i];
            let before = p.mentions.len();
            p.mentions
                .retain(|m| !(m.cell == *cell && surface.as_ref().is_none_or(|s| m.surface == *s)));
            if p.mentions.len() == before {
                return Err(ExtractError::InvalidEdit(format!("{person} has no such mention")));
            }
            if p.mentions.is_empty() {
                ix.persons.remove(i);
            }
        }
        PersonEdit::RemovePerson { person } => {
            let i = ix.position(person)?;
            ix.persons.remove(i);
        }
    }
    ix.normalize();
    Ok(ix)
}
