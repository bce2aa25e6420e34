//! Per-cell URIs of the form
//! `<base>workbook/<id>/sheet/<percent-encoded name>/cell/R<row>C<col>`.
//!
//! Minting and resolution are exact inverses: resolution rejects any
//! spelling that minting would not have produced.

use std::collections::BTreeSet;
use std::fmt;

use percent_encoding::{percent_decode_str, utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::model::{CellRef, WorkbookId};
use crate::graph::is_absolute_iri;

/// Everything except RFC 3986 unreserved characters is escaped.
pub(crate) const SEGMENT: &AsciiSet = &NON_ALPHANUMERIC
    .remove(b'-')
    .remove(b'.')
    .remove(b'_')
    .remove(b'~');

/// Escape set for single URI path segments.
pub fn segment() -> &'static AsciiSet {
    SEGMENT
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DeepLinkUri(String);

impl DeepLinkUri {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Display for DeepLinkUri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinkError {
    #[error("base URI `{0}` is not an absolute URI")]
    InvalidBase(String),
    #[error("workbook `{0}` is not loaded in this project")]
    UnknownWorkbook(String),
    #[error("URI `{0}` is outside this project's cell namespace")]
    ForeignNamespace(String),
    #[error("malformed cell URI `{uri}`: {reason}")]
    Malformed { uri: String, reason: &'static str },
}

/// Normalizes a project base so that it always ends in `/` or `#`.
pub fn normalize_base(base: &str) -> Result<String, LinkError> {
    let base = base.trim();
    if !is_absolute_iri(base) {
        return Err(LinkError::InvalidBase(base.to_string()));
    }
    if base.ends_with('/') || base.ends_with('#') {
        Ok(base.to_string())
    } else {
        Ok(format!("{base}/"))
    }
}

#[derive(Debug, Clone)]
pub struct DeepLinker {
    prefix: String,
    workbooks: BTreeSet<WorkbookId>,
}

impl DeepLinker {
    pub fn new(base: &str) -> Result<Self, LinkError> {
        Ok(DeepLinker {
            prefix: format!("{}workbook/", normalize_base(base)?),
            workbooks: BTreeSet::new(),
        })
    }

    pub fn register(&mut self, id: WorkbookId) {
        self.workbooks.insert(id);
    }

    /// True when `uri` lies in the cell namespace, whether or not it resolves.
    pub fn is_cell_uri(&self, uri: &str) -> bool {
        uri.starts_with(&self.prefix)
    }

    pub fn link(&self, cell: &CellRef) -> Result<DeepLinkUri, LinkError> {
        if !self.workbooks.contains(&cell.workbook_id) {
            return Err(LinkError::UnknownWorkbook(cell.workbook_id.to_string()));
        }
        Ok(DeepLinkUri(format!(
            "{}{}/sheet/{}/cell/R{}C{}",
            self.prefix,
            cell.workbook_id,
            utf8_percent_encode(&cell.sheet, SEGMENT),
            cell.row,
            cell.col
        )))
    }

    pub fn resolve(&self, uri: &str) -> Result<CellRef, LinkError> {
        let malformed = |reason| LinkError::Malformed {
            uri: uri.to_string(),
            reason,
        };
        let rest = uri
            .strip_prefix(&self.prefix)
            .ok_or_else(|| LinkError::ForeignNamespace(uri.to_string()))?;
        let parts: Vec<&str> = rest.split('/').collect();
        let [id, "sheet", sheet, "cell", pos] = parts.as_slice() else {
            return Err(malformed("unexpected path layout"));
        };
        let id = WorkbookId::parse(id).ok_or_else(|| malformed("bad workbook id"))?;
        if !self.workbooks.contains(&id) {
            return Err(LinkError::UnknownWorkbook(id.to_string()));
        }
        let name = percent_decode_str(sheet)
            .decode_utf8()
            .map_err(|_| malformed("sheet name is not UTF-8"))?
            .into_owned();
        if utf8_percent_encode(&name, SEGMENT).to_string() != *sheet {
            return Err(malformed("non-canonical sheet encoding"));
        }
        let (row, col) = pos
            .strip_prefix('R')
            .and_then(|p| p.split_once('C'))
            .ok_or_else(|| malformed("cell position must be R<row>C<col>"))?;
        let row = canonical_index(row).ok_or_else(|| malformed("bad row index"))?;
        let col = canonical_index(col).ok_or_else(|| malformed("bad column index"))?;
        Ok(CellRef::new(id, name, row, col))
    }
}

fn canonical_index(s: &str) -> Option<u32> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) || (s.len() > 1 && s.starts_with('0'))
    {
        return None;
    }
    s.parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linker() -> (DeepLinker, WorkbookId) {
        let id = WorkbookId::from_checksum("0123456789abcdef9999");
        let mut l = DeepLinker::new("http://example.org/proj").unwrap();
        l.register(id.clone());
        (l, id)
    }

    #[test]
    fn fixed_layout() {
        let (l, id) = linker();
        let uri = l.link(&CellRef::new(id, "Sheet 1/ä", 0, 1)).unwrap();
        assert_eq!(
            uri.as_str(),
            "http://example.org/proj/workbook/0123456789abcdef/sheet/Sheet%201%2F%C3%A4/cell/R0C1"
        );
    }

    #[test]
    fn unknown_workbook_is_rejected() {
        let (l, _) = linker();
        let other = WorkbookId::from_checksum("ffffffffffffffff");
        assert!(matches!(
            l.link(&CellRef::new(other, "S", 0, 0)),
            Err(LinkError::UnknownWorkbook(_))
        ));
    }

    #[test]
    fn tampered_and_foreign_uris() {
        let (l, id) = linker();
        let good = l.link(&CellRef::new(id, "S", 3, 4)).unwrap();
        assert!(l.resolve(good.as_str()).is_ok());
        for bad in [
            format!("{good}x"),
            good.as_str().replace("R3C4", "R03C4"),
            good.as_str().replace("R3C4", "R3"),
            good.as_str().replace("/cell/", "/cel/"),
            format!("{good}/extra"),
            good.as_str().replace("/S/", "/%53/"),
        ] {
            assert!(
                matches!(l.resolve(&bad), Err(LinkError::Malformed { .. })),
                "{bad}"
            );
        }
        let foreign = good.as_str().replace("example.org/proj", "example.org/other");
        assert!(matches!(l.resolve(&foreign), Err(LinkError::ForeignNamespace(_))));
    }

    #[test]
    fn base_must_be_absolute() {
        assert!(DeepLinker::new("not a uri").is_err());
        assert_eq!(normalize_base("urn:x:").unwrap(), "urn:x:/");
        assert_eq!(normalize_base("http://a/b#").unwrap(), "http://a/b#");
    }
}
