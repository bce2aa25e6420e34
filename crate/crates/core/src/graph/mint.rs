use percent_encoding::utf8_percent_encode;

use super::{GraphError, Resource};
use crate::workbook::{deeplink_segment, normalize_base, LinkError};

/// Trims, collapses internal whitespace and percent-encodes a label.
pub fn slug(label: &str) -> String {
    let collapsed = label.split_whitespace().collect::<Vec<_>>().join(" ");
    utf8_percent_encode(&collapsed, deeplink_segment()).to_string()
}

/// Mints project-local IRIs. Minting is a pure function of the base and
/// the normalized inputs, so replays reproduce identical IRIs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Minter {
    base: String,
}

impl Minter {
    pub fn new(base: &str) -> Result<Self, LinkError> {
        Ok(Minter {
            base: normalize_base(base)?,
        })
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    fn mint(&self, path: &[&str]) -> Result<Resource, GraphError> {
        let mut iri = self.base.clone();
        for (i, seg) in path.iter().enumerate() {
            let s = slug(seg);
            if s.is_empty() {
                return Err(GraphError::EmptyLabel);
            }
            if i > 0 {
                iri.push('/');
            }
            iri.push_str(&s);
        }
        Resource::new(iri)
    }

    /// Domain resource identified by its kind and preferred label.
    pub fn resource(&self, kind: &str, label: &str) -> Result<Resource, GraphError> {
        self.mint(&["resource", kind, label])
    }

    pub fn class(&self, name: &str) -> Result<Resource, GraphError> {
        self.mint(&["class", name])
    }

    pub fn property(&self, name: &str) -> Result<Resource, GraphError> {
        self.mint(&["property", name])
    }

    /// Row instance IRI; `key` is the instance-id value when the row has one.
    pub fn instance(&self, sheet: &str, row: u32, key: Option<&str>) -> Result<Resource, GraphError> {
        let row = format!("r{row}");
        match key.filter(|k| !k.trim().is_empty()) {
            Some(k) => self.mint(&["instance", sheet, &row, k]),
            None => self.mint(&["instance", sheet, &row]),
        }
    }
}
