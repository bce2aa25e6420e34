//! Fixed predicates used by the annotation machinery.
//!
//! Every annotation predicate has a struck variant (`<iri>Struck`) that is
//! used whenever the annotated value came from struck-through text.

use percent_encoding::utf8_percent_encode;

use super::Resource;
use crate::workbook::deeplink_segment;

pub const VOCAB_NS: &str = "urn:sheetkg:vocab#";
pub const RDF_NS: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
pub const RDFS_NS: &str = "http://www.w3.org/2000/01/rdf-schema#";
pub const SKOS_NS: &str = "http://www.w3.org/2004/02/skos/core#";

const STRUCK_SUFFIX: &str = "Struck";
const RELATED_VIA: &str = "relatedCell/";

fn iri(ns: &str, local: &str) -> Resource {
    Resource::new(format!("{ns}{local}")).expect("static vocabulary IRI")
}

/// Namespace for the fixed annotation and labelling predicates.
#[derive(Debug, Clone, Copy, Default)]
pub struct Vocabulary;

impl Vocabulary {
    pub fn matches() -> Resource {
        iri(VOCAB_NS, "matches")
    }
    pub fn remainder_comment() -> Resource {
        iri(VOCAB_NS, "remainderComment")
    }
    pub fn mentions_person() -> Resource {
        iri(VOCAB_NS, "mentionsPerson")
    }
    pub fn has_literal() -> Resource {
        iri(VOCAB_NS, "hasLiteral")
    }
    pub fn type_hint() -> Resource {
        iri(VOCAB_NS, "typeHint")
    }
    pub fn related_cell() -> Resource {
        iri(VOCAB_NS, "relatedCell")
    }
    pub fn first_name() -> Resource {
        iri(VOCAB_NS, "firstName")
    }
    pub fn last_name() -> Resource {
        iri(VOCAB_NS, "lastName")
    }
    /// Links a collected instance back to the row it was built from.
    pub fn source_row() -> Resource {
        iri(VOCAB_NS, "sourceRow")
    }

    pub fn rdf_type() -> Resource {
        iri(RDF_NS, "type")
    }
    pub fn label() -> Resource {
        iri(RDFS_NS, "label")
    }
    pub fn comment() -> Resource {
        iri(RDFS_NS, "comment")
    }
    pub fn pref_label() -> Resource {
        iri(SKOS_NS, "prefLabel")
    }
    pub fn alt_label() -> Resource {
        iri(SKOS_NS, "altLabel")
    }

    /// The annotation predicates, each of which has a struck variant.
    pub fn annotation_predicates() -> Vec<Resource> {
        vec![
            Self::matches(),
            Self::remainder_comment(),
            Self::mentions_person(),
            Self::has_literal(),
            Self::type_hint(),
            Self::related_cell(),
        ]
    }

    pub fn struck_variant(p: &Resource) -> Resource {
        if Self::is_struck(p) {
            return p.clone();
        }
        Resource::new(format!("{p}{STRUCK_SUFFIX}")).expect("suffix keeps IRI valid")
    }

    pub fn is_struck(p: &Resource) -> bool {
        p.as_str().ends_with(STRUCK_SUFFIX)
    }

    pub fn normal_variant(p: &Resource) -> Resource {
        match p.as_str().strip_suffix(STRUCK_SUFFIX) {
            Some(base) => Resource::new(base).unwrap_or_else(|_| p.clone()),
            None => p.clone(),
        }
    }

    /// Picks the normal or struck form of `p`.
    pub fn routed(p: &Resource, struck: bool) -> Resource {
        if struck {
            Self::struck_variant(p)
        } else {
            p.clone()
        }
    }

    /// Cell-to-cell relation predicate specialised for one instance-level predicate.
    pub fn related_cell_via(predicate: &Resource) -> Resource {
        Resource::new(format!(
            "{VOCAB_NS}{RELATED_VIA}{}",
            utf8_percent_encode(predicate.as_str(), deeplink_segment())
        ))
        .expect("encoded IRI")
    }

    /// Inverse of [`Vocabulary::related_cell_via`].
    pub fn related_cell_target(p: &Resource) -> Option<Resource> {
        let enc = p.as_str().strip_prefix(VOCAB_NS)?.strip_prefix(RELATED_VIA)?;
        let dec = percent_encoding::percent_decode_str(enc).decode_utf8().ok()?;
        Resource::new(dec.into_owned()).ok()
    }

    /// Cell-to-cell predicates are never copied onto instances.
    pub fn is_cell_relation(p: &Resource) -> bool {
        let normal = Self::normal_variant(p);
        normal == Self::related_cell() || Self::related_cell_target(&normal).is_some()
    }
}
