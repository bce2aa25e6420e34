//! RDF atoms and the two named graphs of a project.
//!
//! The matching graph holds statements whose subjects are cell deep links;
//! the knowledge graph holds the domain resources those cells evidence.
//! Every node is an IRI or a literal. Blank nodes are never produced and are
//! rejected when parsing.

mod mint;
mod parse;
mod serialize;
pub mod vocab;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use mint::{slug, Minter};
pub use parse::parse;
pub use serialize::{ntriples_line, serialize, serialize_with, Prefixes};
pub use vocab::{Vocabulary, VOCAB_NS};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("`{0}` is not an absolute IRI")]
    InvalidIri(String),
    #[error("`{lexical}` is not a valid {datatype} literal")]
    InvalidLiteral { lexical: String, datatype: Datatype },
    #[error("cannot mint a resource from an empty label")]
    EmptyLabel,
    #[error("{format} parse error: {message}")]
    Parse {
        format: RdfFormat,
        message: String,
    },
    #[error("unsupported RDF construct: {0}")]
    Unsupported(String),
    #[error("unknown graph `{0}`; expected `matching` or `knowledge`")]
    UnknownGraph(String),
    #[error("unknown RDF format `{0}`; expected `turtle` or `ntriples`")]
    UnknownFormat(String),
}

pub fn is_absolute_iri(s: &str) -> bool {
    let Some((scheme, rest)) = s.split_once(':') else {
        return false;
    };
    let mut sc = scheme.chars();
    let scheme_ok = sc.next().is_some_and(|c| c.is_ascii_alphabetic())
        && sc.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'));
    scheme_ok
        && !rest.is_empty()
        && !s.chars().any(|c| {
            c.is_whitespace()
                || c.is_control()
                || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\')
        })
}

/// An IRI node.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Resource(String);

impl Resource {
    pub fn new(iri: impl Into<String>) -> Result<Self, GraphError> {
        let iri = iri.into();
        if is_absolute_iri(&iri) {
            Ok(Resource(iri))
        } else {
            Err(GraphError::InvalidIri(iri))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Segment after the last `#` or `/`, percent-decoded.
    pub fn local_name(&self) -> String {
        let tail = self.0.rsplit(['#', '/']).next().unwrap_or(&self.0);
        percent_encoding::percent_decode_str(tail)
            .decode_utf8_lossy()
            .into_owned()
    }
}

impl TryFrom<String> for Resource {
    type Error = GraphError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Resource::new(value)
    }
}

impl From<Resource> for String {
    fn from(r: Resource) -> String {
        r.0
    }
}

impl FromStr for Resource {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Resource::new(s)
    }
}

impl fmt::Display for Resource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Datatype {
    String,
    Integer,
    Decimal,
    Boolean,
    Date,
}

pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";

impl Datatype {
    pub fn xsd_iri(self) -> String {
        format!("{XSD}{}", self.as_str())
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Datatype::String => "string",
            Datatype::Integer => "integer",
            Datatype::Decimal => "decimal",
            Datatype::Boolean => "boolean",
            Datatype::Date => "date",
        }
    }

    pub fn from_xsd(iri: &str) -> Option<Self> {
        iri.strip_prefix(XSD)?.parse().ok()
    }

    /// Canonical lexical form of `raw`, or `None` when it does not fit the type.
    pub fn coerce(self, raw: &str) -> Option<String> {
        let s = raw.trim();
        match self {
            Datatype::String => Some(raw.to_string()),
            Datatype::Integer => {
                let digits = s.strip_prefix(['+', '-']).unwrap_or(s);
                if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                    return None;
                }
                Some(s.to_string())
            }
            Datatype::Decimal => {
                let body = s.strip_prefix(['+', '-']).unwrap_or(s);
                let (int, frac) = body.split_once('.').unwrap_or((body, ""));
                let digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
                if (int.is_empty() && frac.is_empty()) || !digits(int) || !digits(frac) {
                    return None;
                }
                Some(s.to_string())
            }
            Datatype::Boolean => match s.to_ascii_lowercase().as_str() {
                "true" | "1" => Some("true".into()),
                "false" | "0" => Some("false".into()),
                _ => None,
            },
            Datatype::Date => {
                if s.len() != 10 {
                    return None;
                }
                NaiveDate::parse_from_str(s, "%Y-%m-%d")
                    .ok()
                    .map(|d| d.format("%Y-%m-%d").to_string())
                    .filter(|canon| canon == s)
            }
        }
    }
}

impl fmt::Display for Datatype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Datatype {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "string" => Ok(Datatype::String),
            "integer" | "int" => Ok(Datatype::Integer),
            "decimal" => Ok(Datatype::Decimal),
            "boolean" | "bool" => Ok(Datatype::Boolean),
            "date" => Ok(Datatype::Date),
            other => Err(GraphError::Unsupported(format!("datatype `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    lexical: String,
    datatype: Datatype,
}

impl Literal {
    /// Validates the lexical form; the stored form is the canonical one.
    pub fn new(lexical: impl Into<String>, datatype: Datatype) -> Result<Self, GraphError> {
        let lexical = lexical.into();
        match datatype.coerce(&lexical) {
            Some(lexical) => Ok(Literal { lexical, datatype }),
            None => Err(GraphError::InvalidLiteral { lexical, datatype }),
        }
    }

    pub fn string(s: impl Into<String>) -> Self {
        Literal {
            lexical: s.into(),
            datatype: Datatype::String,
        }
    }

    pub fn date(d: NaiveDate) -> Self {
        Literal {
            lexical: d.format("%Y-%m-%d").to_string(),
            datatype: Datatype::Date,
        }
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn datatype(&self) -> Datatype {
        self.datatype
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Term {
    Resource { iri: Resource },
    Literal(Literal),
}

impl Term {
    pub fn as_resource(&self) -> Option<&Resource> {
        match self {
            Term::Resource { iri } => Some(iri),
            Term::Literal(_) => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(l) => Some(l),
            Term::Resource { .. } => None,
        }
    }
}

impl From<Resource> for Term {
    fn from(iri: Resource) -> Self {
        Term::Resource { iri }
    }
}

impl From<Literal> for Term {
    fn from(l: Literal) -> Self {
        Term::Literal(l)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub subject: Resource,
    pub predicate: Resource,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Resource, predicate: Resource, object: impl Into<Term>) -> Self {
        Triple {
            subject,
            predicate,
            object: object.into(),
        }
    }
}

/// A triple pattern; `None` positions are wildcards.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pattern {
    pub subject: Option<Resource>,
    pub predicate: Option<Resource>,
    pub object: Option<Term>,
}

impl Pattern {
    pub fn any() -> Self {
        Pattern::default()
    }

    pub fn subject(mut self, s: Resource) -> Self {
        self.subject = Some(s);
        self
    }

    pub fn predicate(mut self, p: Resource) -> Self {
        self.predicate = Some(p);
        self
    }

    pub fn object(mut self, o: impl Into<Term>) -> Self {
        self.object = Some(o.into());
        self
    }

    pub fn matches(&self, t: &Triple) -> bool {
        self.subject.as_ref().is_none_or(|s| *s == t.subject)
            && self.predicate.as_ref().is_none_or(|p| *p == t.predicate)
            && self.object.as_ref().is_none_or(|o| *o == t.object)
    }
}

/// A set of triples with deterministic (sorted) iteration order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    triples: BTreeSet<Triple>,
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    /// Returns `false` when the triple was already present.
    pub fn add(&mut self, t: Triple) -> bool {
        self.triples.insert(t)
    }

    pub fn remove(&mut self, t: &Triple) -> bool {
        self.triples.remove(t)
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.triples.contains(t)
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    pub fn query(&self, pattern: &Pattern) -> BTreeSet<Triple> {
        self.matching(pattern).cloned().collect()
    }

    pub fn matching<'a>(&'a self, pattern: &'a Pattern) -> Box<dyn Iterator<Item = &'a Triple> + 'a> {
        // Subject-bound lookups use the ordered set's range.
        match &pattern.subject {
            Some(s) => {
                let start = Triple {
                    subject: s.clone(),
                    predicate: Resource(String::new()),
                    object: Term::Resource {
                        iri: Resource(String::new()),
                    },
                };
                Box::new(
                    self.triples
                        .range(start..)
                        .take_while(move |t| t.subject == *s)
                        .filter(move |t| pattern.matches(t)),
                )
            }
            None => Box::new(self.triples.iter().filter(move |t| pattern.matches(t))),
        }
    }

    pub fn count(&self, pattern: &Pattern) -> usize {
        self.matching(pattern).count()
    }

    pub fn into_set(self) -> BTreeSet<Triple> {
        self.triples
    }
}

impl FromIterator<Triple> for Graph {
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        Graph {
            triples: iter.into_iter().collect(),
        }
    }
}

impl Extend<Triple> for Graph {
    fn extend<I: IntoIterator<Item = Triple>>(&mut self, iter: I) {
        self.triples.extend(iter);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphName {
    Matching,
    Knowledge,
}

impl GraphName {
    pub fn as_str(self) -> &'static str {
        match self {
            GraphName::Matching => "matching",
            GraphName::Knowledge => "knowledge",
        }
    }
}

impl FromStr for GraphName {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "matching" => Ok(GraphName::Matching),
            "knowledge" => Ok(GraphName::Knowledge),
            other => Err(GraphError::UnknownGraph(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RdfFormat {
    Turtle,
    #[serde(alias = "nt")]
    NTriples,
}

impl RdfFormat {
    pub fn media_type(self) -> &'static str {
        match self {
            RdfFormat::Turtle => "text/turtle; charset=utf-8",
            RdfFormat::NTriples => "application/n-triples; charset=utf-8",
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            RdfFormat::Turtle => "ttl",
            RdfFormat::NTriples => "nt",
        }
    }
}

impl fmt::Display for RdfFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RdfFormat::Turtle => "turtle",
            RdfFormat::NTriples => "ntriples",
        })
    }
}

impl FromStr for RdfFormat {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "turtle" | "ttl" => Ok(RdfFormat::Turtle),
            "ntriples" | "n-triples" | "nt" => Ok(RdfFormat::NTriples),
            other => Err(GraphError::UnknownFormat(other.to_string())),
        }
    }
}

/// The matching graph and the knowledge graph of one project.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStore {
    pub matching: Graph,
    pub knowledge: Graph,
}

impl GraphStore {
    pub fn graph(&self, name: GraphName) -> &Graph {
        match name {
            GraphName::Matching => &self.matching,
            GraphName::Knowledge => &self.knowledge,
        }
    }

    pub fn graph_mut(&mut self, name: GraphName) -> &mut Graph {
        match name {
            GraphName::Matching => &mut self.matching,
            GraphName::Knowledge => &mut self.knowledge,
        }
    }

    pub fn add(&mut self, name: GraphName, t: Triple) -> bool {
        self.graph_mut(name).add(t)
    }

    pub fn query(&self, name: GraphName, pattern: &Pattern) -> BTreeSet<Triple> {
        self.graph(name).query(pattern)
    }
}
