use std::fmt::Write;

use super::vocab::{RDFS_NS, RDF_NS, SKOS_NS, VOCAB_NS};
use super::{Datatype, Graph, Literal, RdfFormat, Resource, Term, Triple, XSD};

/// Prefix table used by the Turtle writer, in declaration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prefixes(Vec<(String, String)>);

impl Default for Prefixes {
    fn default() -> Self {
        Prefixes(
            [
                ("rdf", RDF_NS),
                ("rdfs", RDFS_NS),
                ("skos", SKOS_NS),
                ("xsd", XSD),
                ("sk", VOCAB_NS),
            ]
            .into_iter()
            .map(|(p, n)| (p.to_string(), n.to_string()))
            .collect(),
        )
    }
}

impl Prefixes {
    pub fn with(mut self, prefix: &str, namespace: &str) -> Self {
        self.0.push((prefix.to_string(), namespace.to_string()));
        self
    }

    /// Longest matching namespace wins; names that would need escaping stay full IRIs.
    fn compact(&self, iri: &str) -> Option<String> {
        self.0
            .iter()
            .filter_map(|(p, ns)| iri.strip_prefix(ns.as_str()).map(|local| (p, ns.len(), local)))
            .filter(|(_, _, local)| simple_local(local))
            .max_by_key(|(_, len, _)| *len)
            .map(|(p, _, local)| format!("{p}:{local}"))
    }
}

fn simple_local(local: &str) -> bool {
    let mut chars = local.chars();
    chars
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn escape_string(s: &str, out: &mut String) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c.is_control() => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

fn iri(r: &Resource) -> String {
    format!("<{}>", r.as_str())
}

fn nt_literal(l: &Literal) -> String {
    let mut out = String::new();
    escape_string(l.lexical(), &mut out);
    if l.datatype() != Datatype::String {
        let _ = write!(out, "^^<{}>", l.datatype().xsd_iri());
    }
    out
}

fn nt_term(t: &Term) -> String {
    match t {
        Term::Resource { iri: r } => iri(r),
        Term::Literal(l) => nt_literal(l),
    }
}

/// One N-Triples statement, including the trailing newline.
pub fn ntriples_line(t: &Triple) -> String {
    format!("{} {} {} .\n", iri(&t.subject), iri(&t.predicate), nt_term(&t.object))
}

fn ntriples(graph: &Graph) -> String {
    let mut lines: Vec<String> = graph.iter().map(ntriples_line).collect();
    lines.sort();
    lines.concat()
}

fn turtle(graph: &Graph, prefixes: &Prefixes) -> String {
    let name = |r: &Resource| prefixes.compact(r.as_str()).unwrap_or_else(|| iri(r));
    let term = |t: &Term| match t {
        Term::Resource { iri: r } => name(r),
        Term::Literal(l) => {
            let mut out = String::new();
            escape_string(l.lexical(), &mut out);
            if l.datatype() != Datatype::String {
                out.push_str("^^xsd:");
                out.push_str(l.datatype().as_str());
            }
            out
        }
    };
    let rdf_type = super::Vocabulary::rdf_type();

    let mut out = String::new();
    for (p, ns) in &prefixes.0 {
        let _ = writeln!(out, "@prefix {p}: <{ns}> .");
    }

    // The set is ordered by subject, then predicate, then object.
    let mut current: Option<(&Resource, &Resource)> = None;
    for t in graph.iter() {
        match current {
            Some((s, p)) if s == &t.subject && p == &t.predicate => {
                let _ = write!(out, ", {}", term(&t.object));
            }
            Some((s, _)) if s == &t.subject => {
                let _ = write!(out, " ;\n    {} {}", pred(&t.predicate, &rdf_type, &name), term(&t.object));
            }
            prev => {
                if prev.is_some() {
                    out.push_str(" .\n");
                }
                let _ = write!(
                    out,
                    "\n{} {} {}",
                    name(&t.subject),
                    pred(&t.predicate, &rdf_type, &name),
                    term(&t.object)
                );
            }
        }
        current = Some((&t.subject, &t.predicate));
    }
    if current.is_some() {
        out.push_str(" .\n");
    }
    out
}

fn pred(p: &Resource, rdf_type: &Resource, name: &impl Fn(&Resource) -> String) -> String {
    if p == rdf_type {
        "a".to_string()
    } else {
        name(p)
    }
}

pub fn serialize(graph: &Graph, format: RdfFormat) -> String {
    serialize_with(graph, format, &Prefixes::default())
}

/// N-Triples output is one triple per line, sorted; Turtle groups by subject.
pub fn serialize_with(graph: &Graph, format: RdfFormat, prefixes: &Prefixes) -> String {
    match format {
        RdfFormat::NTriples => ntriples(graph),
        RdfFormat::Turtle => turtle(graph, prefixes),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Triple;

    fn r(s: &str) -> Resource {
        Resource::new(s).unwrap()
    }

    #[test]
    fn empty_graphs() {
        let g = Graph::new();
        assert_eq!(serialize(&g, RdfFormat::NTriples), "");
        let ttl = serialize(&g, RdfFormat::Turtle);
        assert!(ttl.lines().all(|l| l.starts_with("@prefix")));
        assert_eq!(ttl.lines().count(), 5);
    }

    #[test]
    fn ntriples_lines_are_sorted_and_escaped() {
        let g: Graph = [
            Triple::new(r("http://b/s"), r("http://b/p"), Literal::string("a \"q\"\n\\")),
            Triple::new(
                r("http://a/s"),
                r("http://b/p"),
                Literal::new("7", Datatype::Integer).unwrap(),
            ),
        ]
        .into_iter()
        .collect();
        let nt = serialize(&g, RdfFormat::NTriples);
        assert_eq!(
            nt,
            "<http://a/s> <http://b/p> \"7\"^^<http://www.w3.org/2001/XMLSchema#integer> .\n\
             <http://b/s> <http://b/p> \"a \\\"q\\\"\\n\\\\\" .\n"
        );
    }

    #[test]
    fn turtle_groups_and_abbreviates() {
        let s = r("http://x/s");
        let g: Graph = [
            Triple::new(s.clone(), super::super::Vocabulary::rdf_type(), r("http://x/C")),
            Triple::new(s.clone(), super::super::Vocabulary::pref_label(), Literal::string("a")),
            Triple::new(s.clone(), super::super::Vocabulary::pref_label(), Literal::string("b")),
        ]
        .into_iter()
        .collect();
        let ttl = serialize(&g, RdfFormat::Turtle);
        assert!(ttl.contains("<http://x/s> a <http://x/C> ;\n    skos:prefLabel \"a\", \"b\" .\n"), "{ttl}");
    }
}
