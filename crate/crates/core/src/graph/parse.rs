use oxrdf::{NamedOrBlankNode, Term as OxTerm};
use oxttl::{NTriplesParser, TurtleParser};

use super::{Datatype, Graph, GraphError, Literal, RdfFormat, Resource, Term, Triple};

fn resource(format: RdfFormat, iri: &str) -> Result<Resource, GraphError> {
    Resource::new(iri).map_err(|_| GraphError::Parse {
        format,
        message: format!("relative or invalid IRI <{iri}>"),
    })
}

fn convert(format: RdfFormat, t: oxrdf::Triple) -> Result<Triple, GraphError> {
    let subject = match t.subject {
        NamedOrBlankNode::NamedNode(n) => resource(format, n.as_str())?,
        NamedOrBlankNode::BlankNode(b) => {
            return Err(GraphError::Unsupported(format!("blank node _:{}", b.as_str())))
        }
    };
    let predicate = resource(format, t.predicate.as_str())?;
    let object = match t.object {
        OxTerm::NamedNode(n) => Term::from(resource(format, n.as_str())?),
        OxTerm::BlankNode(b) => {
            return Err(GraphError::Unsupported(format!("blank node _:{}", b.as_str())))
        }
        OxTerm::Literal(l) => {
            if let Some(lang) = l.language() {
                return Err(GraphError::Unsupported(format!("language tag @{lang}")));
            }
            let datatype = Datatype::from_xsd(l.datatype().as_str())
                .ok_or_else(|| GraphError::Unsupported(format!("datatype <{}>", l.datatype().as_str())))?;
            Term::from(Literal::new(l.value(), datatype)?)
        }
    };
    Ok(Triple {
        subject,
        predicate,
        object,
    })
}

/// Parses a Turtle or N-Triples document restricted to IRIs and the
/// supported literal datatypes.
pub fn parse(text: &str, format: RdfFormat) -> Result<Graph, GraphError> {
    let syntax = |e: &dyn std::fmt::Display| GraphError::Parse {
        format,
        message: e.to_string(),
    };
    let mut graph = Graph::new();
    match format {
        RdfFormat::NTriples => {
            for t in NTriplesParser::new().for_slice(text) {
                graph.add(convert(format, t.map_err(|e| syntax(&e))?)?);
            }
        }
        RdfFormat::Turtle => {
            for t in TurtleParser::new().for_slice(text) {
                graph.add(convert(format, t.map_err(|e| syntax(&e))?)?);
            }
        }
    }
    Ok(graph)
}
