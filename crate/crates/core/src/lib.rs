//! Interactive construction of RDF knowledge graphs from messy spreadsheets.
//!
//! Cells get stable deep-link URIs ([`workbook`]). Extraction procedures
//! ([`extract`]) produce reviewable stagings; committing a staging through a
//! [`session::Session`] writes cell annotations into the matching graph and
//! the acquired knowledge into the knowledge graph ([`graph`]). The
//! [`collector`] finally turns annotated rows into typed instances.

pub mod collector;
pub mod extract;
pub mod graph;
pub mod session;
pub mod transform;
pub mod workbook;
