//! Shared test fixtures.

/// Small bibliography graph: two papers, their authors, one citation.
pub(crate) const G1: &str = r#"<ex:p1> <ex:author> <ex:a1> .
<ex:a1> <ex:name> "Philip S.Yu" .
<ex:p1> <ex:booktitle> "VLDB" .
<ex:p1> <ex:title> "T1" .
<ex:p2> <ex:author> <ex:a2> .
<ex:a2> <ex:name> "Jiawei Han" .
<ex:p2> <ex:cite> <ex:p1> .
"#;

pub(crate) fn g1() -> crate::RdfGraph {
    crate::graph::parse_ntriples(G1).unwrap()
}
