mod common;

use rdfh_core::graph::parse_ntriples;
use rdfh_core::planner::{decide, tune_thresholds, DEFAULT_NGRAM};
use rdfh_core::query::{PredicateEdge, QueryNode};
use rdfh_core::synth::diverse_graph;
use rdfh_core::workload::{generate_query, GenConfig};
use rdfh_core::{DatasetStats, Engine, IdMap, NiIndex, NodeId, QueryTemplate, RdfGraph};

const G1: &str = r#"<ex:p1> <ex:author> <ex:a1> .
<ex:a1> <ex:name> "Philip S.Yu" .
<ex:p1> <ex:booktitle> "VLDB" .
<ex:p1> <ex:title> "T1" .
<ex:p2> <ex:author> <ex:a2> .
<ex:a2> <ex:name> "Jiawei Han" .
<ex:p2> <ex:cite> <ex:p1> .
"#;

fn node(name: &str, keyword: &str) -> QueryNode {
    QueryNode { name: name.into(), keyword: Some(keyword.into()) }
}

#[test]
fn tiny_workload_never_prunes() {
    let g = parse_ntriples(G1).unwrap();
    let map = IdMap::build(&g);
    let index = NiIndex::build(&g, &map, 2, 5).unwrap();
    let engine = Engine::new(&g, &map, &index);
    let stats = DatasetStats::compute(&g, DEFAULT_NGRAM, None).unwrap();
    let templates: Vec<QueryTemplate> = (0..12)
        .map(|seed| generate_query(&g, &map, &GenConfig { size: 1 + seed as usize % 4, seed, ..Default::default() }))
        .map(|q| q.unwrap().template)
        .collect();
    let report = tune_thresholds(&engine, &stats, &templates, 2).unwrap();
    assert_eq!(report.samples.len(), templates.len());
    for s in &report.samples {
        assert!(!decide(s.evidence.clone(), &report.thresholds, 2).use_pruning, "{:?}", s.evidence);
    }
}

/// Literal node whose 4-character prefix picks out at most three labels,
/// with the entity carrying it and the attribute predicate.
fn rare_literals(g: &RdfGraph, map: &IdMap, count: usize) -> Vec<(NodeId, String, String)> {
    let mut out = Vec::new();
    for t in g.triples() {
        if out.len() == count {
            break;
        }
        if !g.is_literal(t.object) {
            continue;
        }
        let label = g.label(t.object);
        let Some(prefix) = label.get(..4) else { continue };
        if map.lookup_prefix(prefix).len() <= 3 && out.iter().all(|(s, _, _)| *s != t.subject) {
            out.push((t.subject, prefix.to_owned(), g.predicate_label(t.predicate).to_owned()));
        }
    }
    out
}

/// `c -attr-> "prefix"`, `c -*-> a`, `c -*-> b` with every resource keyword
/// matching all entities. Without pruning the two wildcard edges multiply
/// out over every entity before the literal cuts them down.
fn star(prefix: &str, attr: &str) -> QueryTemplate {
    QueryTemplate::new(
        vec![node("c", "ex:t"), node("a", "ex:t"), node("b", "ex:t"), node("l", prefix)],
        vec![
            PredicateEdge { from: 0, predicate: Some(attr.into()), to: 3 },
            PredicateEdge { from: 0, predicate: None, to: 1 },
            PredicateEdge { from: 0, predicate: None, to: 2 },
        ],
        vec![],
    )
    .unwrap()
}

#[test]
fn large_star_workload_prunes() {
    let g = diverse_graph(2_000, 3);
    let map = IdMap::build(&g);
    let index = NiIndex::build(&g, &map, 2, 5).unwrap();
    let engine = Engine::new(&g, &map, &index);
    let stats = DatasetStats::compute(&g, DEFAULT_NGRAM, None).unwrap();
    let anchors = rare_literals(&g, &map, 10);
    assert_eq!(anchors.len(), 10);
    let templates: Vec<QueryTemplate> = anchors.iter().map(|(_, p, a)| star(p, a)).collect();
    let report = tune_thresholds(&engine, &stats, &templates, 2).unwrap();
    for s in &report.samples {
        assert!(s.prune_time < s.noprune_time, "prune {} vs noprune {}", s.prune_time, s.noprune_time);
        assert!(decide(s.evidence.clone(), &report.thresholds, 2).use_pruning, "{:?}", s.evidence);
    }
}
