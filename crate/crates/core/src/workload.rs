//! Random query templates grown from subgraphs of a data graph.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{NodeId, RdfGraph, Triple};
use crate::idmap::IdMap;
use crate::query::{ConnectionEdge, PredicateEdge, QueryNode, QueryTemplate};
use crate::{Error, Result};

/// Start nodes tried before giving up on a graph.
const START_ATTEMPTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub size: usize,
    pub seed: u64,
    /// Literal keywords are chosen to match between `lo` and `hi` labels.
    pub match_cap: (usize, usize),
    pub connection_edge_prob: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            size: 4,
            seed: 0,
            match_cap: (1, 200),
            connection_edge_prob: 0.0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.match_cap;
        if self.size == 0 || lo == 0 || lo > hi || !(0.0..=1.0).contains(&self.connection_edge_prob) {
            return Err(Error::InvalidInput(format!("invalid generator config: {self:?}")));
        }
        Ok(())
    }
}

/// A generated template and the subgraph it was cut from. `source[i]` is
/// the graph node behind query node `i`, so `source` is one of the matches.
#[derive(Debug, Clone)]
pub struct GeneratedQuery {
    pub template: QueryTemplate,
    pub source: Vec<NodeId>,
}

/// Cuts a random connected subgraph with `config.size` nodes and turns it
/// into a template with generalized keywords.
pub fn generate_query(graph: &RdfGraph, idmap: &IdMap, config: &GenConfig) -> Result<GeneratedQuery> {
    config.validate()?;
    if graph.node_count() < config.size {
        return Err(Error::Generate(format!(
            "graph has {} nodes, template needs {}",
            graph.node_count(),
            config.size
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (nodes, edges) = (0..START_ATTEMPTS)
        .find_map(|_| grow(graph, config.size, &mut rng))
        .ok_or_else(|| Error::Generate(format!("no connected subgraph with {} nodes found", config.size)))?;

    let position: HashMap<NodeId, usize> = nodes.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let qnodes = nodes
        .iter()
        .enumerate()
        .map(|(i, n)| QueryNode {
            name: format!("?q{i}"),
            keyword: Some(generalize_keyword(graph.label(*n), graph.is_literal(*n), idmap, config, &mut rng)),
        })
        .collect();
    let mut pedges = Vec::new();
    let mut cedges = Vec::new();
    for t in &edges {
        let (from, to) = (position[&t.subject], position[&t.object]);
        if from != to && config.connection_edge_prob > 0.0 && rng.gen_bool(config.connection_edge_prob) {
            cedges.push(ConnectionEdge {
                from,
                to,
                max_distance: rng.gen_range(2..=5),
                directed: true,
            });
        } else {
            pedges.push(PredicateEdge {
                from,
                predicate: Some(graph.predicate_label(t.predicate).to_owned()),
                to,
            });
        }
    }
    Ok(GeneratedQuery {
        template: QueryTemplate::new(qnodes, pedges, cedges)?,
        source: nodes,
    })
}

/// Grows a subgraph from a random start node by repeatedly taking a
/// uniformly random unselected edge incident to it. Edges between already
/// selected nodes are kept too. `None` if growth stalls short of `size`.
fn grow(graph: &RdfGraph, size: usize, rng: &mut ChaCha8Rng) -> Option<(Vec<NodeId>, Vec<Triple>)> {
    let start = NodeId(rng.gen_range(0..graph.node_count() as u32));
    let mut nodes = vec![start];
    let mut selected: HashSet<NodeId> = HashSet::from([start]);
    let mut frontier: Vec<Triple> = Vec::new();
    let mut seen: HashSet<Triple> = HashSet::new();
    let mut edges = Vec::new();
    let mut push_incident = |n: NodeId, frontier: &mut Vec<Triple>| {
        let out = graph.out_edges(n).iter().map(|&(p, o)| Triple { subject: n, predicate: p, object: o });
        let inc = graph.in_edges(n).iter().map(|&(p, s)| Triple { subject: s, predicate: p, object: n });
        for t in out.chain(inc) {
            if seen.insert(t) {
                frontier.push(t);
            }
        }
    };
    push_incident(start, &mut frontier);
    while nodes.len() < size {
        if frontier.is_empty() {
            return None;
        }
        let t = frontier.swap_remove(rng.gen_range(0..frontier.len()));
        edges.push(t);
        for n in [t.subject, t.object] {
            if selected.insert(n) {
                nodes.push(n);
                push_incident(n, &mut frontier);
            }
        }
    }
    // edges among the selected nodes that were never drawn
    for t in frontier {
        if selected.contains(&t.subject) && selected.contains(&t.object) {
            edges.push(t);
        }
    }
    Some((nodes, edges))
}

/// Local name of an IRI: the part after the last `/`, `#` or `:`.
fn local_name_start(label: &str) -> usize {
    label.rfind(['/', '#', ':']).map_or(0, |i| i + 1)
}

/// Keyword for a node label.
///
/// Resource labels lose their trailing digits and the separator before
/// them, unless that would leave an empty local name. Literal labels become
/// a random prefix matching between `lo` and `hi` labels; without one, the
/// shortest prefix matching at most `hi` labels, or the label itself.
pub fn generalize_keyword(
    label: &str,
    literal: bool,
    idmap: &IdMap,
    config: &GenConfig,
    rng: &mut impl Rng,
) -> String {
    if !literal {
        let stripped = label.trim_end_matches(|c: char| c.is_ascii_digit());
        if stripped.len() == label.len() {
            return label.to_owned();
        }
        let stripped = stripped
            .strip_suffix(['_', '-', '.'])
            .unwrap_or(stripped);
        return if stripped.len() > local_name_start(label) {
            stripped.to_owned()
        } else {
            label.to_owned()
        };
    }
    let (lo, hi) = config.match_cap;
    let prefixes: Vec<(&str, usize)> = label
        .char_indices()
        .skip(1)
        .map(|(i, _)| &label[..i])
        .chain(std::iter::once(label))
        .filter(|p| !p.is_empty())
        .map(|p| (p, idmap.lookup_prefix(p).len()))
        .collect();
    let band: Vec<&str> = prefixes
        .iter()
        .filter(|(_, c)| (lo..=hi).contains(c))
        .map(|(p, _)| *p)
        .collect();
    if !band.is_empty() {
        return band[rng.gen_range(0..band.len())].to_owned();
    }
    prefixes
        .iter()
        .find(|(_, c)| *c <= hi)
        .map_or(label, |(p, _)| p)
        .to_owned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::g1;
    use crate::graph::GraphBuilder;

    fn cfg() -> GenConfig {
        GenConfig::default()
    }

    #[test]
    fn uri_generalization() {
        let g = g1();
        let map = IdMap::build(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut kw = |l: &str| generalize_keyword(l, false, &map, &cfg(), &mut rng);
        assert_eq!(kw("ex:p1"), "ex:p");
        assert_eq!(map.lookup_prefix("ex:p").len(), 2);
        assert_eq!(kw("http://x.org/item_123"), "http://x.org/item");
        assert_eq!(kw("http://x.org/v1.2"), "http://x.org/v1");
        assert_eq!(kw("http://x.org/42"), "http://x.org/42");
        assert_eq!(kw("ex:paper"), "ex:paper");
        assert_eq!(kw("_:b12"), "_:b");
    }

    #[test]
    fn literal_generalization_stays_in_band() {
        let g = g1();
        let map = IdMap::build(&g);
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let kw = generalize_keyword("Philip S.Yu", true, &map, &cfg(), &mut rng);
            assert!("Philip S.Yu".starts_with(&kw));
            assert_eq!(map.lookup_prefix(&kw).len(), 1);
        }
    }

    #[test]
    fn literal_generalization_fallback() {
        let mut b = GraphBuilder::new();
        for i in 0..5 {
            b.add_str("s", "p", &format!("ab{i}"), true);
        }
        b.add_str("s", "p", "ab", true);
        let g = b.finish();
        let map = IdMap::build(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tight = GenConfig { match_cap: (1, 2), ..cfg() };
        // every prefix of "ab" matches 6 labels
        assert_eq!(generalize_keyword("ab", true, &map, &tight, &mut rng), "ab");
        assert_eq!(generalize_keyword("ab3", true, &map, &tight, &mut rng), "ab3");
        let low = GenConfig { match_cap: (2, 2), ..cfg() };
        // nothing matches exactly 2: shortest prefix with at most 2 matches
        assert_eq!(generalize_keyword("ab3", true, &map, &low, &mut rng), "ab3");
    }

    #[test]
    fn generated_templates_are_valid_and_deterministic() {
        let g = g1();
        let map = IdMap::build(&g);
        for size in 1..=5 {
            for seed in 0..10 {
                let c = GenConfig { size, seed, ..cfg() };
                let a = generate_query(&g, &map, &c).unwrap();
                let b = generate_query(&g, &map, &c).unwrap();
                assert_eq!(a.template, b.template);
                assert_eq!(a.template.node_count(), size);
                assert!(a.template.connections().is_empty());
                for (q, n) in a.source.iter().enumerate() {
                    let kw = a.template.nodes()[q].keyword.as_deref().unwrap();
                    assert!(g.label(*n).starts_with(kw));
                }
            }
        }
        assert!(generate_query(&g, &map, &GenConfig { size: 50, ..cfg() }).is_err());
    }

    #[test]
    fn connection_edges_when_requested() {
        let g = g1();
        let map = IdMap::build(&g);
        let c = GenConfig { size: 4, connection_edge_prob: 1.0, ..cfg() };
        let q = generate_query(&g, &map, &c).unwrap();
        assert!(q.template.edges().iter().all(|e| e.from == e.to));
        assert!(q.template.connections().iter().all(|e| (2..=5).contains(&e.max_distance)));
    }

    #[test]
    fn disconnected_small_components_fail() {
        let mut b = GraphBuilder::new();
        for i in 0..10 {
            b.add_str(&format!("a{i}"), "p", &format!("b{i}"), false);
        }
        let g = b.finish();
        let map = IdMap::build(&g);
        assert!(generate_query(&g, &map, &GenConfig { size: 3, ..cfg() }).is_err());
        assert!(generate_query(&g, &map, &GenConfig { size: 2, ..cfg() }).is_ok());
    }
}
