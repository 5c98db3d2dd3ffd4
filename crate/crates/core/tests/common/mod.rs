//! Independent reference implementations and random instance generators
//! shared by the integration tests.

#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rdfh_core::graph::GraphBuilder;
use rdfh_core::query::{ConnectionEdge, PredicateEdge, QueryNode};
use rdfh_core::workload::{generate_query, GenConfig};
use rdfh_core::{IdMap, NodeId, QueryTemplate, RdfGraph};

pub const UNREACHABLE: u8 = u8::MAX;
const STEP_BUDGET: usize = 3_000_000;

/// Directed shortest distances between all node pairs, capped at 254.
pub struct Distances {
    n: usize,
    d: Vec<u8>,
}

impl Distances {
    pub fn new(g: &RdfGraph) -> Self {
        let n = g.node_count();
        let mut d = vec![UNREACHABLE; n * n];
        for s in 0..n {
            let row = &mut d[s * n..(s + 1) * n];
            row[s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &(_, v) in g.out_edges(NodeId(u as u32)) {
                    let v = v.index();
                    if row[v] == UNREACHABLE && row[u] < UNREACHABLE - 1 {
                        row[v] = row[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
        }
        Self { n, d }
    }

    pub fn get(&self, a: NodeId, b: NodeId) -> u8 {
        self.d[a.index() * self.n + b.index()]
    }

    pub fn within(&self, a: NodeId, b: NodeId, bound: u32) -> bool {
        let d = self.get(a, b);
        d != UNREACHABLE && d as u32 <= bound
    }
}

/// All matches of `t` in `g`, by backtracking over injective assignments.
/// Gives up (returns `None`) past `cap` matches or `STEP_BUDGET` partial
/// assignments.
pub fn brute_force(g: &RdfGraph, t: &QueryTemplate, dist: &Distances, cap: usize) -> Option<BTreeSet<Vec<NodeId>>> {
    let k = t.node_count();
    let allowed: Vec<Vec<NodeId>> = t
        .nodes()
        .iter()
        .map(|q| {
            g.nodes()
                .filter(|n| q.keyword.as_ref().is_none_or(|kw| g.label(*n).starts_with(kw.as_str())))
                .collect()
        })
        .collect();
    // visit query nodes so that each one (after the first of its component)
    // touches an earlier one, which keeps partial assignments constrained
    let mut order = Vec::with_capacity(k);
    let mut placed = vec![false; k];
    while order.len() < k {
        let next = (0..k)
            .filter(|q| !placed[*q])
            .max_by_key(|&q| {
                let links = t.edges().iter().filter(|e| (e.from == q && placed[e.to]) || (e.to == q && placed[e.from])).count()
                    + t.connections().iter().filter(|c| (c.from == q && placed[c.to]) || (c.to == q && placed[c.from])).count();
                (links, usize::MAX - allowed[q].len(), usize::MAX - q)
            })
            .unwrap();
        placed[next] = true;
        order.push(next);
    }

    let mut out = BTreeSet::new();
    let mut binding = vec![None; k];
    let mut steps = 0;
    if search(g, t, dist, &allowed, &order, 0, &mut binding, &mut out, cap, &mut steps) {
        Some(out)
    } else {
        None
    }
}

fn consistent(g: &RdfGraph, t: &QueryTemplate, dist: &Distances, binding: &[Option<NodeId>], q: usize) -> bool {
    for e in t.edges() {
        if e.from != q && e.to != q {
            continue;
        }
        let (Some(a), Some(b)) = (binding[e.from], binding[e.to]) else {
            continue;
        };
        let ok = g.out_edges(a).iter().any(|(p, o)| {
            *o == b && e.predicate.as_ref().is_none_or(|kw| g.predicate_label(*p).starts_with(kw.as_str()))
        });
        if !ok {
            return false;
        }
    }
    for c in t.connections() {
        if c.from != q && c.to != q {
            continue;
        }
        let (Some(a), Some(b)) = (binding[c.from], binding[c.to]) else {
            continue;
        };
        let ok = dist.within(a, b, c.max_distance) || (!c.directed && dist.within(b, a, c.max_distance));
        if !ok {
            return false;
        }
    }
    true
}

#[allow(clippy::too_many_arguments)]
fn search(
    g: &RdfGraph,
    t: &QueryTemplate,
    dist: &Distances,
    allowed: &[Vec<NodeId>],
    order: &[usize],
    depth: usize,
    binding: &mut Vec<Option<NodeId>>,
    out: &mut BTreeSet<Vec<NodeId>>,
    cap: usize,
    steps: &mut usize,
) -> bool {
    *steps += 1;
    if *steps > STEP_BUDGET {
        return false;
    }
    if depth == order.len() {
        out.insert(binding.iter().map(|b| b.unwrap()).collect());
        return out.len() <= cap;
    }
    let q = order[depth];
    for &n in &allowed[q] {
        if binding.contains(&Some(n)) {
            continue;
        }
        binding[q] = Some(n);
        if consistent(g, t, dist, binding, q) && !search(g, t, dist, allowed, order, depth + 1, binding, out, cap, steps) {
            binding[q] = None;
            return false;
        }
        binding[q] = None;
    }
    true
}

const PREDICATES: [&str; 6] = ["p", "p1", "p2", "q", "qa", "r"];

fn letters(rng: &mut ChaCha8Rng, alphabet: &[u8], len: usize) -> String {
    (0..len).map(|_| *alphabet.choose(rng).unwrap() as char).collect()
}

/// Random graph whose labels share many prefixes: resources `x:<abc…><i>`,
/// literals `<abc…> <i>`.
pub fn random_graph(rng: &mut ChaCha8Rng, nodes: usize, edges: usize) -> RdfGraph {
    let nodes = nodes.max(2);
    let literal_share = rng.gen_range(0.0..0.4);
    let mut labels = Vec::with_capacity(nodes);
    for i in 0..nodes {
        let stem_len = rng.gen_range(1..=3);
        let stem = letters(rng, b"abc", stem_len);
        let literal = i > 0 && rng.gen_bool(literal_share);
        labels.push((if literal { format!("{stem} {i}") } else { format!("x:{stem}{i}") }, literal));
    }
    let resources: Vec<usize> = (0..nodes).filter(|i| !labels[*i].1).collect();
    let preds = rng.gen_range(1..=PREDICATES.len());
    let mut b = GraphBuilder::new();
    for (label, literal) in &labels {
        // make sure every node exists even without edges
        if !literal {
            b.node(rdfh_core::graph::Term::Iri(label.clone()));
        } else {
            b.node(rdfh_core::graph::Term::Literal(label.clone()));
        }
    }
    for _ in 0..edges {
        let s = *resources.choose(rng).unwrap();
        let o = if rng.gen_bool(0.03) { s } else { rng.gen_range(0..nodes) };
        let p = PREDICATES[rng.gen_range(0..preds)];
        b.add_str(&labels[s].0, p, &labels[o].0, labels[o].1);
    }
    b.finish()
}

/// A random prefix (at least one character) of some node label.
fn random_keyword(rng: &mut ChaCha8Rng, g: &RdfGraph) -> String {
    let label = g.label(NodeId(rng.gen_range(0..g.node_count() as u32)));
    let chars: Vec<char> = label.chars().collect();
    let len = rng.gen_range(1..=chars.len());
    chars[..len].iter().collect()
}

/// Random template mixing grown-from-graph shapes (which have at least one
/// match) with arbitrary ones, wildcards, predicate prefixes and connection
/// edges of bound up to 6.
pub fn random_template(rng: &mut ChaCha8Rng, g: &RdfGraph, idmap: &IdMap, max_size: usize) -> QueryTemplate {
    let size = rng.gen_range(1..=max_size);
    if rng.gen_bool(0.6) {
        let cfg = GenConfig {
            size,
            seed: rng.gen(),
            match_cap: (1, rng.gen_range(1..=50)),
            connection_edge_prob: rng.gen_range(0.0..0.5),
        };
        if let Ok(q) = generate_query(g, idmap, &cfg) {
            return mutate(rng, g, q.template);
        }
    }
    let nodes: Vec<QueryNode> = (0..size)
        .map(|i| QueryNode {
            name: format!("v{i}"),
            keyword: if rng.gen_bool(0.15) { None } else { Some(random_keyword(rng, g)) },
        })
        .collect();
    let mut pedges = Vec::new();
    let mut cedges = Vec::new();
    // spanning tree, then a few extra edges
    for i in 1..size {
        let j = rng.gen_range(0..i);
        let (a, b) = if rng.gen_bool(0.5) { (i, j) } else { (j, i) };
        if rng.gen_bool(0.25) {
            cedges.push(ConnectionEdge { from: a, to: b, max_distance: rng.gen_range(1..=6), directed: rng.gen_bool(0.7) });
        } else {
            pedges.push(PredicateEdge { from: a, predicate: random_predicate(rng), to: b });
        }
    }
    for _ in 0..rng.gen_range(0..=2) {
        if size < 2 {
            break;
        }
        let (a, b) = (rng.gen_range(0..size), rng.gen_range(0..size));
        if a != b {
            pedges.push(PredicateEdge { from: a, predicate: random_predicate(rng), to: b });
        }
    }
    QueryTemplate::new(nodes, pedges, cedges).expect("connected by construction")
}

fn random_predicate(rng: &mut ChaCha8Rng) -> Option<String> {
    match rng.gen_range(0..10) {
        0 => None,
        1 => Some(PREDICATES[rng.gen_range(0..PREDICATES.len())][..1].to_owned()),
        _ => Some(PREDICATES[rng.gen_range(0..PREDICATES.len())].to_owned()),
    }
}

/// Loosens or perturbs a generated template.
fn mutate(rng: &mut ChaCha8Rng, g: &RdfGraph, t: QueryTemplate) -> QueryTemplate {
    let mut nodes = t.nodes().to_vec();
    let mut edges = t.edges().to_vec();
    let mut conns = t.connections().to_vec();
    for n in &mut nodes {
        match rng.gen_range(0..10) {
            0 => n.keyword = None,
            1 => n.keyword = Some(random_keyword(rng, g)),
            2 => {
                if let Some(kw) = &n.keyword {
                    let cut = kw.char_indices().nth(1).map_or(kw.len(), |(i, _)| i);
                    n.keyword = Some(kw[..cut].to_owned());
                }
            }
            _ => {}
        }
    }
    for e in &mut edges {
        if rng.gen_bool(0.1) {
            e.predicate = random_predicate(rng);
        }
    }
    for c in &mut conns {
        c.max_distance = rng.gen_range(1..=6);
        c.directed = rng.gen_bool(0.7);
    }
    QueryTemplate::new(nodes, edges, conns).expect("mutation keeps structure")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
