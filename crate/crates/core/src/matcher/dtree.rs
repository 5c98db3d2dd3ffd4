//! Component matching: D-tree decomposition, per-D-tree candidate
//! generation, join ordering and joins.

use std::collections::HashMap;
use std::ops::Range;

use serde::Serialize;

use crate::graph::{NodeId, RdfGraph};
use crate::query::{QueryComponent, QueryTemplate};
use crate::{Error, Result};

/// One template edge hanging off a D-tree root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DTreeEdge {
    /// Index into [`QueryTemplate::edges`].
    pub edge: usize,
    pub child: usize,
    /// `true` when the edge points from the root to the child.
    pub outgoing: bool,
}

/// Height-one directed tree: a root query node and its incident edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DTree {
    pub root: usize,
    pub edges: Vec<DTreeEdge>,
}

impl DTree {
    /// Root first, then distinct children in edge order.
    pub fn schema(&self) -> Vec<usize> {
        let mut schema = vec![self.root];
        for e in &self.edges {
            if !schema.contains(&e.child) {
                schema.push(e.child);
            }
        }
        schema
    }
}

/// Bindings of a set of query nodes; rows are stored flat, `schema.len()`
/// node ids per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    schema: Vec<usize>,
    data: Vec<NodeId>,
}

impl CandidateSet {
    pub fn new(schema: Vec<usize>) -> Self {
        Self {
            schema,
            data: Vec::new(),
        }
    }

    /// Single-column set.
    pub fn unary(q: usize, nodes: &[NodeId]) -> Self {
        Self {
            schema: vec![q],
            data: nodes.to_vec(),
        }
    }

    pub fn schema(&self) -> &[usize] {
        &self.schema
    }

    pub fn width(&self) -> usize {
        self.schema.len()
    }

    pub fn len(&self) -> usize {
        if self.schema.is_empty() {
            0
        } else {
            self.data.len() / self.schema.len()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[NodeId] {
        let w = self.width();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[NodeId]> {
        self.data.chunks(self.width().max(1))
    }

    pub fn push(&mut self, row: &[NodeId]) {
        debug_assert_eq!(row.len(), self.width());
        self.data.extend_from_slice(row);
    }

    pub fn position(&self, q: usize) -> Option<usize> {
        self.schema.iter().position(|s| *s == q)
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&[NodeId]) -> bool) {
        let w = self.width();
        let mut out = Vec::with_capacity(self.data.len());
        for row in self.data.chunks(w) {
            if keep(row) {
                out.extend_from_slice(row);
            }
        }
        self.data = out;
    }
}

fn degree_in(template: &QueryTemplate, component: &QueryComponent, q: usize) -> usize {
    component
        .edges
        .iter()
        .filter(|e| {
            let e = &template.edges()[**e];
            e.from == q || e.to == q
        })
        .count()
}

/// Greedy decomposition of a component into D-trees.
///
/// Repeatedly takes the remaining edge with the largest `S(a) + S(b)`, where
/// `S(q) = deg(q) / |C_q|`, and roots D-trees at both endpoints (higher `S`
/// first) holding all of their remaining incident edges. Ties go to the lower
/// edge index and the lower query node index.
pub fn decompose_dtrees(
    template: &QueryTemplate,
    component: &QueryComponent,
    candidate_sizes: &[usize],
) -> Vec<DTree> {
    let selectivity = |q: usize| {
        let deg = degree_in(template, component, q) as f64;
        match candidate_sizes[q] {
            0 => f64::INFINITY,
            c => deg / c as f64,
        }
    };
    let mut remaining: Vec<usize> = component.edges.clone();
    let mut trees = Vec::new();
    while !remaining.is_empty() {
        let mut best = remaining[0];
        let mut best_score = f64::NEG_INFINITY;
        for &ei in &remaining {
            let e = &template.edges()[ei];
            let score = selectivity(e.from) + selectivity(e.to);
            if score > best_score {
                best_score = score;
                best = ei;
            }
        }
        let e = &template.edges()[best];
        let (sa, sb) = (selectivity(e.from), selectivity(e.to));
        let first = if sa > sb || (sa == sb && e.from <= e.to) {
            e.from
        } else {
            e.to
        };
        let second = if first == e.from { e.to } else { e.from };
        for root in [first, second] {
            let mut edges = Vec::new();
            remaining.retain(|&ei| {
                let e = &template.edges()[ei];
                if e.from == root {
                    edges.push(DTreeEdge {
                        edge: ei,
                        child: e.to,
                        outgoing: true,
                    });
                    false
                } else if e.to == root {
                    edges.push(DTreeEdge {
                        edge: ei,
                        child: e.from,
                        outgoing: false,
                    });
                    false
                } else {
                    true
                }
            });
            if !edges.is_empty() {
                trees.push(DTree { root, edges });
            }
            if first == second {
                break;
            }
        }
    }
    trees
}

/// Inputs for candidate generation that are shared across D-trees.
pub(crate) struct GenContext<'a> {
    pub graph: &'a RdfGraph,
    /// Candidates per query node, sorted.
    pub candidates: &'a [Vec<NodeId>],
    /// Membership bitmaps parallel to `candidates`.
    pub member: &'a [Vec<bool>],
    /// Predicate id range per template edge.
    pub predicate_ranges: &'a [Range<u32>],
    pub row_limit: usize,
}

/// Generates all bindings of a D-tree. Returns the candidate set and the
/// number of root candidates iterated.
pub(crate) fn generate_dtree_candidates(ctx: &GenContext<'_>, tree: &DTree) -> Result<(CandidateSet, usize)> {
    let schema = tree.schema();
    let children: Vec<usize> = schema[1..].to_vec();
    let self_loops: Vec<&DTreeEdge> = tree.edges.iter().filter(|e| e.child == tree.root).collect();
    let mut out = CandidateSet::new(schema);
    let mut iterations = 0;
    let mut options: Vec<Vec<NodeId>> = vec![Vec::new(); children.len()];
    let mut row = Vec::with_capacity(children.len() + 1);

    'roots: for &n in &ctx.candidates[tree.root] {
        iterations += 1;
        for e in &self_loops {
            let range = &ctx.predicate_ranges[e.edge];
            if !ctx
                .graph
                .out_edges(n)
                .iter()
                .any(|(p, o)| *o == n && range.contains(&p.0))
            {
                continue 'roots;
            }
        }
        for (slot, &child) in children.iter().enumerate() {
            let opts = &mut options[slot];
            opts.clear();
            let mut first = true;
            for e in tree.edges.iter().filter(|e| e.child == child) {
                let range = &ctx.predicate_ranges[e.edge];
                let adj = if e.outgoing {
                    ctx.graph.out_edges(n)
                } else {
                    ctx.graph.in_edges(n)
                };
                let mut found: Vec<NodeId> = adj
                    .iter()
                    .filter(|(p, m)| range.contains(&p.0) && ctx.member[child][m.index()] && *m != n)
                    .map(|(_, m)| *m)
                    .collect();
                found.sort_unstable();
                found.dedup();
                if first {
                    *opts = found;
                    first = false;
                } else {
                    opts.retain(|m| found.binary_search(m).is_ok());
                }
                if opts.is_empty() {
                    continue 'roots;
                }
            }
        }
        row.clear();
        row.push(n);
        if !product(&options, &mut row, &mut out, ctx.row_limit) {
            return Err(Error::RowLimit(ctx.row_limit));
        }
    }
    Ok((out, iterations))
}

/// Appends every injective combination of `options` to `out`. `false` once
/// `out` would grow past `limit` rows.
fn product(options: &[Vec<NodeId>], row: &mut Vec<NodeId>, out: &mut CandidateSet, limit: usize) -> bool {
    let depth = row.len() - 1;
    if depth == options.len() {
        if out.len() >= limit {
            return false;
        }
        out.push(row);
        return true;
    }
    for &m in &options[depth] {
        if row.contains(&m) {
            continue;
        }
        row.push(m);
        let ok = product(options, row, out, limit);
        row.pop();
        if !ok {
            return false;
        }
    }
    true
}

/// Join order over D-trees: start with the smallest candidate set, then keep
/// adding the smallest one that shares a query node with those already
/// chosen. The returned flag is set if a disconnected pick was ever needed.
pub fn join_order(sizes: &[usize], schemas: &[Vec<usize>], roots: &[usize]) -> (Vec<usize>, bool) {
    let n = sizes.len();
    let mut chosen = vec![false; n];
    let mut covered: Vec<usize> = Vec::new();
    let mut order = Vec::with_capacity(n);
    let mut disconnected = false;
    let key = |i: usize| (sizes[i], roots[i], i);
    while order.len() < n {
        let connected = (0..n)
            .filter(|&i| !chosen[i])
            .filter(|&i| order.is_empty() || schemas[i].iter().any(|q| covered.contains(q)))
            .min_by_key(|&i| key(i));
        let pick = match connected {
            Some(i) => i,
            None => {
                disconnected = true;
                (0..n).filter(|&i| !chosen[i]).min_by_key(|&i| key(i)).unwrap()
            }
        };
        chosen[pick] = true;
        covered.extend(schemas[pick].iter().copied());
        order.push(pick);
    }
    (order, disconnected)
}

/// Natural join on the shared query nodes, dropping rows that would bind two
/// query nodes to the same graph node.
pub fn join_candidates(left: &CandidateSet, right: &CandidateSet) -> Result<CandidateSet> {
    join_candidates_capped(left, right, usize::MAX)
}

/// [`join_candidates`] that fails with [`Error::RowLimit`] past `limit` rows.
pub fn join_candidates_capped(left: &CandidateSet, right: &CandidateSet, limit: usize) -> Result<CandidateSet> {
    let shared: Vec<(usize, usize)> = left
        .schema()
        .iter()
        .enumerate()
        .filter_map(|(li, q)| right.position(*q).map(|ri| (li, ri)))
        .collect();
    if shared.is_empty() {
        return Err(Error::InvalidInput(
            "join of candidate sets without shared query nodes".into(),
        ));
    }
    let extra: Vec<usize> = (0..right.width())
        .filter(|ri| !shared.iter().any(|(_, s)| s == ri))
        .collect();
    let mut schema = left.schema().to_vec();
    schema.extend(extra.iter().map(|ri| right.schema()[*ri]));
    let mut out = CandidateSet::new(schema);

    let mut by_key: HashMap<Vec<NodeId>, Vec<usize>> = HashMap::new();
    for (i, row) in right.rows().enumerate() {
        let key = shared.iter().map(|(_, ri)| row[*ri]).collect();
        by_key.entry(key).or_default().push(i);
    }
    let mut key = Vec::with_capacity(shared.len());
    let mut merged = Vec::with_capacity(out.width());
    for lrow in left.rows() {
        key.clear();
        key.extend(shared.iter().map(|(li, _)| lrow[*li]));
        let Some(matches) = by_key.get(&key) else {
            continue;
        };
        'rows: for &ri in matches {
            let rrow = right.row(ri);
            merged.clear();
            merged.extend_from_slice(lrow);
            for &x in &extra {
                let v = rrow[x];
                if merged.contains(&v) {
                    continue 'rows;
                }
                merged.push(v);
            }
            if out.len() >= limit {
                return Err(Error::RowLimit(limit));
            }
            out.push(&merged);
        }
    }
    Ok(out)
}
