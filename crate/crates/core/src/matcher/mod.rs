//! Template matching.
//!
//! A query runs in two phases. [`Engine::prepare`] splits the template into
//! components, resolves keywords to candidate sets and decomposes each
//! component into D-trees; the planner inspects that to decide whether
//! pruning pays off. [`Engine::execute`] then optionally filters candidates
//! with the neighborhood check, matches every component, and joins the
//! components along connection edges.

mod connect;
mod dtree;
mod profile;

use std::collections::HashMap;
use std::ops::Range;
use std::time::{Duration, Instant};

use serde::{Serialize, Serializer};

use crate::graph::{NodeId, RdfGraph};
use crate::idmap::{IdInterval, IdMap};
use crate::ni::NiIndex;
use crate::query::{Components, ConnectionClass, QueryTemplate};
use crate::{Error, Result};

pub use connect::{enumerate_shortest_paths, order_connection_edges, Connectivity, PathSet, DEFAULT_PATH_LIMIT};
pub use dtree::{decompose_dtrees, join_candidates, join_candidates_capped, join_order, CandidateSet, DTree, DTreeEdge};
pub use profile::{build_keyword_profile, neighborhood_check, DistanceCount, KeywordProfile};

/// Graph plus the indexes a query needs.
#[derive(Clone, Copy)]
pub struct Engine<'a> {
    pub graph: &'a RdfGraph,
    pub idmap: &'a IdMap,
    pub index: &'a NiIndex,
}

/// Knobs of [`Engine::execute`] that do not affect the result set.
#[derive(Debug, Clone, Copy)]
pub struct ExecOptions {
    pub instantiate_paths: bool,
    pub path_limit: usize,
    /// Process intra-component connection edges before inter-component ones.
    pub invert_connection_order: bool,
    /// Abort with [`Error::RowLimit`] when any intermediate candidate set
    /// would exceed this many rows.
    pub max_rows: Option<usize>,
}

impl Default for ExecOptions {
    fn default() -> Self {
        Self {
            instantiate_paths: false,
            path_limit: DEFAULT_PATH_LIMIT,
            invert_connection_order: false,
            max_rows: None,
        }
    }
}

/// A template with keywords resolved and components decomposed.
#[derive(Debug, Clone)]
pub struct Prepared<'t> {
    pub template: &'t QueryTemplate,
    pub components: Components,
    /// Unary candidates per query node, sorted by node id.
    pub candidates: Vec<Vec<NodeId>>,
    /// Node-keyword intervals.
    pub intervals: HashMap<String, IdInterval>,
    /// D-trees per component (empty for single-node components).
    pub decompositions: Vec<Vec<DTree>>,
}

impl Prepared<'_> {
    /// Some query node has no candidate, so the template cannot match.
    pub fn is_unsatisfiable(&self) -> bool {
        self.candidates.iter().any(Vec::is_empty)
    }

    pub fn candidate_sizes(&self) -> Vec<usize> {
        self.candidates.iter().map(Vec::len).collect()
    }
}

/// One match: a graph node per query node, in template node order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MatchResult {
    pub binding: Vec<NodeId>,
    /// Per connection edge, its shortest paths (only when requested).
    pub paths: Option<Vec<PathSet>>,
}

fn secs<S: Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

/// Execution counters reported with every query.
#[derive(Debug, Clone, Default, Serialize)]
pub struct MatchStats {
    pub pruned: bool,
    pub hops: u8,
    pub candidates_before: Vec<usize>,
    pub candidates_after: Vec<usize>,
    pub dtree_iterations: Vec<usize>,
    pub dtree_rows: Vec<usize>,
    pub joins: usize,
    pub join_rows: usize,
    pub connectivity_checks: usize,
    pub disconnected_join_order: bool,
    pub results: usize,
    #[serde(serialize_with = "secs")]
    pub prune_time: Duration,
    #[serde(serialize_with = "secs")]
    pub connectivity_time: Duration,
    #[serde(serialize_with = "secs")]
    pub total_time: Duration,
}

#[derive(Debug, Clone, Default)]
pub struct MatchOutput {
    pub results: Vec<MatchResult>,
    pub stats: MatchStats,
}

impl<'a> Engine<'a> {
    pub fn new(graph: &'a RdfGraph, idmap: &'a IdMap, index: &'a NiIndex) -> Self {
        Self { graph, idmap, index }
    }

    /// Unary candidates: the nodes whose label starts with the query node's
    /// keyword (all nodes for a wildcard). Query nodes with an outgoing
    /// predicate edge only keep resources, since literals have no outgoing
    /// edges.
    pub fn candidate_sets(&self, template: &QueryTemplate) -> Vec<Vec<NodeId>> {
        let mut is_subject = vec![false; template.node_count()];
        for e in template.edges() {
            is_subject[e.from] = true;
        }
        template
            .nodes()
            .iter()
            .enumerate()
            .map(|(q, node)| {
                let mut nodes: Vec<NodeId> = match &node.keyword {
                    Some(k) => self
                        .idmap
                        .lookup_prefix(k)
                        .ids()
                        .map(|id| self.idmap.node_of(id))
                        .collect(),
                    None => self.graph.nodes().collect(),
                };
                if is_subject[q] {
                    nodes.retain(|n| !self.graph.is_literal(*n));
                }
                nodes.sort_unstable();
                nodes
            })
            .collect()
    }

    pub fn prepare<'t>(&self, template: &'t QueryTemplate) -> Prepared<'t> {
        let components = template.split_components();
        let candidates = self.candidate_sets(template);
        let intervals = template
            .nodes()
            .iter()
            .filter_map(|n| n.keyword.as_ref())
            .map(|k| (k.clone(), self.idmap.lookup_prefix(k)))
            .collect();
        let sizes: Vec<usize> = candidates.iter().map(Vec::len).collect();
        let decompositions = components
            .components
            .iter()
            .map(|c| decompose_dtrees(template, c, &sizes))
            .collect();
        Prepared {
            template,
            components,
            candidates,
            intervals,
            decompositions,
        }
    }

    /// Evaluates a prepared template. With `use_pruning`, every query node's
    /// candidates are first filtered by the neighborhood check over `hops`
    /// hops (capped per node by the indexed depth).
    pub fn execute(
        &self,
        prepared: &Prepared<'_>,
        use_pruning: bool,
        hops: u8,
        opts: &ExecOptions,
    ) -> Result<MatchOutput> {
        let start = Instant::now();
        let template = prepared.template;
        let mut stats = MatchStats {
            pruned: use_pruning,
            hops,
            candidates_before: prepared.candidate_sizes(),
            ..Default::default()
        };
        if prepared.is_unsatisfiable() {
            stats.candidates_after = stats.candidates_before.clone();
            stats.total_time = start.elapsed();
            return Ok(MatchOutput {
                results: Vec::new(),
                stats,
            });
        }

        let mut candidates = prepared.candidates.clone();
        if use_pruning {
            let t = Instant::now();
            for (q, cands) in candidates.iter_mut().enumerate() {
                let profile = build_keyword_profile(template, q, hops);
                if profile.is_empty() {
                    continue;
                }
                let resolved = profile.resolve(&prepared.intervals);
                cands.retain(|n| profile::check_resolved(*n, &resolved, self.index));
            }
            stats.prune_time = t.elapsed();
        }
        stats.candidates_after = candidates.iter().map(Vec::len).collect();
        if candidates.iter().any(Vec::is_empty) {
            stats.total_time = start.elapsed();
            return Ok(MatchOutput {
                results: Vec::new(),
                stats,
            });
        }

        // Pruning changes candidate sizes, which changes the preferred roots.
        let decompositions: Vec<Vec<DTree>> = if use_pruning {
            prepared
                .components
                .components
                .iter()
                .map(|c| decompose_dtrees(template, c, &stats.candidates_after))
                .collect()
        } else {
            prepared.decompositions.clone()
        };

        let member: Vec<Vec<bool>> = candidates
            .iter()
            .map(|c| {
                let mut m = vec![false; self.graph.node_count()];
                for n in c {
                    m[n.index()] = true;
                }
                m
            })
            .collect();
        let predicate_ranges: Vec<Range<u32>> = template
            .edges()
            .iter()
            .map(|e| match &e.predicate {
                Some(p) => self.graph.predicate_prefix(p),
                None => 0..self.graph.predicates().len() as u32,
            })
            .collect();
        let ctx = dtree::GenContext {
            graph: self.graph,
            candidates: &candidates,
            member: &member,
            predicate_ranges: &predicate_ranges,
            row_limit: opts.max_rows.unwrap_or(usize::MAX),
        };

        let mut component_sets = Vec::with_capacity(decompositions.len());
        for (ci, trees) in decompositions.iter().enumerate() {
            let set = if trees.is_empty() {
                let q = prepared.components.components[ci].nodes[0];
                CandidateSet::unary(q, &candidates[q])
            } else {
                self.match_component(&ctx, trees, &mut stats)?
            };
            if set.is_empty() {
                stats.total_time = start.elapsed();
                return Ok(MatchOutput {
                    results: Vec::new(),
                    stats,
                });
            }
            component_sets.push(set);
        }

        let mut conn = Connectivity::new(self.index, self.idmap);
        let joined = self.process_connections(prepared, component_sets, &mut conn, opts, &mut stats)?;
        stats.connectivity_checks = conn.checks;
        stats.connectivity_time = conn.elapsed;

        let mut results: Vec<MatchResult> = match joined {
            Some(set) => {
                let mut order = vec![0usize; template.node_count()];
                for (pos, q) in set.schema().iter().enumerate() {
                    order[*q] = pos;
                }
                set.rows()
                    .map(|row| MatchResult {
                        binding: order.iter().map(|pos| row[*pos]).collect(),
                        paths: None,
                    })
                    .collect()
            }
            None => Vec::new(),
        };
        if opts.instantiate_paths {
            for r in &mut results {
                r.paths = Some(
                    template
                        .connections()
                        .iter()
                        .map(|c| self.instantiate(r.binding[c.from], r.binding[c.to], c.max_distance, c.directed, opts.path_limit))
                        .collect(),
                );
            }
        }
        self.sort_canonical(template, &mut results);
        results.dedup();
        stats.results = results.len();
        stats.total_time = start.elapsed();
        Ok(MatchOutput { results, stats })
    }

    fn match_component(
        &self,
        ctx: &dtree::GenContext<'_>,
        trees: &[DTree],
        stats: &mut MatchStats,
    ) -> Result<CandidateSet> {
        let mut sets = Vec::with_capacity(trees.len());
        for tree in trees {
            let (set, iterations) = dtree::generate_dtree_candidates(ctx, tree)?;
            stats.dtree_iterations.push(iterations);
            stats.dtree_rows.push(set.len());
            if set.is_empty() {
                return Ok(set);
            }
            sets.push(set);
        }
        let sizes: Vec<usize> = sets.iter().map(CandidateSet::len).collect();
        let schemas: Vec<Vec<usize>> = sets.iter().map(|s| s.schema().to_vec()).collect();
        let roots: Vec<usize> = trees.iter().map(|t| t.root).collect();
        let (order, disconnected) = join_order(&sizes, &schemas, &roots);
        stats.disconnected_join_order |= disconnected;

        let mut acc = sets[order[0]].clone();
        for &i in &order[1..] {
            acc = join_candidates_capped(&acc, &sets[i], ctx.row_limit)?;
            stats.joins += 1;
            stats.join_rows += acc.len();
            if acc.is_empty() {
                break;
            }
        }
        Ok(acc)
    }

    /// Joins component results along connection edges. Returns `None` when
    /// nothing survives.
    fn process_connections(
        &self,
        prepared: &Prepared<'_>,
        component_sets: Vec<CandidateSet>,
        conn: &mut Connectivity<'_>,
        opts: &ExecOptions,
        stats: &mut MatchStats,
    ) -> Result<Option<CandidateSet>> {
        let template = prepared.template;
        let sizes: Vec<usize> = component_sets.iter().map(CandidateSet::len).collect();
        let order = order_connection_edges(
            &prepared.components.connection_class,
            &sizes,
            opts.invert_connection_order,
        );
        // group id per component; groups merge as connections are processed
        let mut group_of: Vec<usize> = (0..component_sets.len()).collect();
        let mut groups: Vec<Option<CandidateSet>> = component_sets.into_iter().map(Some).collect();

        for ci in order {
            let c = &template.connections()[ci];
            let ga = group_of[prepared.components.component_of[c.from]];
            let gb = group_of[prepared.components.component_of[c.to]];
            if ga == gb {
                let set = groups[ga].as_mut().expect("live group");
                let (pa, pb) = (set.position(c.from).unwrap(), set.position(c.to).unwrap());
                set.retain(|row| connected(conn, row[pa], row[pb], c.max_distance, c.directed));
                if set.is_empty() {
                    return Ok(None);
                }
            } else {
                let left = groups[ga].take().expect("live group");
                let right = groups[gb].take().expect("live group");
                let limit = opts.max_rows.unwrap_or(usize::MAX);
                let merged = join_connected(conn, &left, &right, c.from, c.to, c.max_distance, c.directed, limit)?;
                stats.joins += 1;
                stats.join_rows += merged.len();
                if merged.is_empty() {
                    return Ok(None);
                }
                for g in group_of.iter_mut() {
                    if *g == gb {
                        *g = ga;
                    }
                }
                groups[ga] = Some(merged);
            }
        }
        let live: Vec<CandidateSet> = groups.into_iter().flatten().collect();
        debug_assert_eq!(live.len(), 1, "template is connected");
        Ok(live.into_iter().next())
    }

    fn instantiate(&self, a: NodeId, b: NodeId, d_c: u32, directed: bool, limit: usize) -> PathSet {
        let forward = enumerate_shortest_paths(self.graph, a, b, d_c, limit);
        if directed {
            return forward;
        }
        let backward = enumerate_shortest_paths(self.graph, b, a, d_c, limit);
        let len = |s: &PathSet| s.paths.first().map(Vec::len);
        match (len(&forward), len(&backward)) {
            (Some(f), Some(r)) if f == r => {
                let mut merged = forward;
                merged.truncated |= backward.truncated;
                for p in backward.paths {
                    if merged.paths.len() >= limit {
                        merged.truncated = true;
                        break;
                    }
                    merged.paths.push(p);
                }
                merged
            }
            (Some(f), Some(r)) if r < f => backward,
            (Some(_), _) => forward,
            _ => backward,
        }
    }

    /// Sorts results by bound labels, taking query nodes in name order.
    pub fn sort_canonical(&self, template: &QueryTemplate, results: &mut [MatchResult]) {
        let mut by_name: Vec<usize> = (0..template.node_count()).collect();
        by_name.sort_by(|a, b| template.nodes()[*a].name.cmp(&template.nodes()[*b].name));
        results.sort_by(|x, y| {
            for &q in &by_name {
                let o = self
                    .graph
                    .label(x.binding[q])
                    .as_bytes()
                    .cmp(self.graph.label(y.binding[q]).as_bytes());
                if o.is_ne() {
                    return o;
                }
            }
            x.paths.cmp(&y.paths)
        });
    }
}

fn connected(conn: &mut Connectivity<'_>, a: NodeId, b: NodeId, d_c: u32, directed: bool) -> bool {
    if directed {
        conn.check(a, b, d_c)
    } else {
        conn.check_either(a, b, d_c)
    }
}

/// Joins two disjoint groups through connection edge `from ~> to`: checks
/// every distinct pair of endpoint bindings once, then pairs up rows.
#[allow(clippy::too_many_arguments)]
fn join_connected(
    conn: &mut Connectivity<'_>,
    left: &CandidateSet,
    right: &CandidateSet,
    from: usize,
    to: usize,
    d_c: u32,
    directed: bool,
    limit: usize,
) -> Result<CandidateSet> {
    // orient so that `from` lives in `left`
    let (l, r, lq, rq, flipped) = if left.position(from).is_some() {
        (left, right, from, to, false)
    } else {
        (left, right, to, from, true)
    };
    let (lp, rp) = (l.position(lq).unwrap(), r.position(rq).unwrap());
    let mut right_by_node: HashMap<NodeId, Vec<usize>> = HashMap::new();
    for (i, row) in r.rows().enumerate() {
        right_by_node.entry(row[rp]).or_default().push(i);
    }
    let mut right_nodes: Vec<NodeId> = right_by_node.keys().copied().collect();
    right_nodes.sort_unstable();

    let mut schema = l.schema().to_vec();
    schema.extend_from_slice(r.schema());
    let mut out = CandidateSet::new(schema);
    let mut reach: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
    let mut merged = Vec::with_capacity(out.width());
    for lrow in l.rows() {
        let a = lrow[lp];
        let targets = reach.entry(a).or_insert_with(|| {
            right_nodes
                .iter()
                .copied()
                .filter(|&b| {
                    let (s, t) = if flipped { (b, a) } else { (a, b) };
                    connected(conn, s, t, d_c, directed)
                })
                .collect()
        });
        for b in targets.iter() {
            'rows: for &ri in &right_by_node[b] {
                let rrow = r.row(ri);
                merged.clear();
                merged.extend_from_slice(lrow);
                for &v in rrow {
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
    }
    Ok(out)
}

impl MatchResult {
    /// JSON object with `bindings` (query node name to label) and, when
    /// instantiated, `paths` (connection index to label sequences).
    pub fn to_json(&self, graph: &RdfGraph, template: &QueryTemplate) -> serde_json::Value {
        let mut bindings = serde_json::Map::new();
        for (q, n) in self.binding.iter().enumerate() {
            bindings.insert(template.nodes()[q].name.clone(), graph.label(*n).into());
        }
        let mut obj = serde_json::Map::new();
        obj.insert("bindings".into(), bindings.into());
        if let Some(paths) = &self.paths {
            let mut map = serde_json::Map::new();
            for (ci, set) in paths.iter().enumerate() {
                let c = &template.connections()[ci];
                let key = format!("{}->{}", template.nodes()[c.from].name, template.nodes()[c.to].name);
                let seqs: Vec<Vec<&str>> = set
                    .paths
                    .iter()
                    .map(|p| p.iter().map(|n| graph.label(*n)).collect())
                    .collect();
                map.insert(key, serde_json::json!({"paths": seqs, "truncated": set.truncated}));
            }
            obj.insert("paths".into(), map.into());
        }
        obj.into()
    }
}

/// Connection-class labels exposed for reporting.
pub fn connection_class_name(c: &ConnectionClass) -> &'static str {
    match c {
        ConnectionClass::Intra(_) => "intra",
        ConnectionClass::Inter(_, _) => "inter",
    }
}
