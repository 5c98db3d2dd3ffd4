//! Connection edges: index-based connectivity checks, processing order, and
//! shortest-path instantiation.

use std::collections::hash_map::Entry;
use std::collections::{HashMap, VecDeque};
use std::rc::Rc;
use std::time::{Duration, Instant};

use crate::graph::{NodeId, RdfGraph};
use crate::idmap::IdMap;
use crate::ni::NiIndex;
use crate::query::ConnectionClass;

/// Connectivity checker bound to one index. Keeps per-query caches of
/// neighbor sets and check results, and accounts the time spent.
pub struct Connectivity<'a> {
    index: &'a NiIndex,
    idmap: &'a IdMap,
    sets: HashMap<(NodeId, bool, u32), Rc<Vec<u32>>>,
    memo: HashMap<(NodeId, NodeId, u32), bool>,
    pub checks: usize,
    pub elapsed: Duration,
}

impl<'a> Connectivity<'a> {
    pub fn new(index: &'a NiIndex, idmap: &'a IdMap) -> Self {
        Self {
            index,
            idmap,
            sets: HashMap::new(),
            memo: HashMap::new(),
            checks: 0,
            elapsed: Duration::ZERO,
        }
    }

    /// Is there a directed path `from -> to` of length at most `d_c`?
    pub fn check(&mut self, from: NodeId, to: NodeId, d_c: u32) -> bool {
        if from == to {
            return true;
        }
        if let Some(&hit) = self.memo.get(&(from, to, d_c)) {
            return hit;
        }
        let start = Instant::now();
        self.checks += 1;
        let result = self.check_uncached(from, to, d_c);
        self.elapsed += start.elapsed();
        self.memo.insert((from, to, d_c), result);
        result
    }

    /// Either direction, for bidirectional connection edges.
    pub fn check_either(&mut self, a: NodeId, b: NodeId, d_c: u32) -> bool {
        self.check(a, b, d_c) || self.check(b, a, d_c)
    }

    fn check_uncached(&mut self, from: NodeId, to: NodeId, d_c: u32) -> bool {
        let head = d_c.div_ceil(2);
        let tail = d_c - head;
        let psi_from = self.neighbor_set(from, true, head);
        if psi_from.binary_search(&self.idmap.id_of(to)).is_ok() {
            return true;
        }
        if tail == 0 {
            return false;
        }
        let psi_to = self.neighbor_set(to, false, tail);
        if psi_to.binary_search(&self.idmap.id_of(from)).is_ok() {
            return true;
        }
        sorted_intersect(&psi_from, &psi_to)
    }

    /// Sorted label IDs of the nodes within `1..=hops` of `node`.
    fn neighbor_set(&mut self, node: NodeId, forward: bool, hops: u32) -> Rc<Vec<u32>> {
        if let Some(s) = self.sets.get(&(node, forward, hops)) {
            return Rc::clone(s);
        }
        let set = if hops <= self.index.depth(node) as u32 {
            let mut ids: Vec<u32> = self.index.neighbors_within(node, forward, hops as u8).collect();
            ids.sort_unstable();
            ids
        } else {
            expand(self.index, self.idmap, node, forward, hops)
        };
        let set = Rc::new(set);
        self.sets.insert((node, forward, hops), Rc::clone(&set));
        set
    }
}

/// Neighbors within `hops` when that exceeds the depth indexed at `node`.
///
/// Expands in rounds from the frontier, the nodes at exactly the distance
/// covered so far. Every shortest path beyond the frontier passes through
/// it, so advancing by the smallest reach among frontier nodes keeps every
/// distance up to the new boundary exact.
fn expand(index: &NiIndex, idmap: &IdMap, node: NodeId, forward: bool, hops: u32) -> Vec<u32> {
    let mut dist: HashMap<NodeId, u32> = HashMap::new();
    let mut buckets: Vec<Vec<NodeId>> = vec![Vec::new(); hops as usize + 1];
    dist.insert(node, 0);
    let mut frontier = vec![node];
    let mut covered = 0;
    while covered < hops && !frontier.is_empty() {
        let reach = |y: NodeId| (index.depth(y) as u32).min(hops - covered);
        let step = frontier.iter().map(|&y| reach(y)).min().unwrap_or(0);
        if step == 0 {
            debug_assert!(false, "unindexed node on the frontier");
            break;
        }
        for &y in &frontier {
            let r = reach(y) as i8;
            for e in index.entries(y) {
                let s = if forward { e.distance } else { -e.distance };
                if s < 1 || s > r {
                    continue;
                }
                let nd = covered + s as u32;
                for &id in e.neighbor_ids {
                    let z = idmap.node_of(id);
                    if dist.get(&z).is_none_or(|old| nd < *old) {
                        dist.insert(z, nd);
                        buckets[nd as usize].push(z);
                    }
                }
            }
        }
        covered += step;
        let mut next = std::mem::take(&mut buckets[covered as usize]);
        next.retain(|z| dist[z] == covered);
        next.sort_unstable();
        next.dedup();
        frontier = next;
    }
    let mut ids: Vec<u32> = dist
        .into_iter()
        .filter(|(y, _)| *y != node)
        .map(|(y, _)| idmap.id_of(y))
        .collect();
    ids.sort_unstable();
    ids
}

fn sorted_intersect(a: &[u32], b: &[u32]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

/// Order in which connection edges are processed.
///
/// Inter-component edges come first (or last, when `invert` is set); within
/// each class edges are ascending by the product of the candidate-set sizes
/// of the components they touch, ties by declaration order.
pub fn order_connection_edges(
    classes: &[ConnectionClass],
    component_sizes: &[usize],
    invert: bool,
) -> Vec<usize> {
    let mut order: Vec<usize> = (0..classes.len()).collect();
    order.sort_by_key(|&i| match classes[i] {
        ConnectionClass::Inter(a, b) => (
            invert as u8,
            (component_sizes[a] as u128).saturating_mul(component_sizes[b] as u128),
            i,
        ),
        ConnectionClass::Intra(c) => (!invert as u8, component_sizes[c] as u128, i),
    });
    order
}

/// Result of [`enumerate_shortest_paths`].
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PathSet {
    pub paths: Vec<Vec<NodeId>>,
    pub truncated: bool,
}

pub const DEFAULT_PATH_LIMIT: usize = 1000;

/// All shortest directed paths `from -> to`, provided the distance is at
/// most `d_c`. At most `limit` paths are returned.
pub fn enumerate_shortest_paths(
    graph: &RdfGraph,
    from: NodeId,
    to: NodeId,
    d_c: u32,
    limit: usize,
) -> PathSet {
    if from == to {
        return PathSet {
            paths: vec![vec![from]],
            truncated: false,
        };
    }
    let mut dist: HashMap<NodeId, u32> = HashMap::new();
    dist.insert(from, 0);
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        let du = dist[&u];
        if u == to || du >= d_c {
            continue;
        }
        for &(_, v) in graph.out_edges(u) {
            if let Entry::Vacant(e) = dist.entry(v) {
                e.insert(du + 1);
                queue.push_back(v);
            }
        }
    }
    let mut set = PathSet::default();
    if !dist.contains_key(&to) {
        log::warn!("no path of length <= {d_c} between {from} and {to}");
        return set;
    }
    let mut suffix = vec![to];
    walk_back(graph, &dist, from, &mut suffix, limit, &mut set);
    set
}

fn walk_back(
    graph: &RdfGraph,
    dist: &HashMap<NodeId, u32>,
    from: NodeId,
    suffix: &mut Vec<NodeId>,
    limit: usize,
    out: &mut PathSet,
) {
    let cur = *suffix.last().unwrap();
    if cur == from {
        if out.paths.len() >= limit {
            out.truncated = true;
            return;
        }
        out.paths.push(suffix.iter().rev().copied().collect());
        return;
    }
    let want = dist[&cur] - 1;
    let mut preds: Vec<NodeId> = graph
        .in_edges(cur)
        .iter()
        .map(|(_, p)| *p)
        .filter(|p| dist.get(p) == Some(&want))
        .collect();
    preds.sort_unstable();
    preds.dedup();
    for p in preds {
        if out.truncated {
            return;
        }
        suffix.push(p);
        walk_back(graph, dist, from, suffix, limit, out);
        suffix.pop();
    }
}
