//! Neighborhood-interval (NI) index.
//!
//! For every node the index stores the label IDs of its forward and backward
//! neighbors up to a per-node depth. Neighbors at the same signed distance are
//! sorted by ID and cut into entries of at most `m` IDs; each entry carries
//! the tight `[min, max]` interval of its IDs so that keyword intervals can
//! skip whole entries.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::{NodeId, RdfGraph};
use crate::idmap::{IdInterval, IdMap};
use crate::{Error, Result};

pub const DEFAULT_DMAX: u8 = 3;
pub const DEFAULT_BINNING: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IndexVariant {
    /// Every node indexed to the same depth.
    Full { d_max: u8 },
    /// Nodes of a 2-approximate vertex cover indexed to 2 hops, all other
    /// nodes to 1 hop.
    VertexCover,
}

impl IndexVariant {
    pub fn max_depth(&self) -> u8 {
        match self {
            IndexVariant::Full { d_max } => *d_max,
            IndexVariant::VertexCover => 2,
        }
    }
}

/// One row of the index, borrowed from the owning [`NiIndex`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NiEntry<'a> {
    pub node: NodeId,
    /// Positive for forward neighbors, negative for backward neighbors.
    pub distance: i8,
    pub interval: IdInterval,
    pub neighbor_ids: &'a [u32],
}

impl NiEntry<'_> {
    pub fn count(&self) -> usize {
        self.neighbor_ids.len()
    }

    /// Number of this entry's IDs that fall inside `filter`.
    pub fn count_in(&self, filter: &IdInterval) -> usize {
        if filter.covers(&self.interval) {
            return self.neighbor_ids.len();
        }
        if !filter.intersects(&self.interval) {
            return 0;
        }
        let lo = self.neighbor_ids.partition_point(|id| *id < filter.lo);
        let hi = self.neighbor_ids.partition_point(|id| *id <= filter.hi);
        hi - lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct EntryHeader {
    distance: i8,
    lo: u32,
    hi: u32,
    start: u32,
    len: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NiIndex {
    version: u32,
    variant: IndexVariant,
    m: usize,
    depth: Vec<u8>,
    node_offsets: Vec<u32>,
    headers: Vec<EntryHeader>,
    ids: Vec<u32>,
}

impl NiIndex {
    pub const VERSION: u32 = 1;

    /// Full index: every node's neighbors indexed to `d_max` hops in both
    /// directions, binned by `m`.
    pub fn build(graph: &RdfGraph, idmap: &IdMap, d_max: u8, m: usize) -> Result<Self> {
        if d_max == 0 {
            return Err(Error::InvalidInput("d_max must be at least 1".into()));
        }
        let depth = vec![d_max; graph.node_count()];
        Self::build_with_depths(graph, idmap, IndexVariant::Full { d_max }, depth, m)
    }

    /// Vertex-cover index: 2 hops for cover nodes, 1 hop elsewhere.
    pub fn build_vertex_cover(graph: &RdfGraph, idmap: &IdMap, m: usize) -> Result<Self> {
        let mut depth = vec![1u8; graph.node_count()];
        for n in approx_vertex_cover(graph) {
            depth[n.index()] = 2;
        }
        Self::build_with_depths(graph, idmap, IndexVariant::VertexCover, depth, m)
    }

    fn build_with_depths(
        graph: &RdfGraph,
        idmap: &IdMap,
        variant: IndexVariant,
        depth: Vec<u8>,
        m: usize,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidInput("binning factor must be at least 1".into()));
        }
        let n = graph.node_count();
        let per_node: Vec<Vec<(i8, Vec<u32>)>> = (0..n as u32)
            .into_par_iter()
            .map_init(
                || Bfs::new(n),
                |bfs, v| {
                    let node = NodeId(v);
                    let d = depth[node.index()];
                    let mut layers = Vec::new();
                    let backward = bfs.layers(graph, node, d, false);
                    for (i, layer) in backward.into_iter().enumerate().rev() {
                        layers.push((-(i as i8 + 1), to_sorted_ids(idmap, layer)));
                    }
                    let forward = bfs.layers(graph, node, d, true);
                    for (i, layer) in forward.into_iter().enumerate() {
                        layers.push((i as i8 + 1, to_sorted_ids(idmap, layer)));
                    }
                    layers
                },
            )
            .collect();

        let mut node_offsets = Vec::with_capacity(n + 1);
        let mut headers = Vec::new();
        let mut ids = Vec::new();
        node_offsets.push(0);
        for layers in per_node {
            for (distance, layer) in layers {
                for chunk in layer.chunks(m) {
                    headers.push(EntryHeader {
                        distance,
                        lo: chunk[0],
                        hi: chunk[chunk.len() - 1],
                        start: ids.len() as u32,
                        len: chunk.len() as u32,
                    });
                    ids.extend_from_slice(chunk);
                }
            }
            node_offsets.push(headers.len() as u32);
        }
        Ok(NiIndex {
            version: Self::VERSION,
            variant,
            m,
            depth,
            node_offsets,
            headers,
            ids,
        })
    }

    pub fn variant(&self) -> IndexVariant {
        self.variant
    }

    pub fn binning(&self) -> usize {
        self.m
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    pub fn node_count(&self) -> usize {
        self.depth.len()
    }

    /// Indexed depth of `node` (0 for nodes unknown to the index).
    pub fn depth(&self, node: NodeId) -> u8 {
        self.depth.get(node.index()).copied().unwrap_or(0)
    }

    pub fn total_entries(&self) -> usize {
        self.headers.len()
    }

    pub fn total_ids(&self) -> usize {
        self.ids.len()
    }

    /// Number of IDs inside `filter` among `node`'s neighbors at signed
    /// distances `dist_lo..=dist_hi`, counting stops once `enough` is
    /// reached.
    pub fn count_within(&self, node: NodeId, dist_lo: i8, dist_hi: i8, filter: &IdInterval, enough: usize) -> usize {
        let Some(range) = node_offsets_range(&self.node_offsets, node) else {
            return 0;
        };
        let headers = &self.headers[range];
        let mut found = 0;
        for d in dist_lo..=dist_hi {
            // headers are sorted by (distance, lo) and IDs do not overlap
            // within a distance, so they are sorted by (distance, hi) too
            let first = headers.partition_point(|h| (h.distance, h.hi) < (d, filter.lo));
            for h in headers[first..].iter().take_while(|h| h.distance == d && h.lo <= filter.hi) {
                let entry = NiEntry {
                    node,
                    distance: h.distance,
                    interval: IdInterval::new(h.lo, h.hi),
                    neighbor_ids: &self.ids[h.start as usize..(h.start + h.len) as usize],
                };
                found += entry.count_in(filter);
                if found >= enough {
                    return found;
                }
            }
        }
        found
    }

    /// All entries of `node`, backward distances first.
    pub fn entries(&self, node: NodeId) -> impl Iterator<Item = NiEntry<'_>> + '_ {
        let range = match node_offsets_range(&self.node_offsets, node) {
            Some(r) => r,
            None => 0..0,
        };
        self.headers[range].iter().map(move |h| NiEntry {
            node,
            distance: h.distance,
            interval: IdInterval::new(h.lo, h.hi),
            neighbor_ids: &self.ids[h.start as usize..(h.start + h.len) as usize],
        })
    }

    /// Entries of `node` with `dist_lo <= distance <= dist_hi` whose interval
    /// intersects `filter` (every entry in range when `filter` is `None`).
    pub fn entries_within(
        &self,
        node: NodeId,
        dist_lo: i8,
        dist_hi: i8,
        filter: Option<IdInterval>,
    ) -> Vec<NiEntry<'_>> {
        self.entries(node)
            .filter(|e| e.distance >= dist_lo && e.distance <= dist_hi)
            .filter(|e| filter.is_none_or(|f| f.intersects(&e.interval)))
            .collect()
    }

    /// IDs of neighbors within `1..=hops` in one direction. `hops` is capped at
    /// the node's indexed depth.
    pub fn neighbors_within(
        &self,
        node: NodeId,
        forward: bool,
        hops: u8,
    ) -> impl Iterator<Item = u32> + '_ {
        let hops = hops.min(self.depth(node)) as i8;
        self.entries(node)
            .filter(move |e| {
                if forward {
                    e.distance > 0 && e.distance <= hops
                } else {
                    e.distance < 0 && -e.distance <= hops
                }
            })
            .flat_map(|e| e.neighbor_ids.iter().copied())
    }

    pub fn check_version(&self) -> Result<()> {
        if self.version != Self::VERSION {
            return Err(Error::Snapshot(format!(
                "index snapshot version {} (expected {})",
                self.version,
                Self::VERSION
            )));
        }
        if self.node_offsets.len() != self.depth.len() + 1 {
            return Err(Error::Snapshot("index offsets do not match node count".into()));
        }
        Ok(())
    }
}

fn node_offsets_range(offsets: &[u32], node: NodeId) -> Option<std::ops::Range<usize>> {
    let i = node.index();
    if i + 1 >= offsets.len() {
        return None;
    }
    Some(offsets[i] as usize..offsets[i + 1] as usize)
}

fn to_sorted_ids(idmap: &IdMap, layer: Vec<NodeId>) -> Vec<u32> {
    let mut ids: Vec<u32> = layer.into_iter().map(|n| idmap.id_of(n)).collect();
    ids.sort_unstable();
    ids
}

/// Reusable truncated BFS; `seen` holds a stamp per node so that it never
/// needs clearing between sources.
struct Bfs {
    seen: Vec<u32>,
    stamp: u32,
}

impl Bfs {
    fn new(n: usize) -> Self {
        Self {
            seen: vec![0; n],
            stamp: 0,
        }
    }

    /// Shortest-distance layers `1..=depth` around `source`.
    fn layers(&mut self, graph: &RdfGraph, source: NodeId, depth: u8, forward: bool) -> Vec<Vec<NodeId>> {
        self.stamp += 1;
        let stamp = self.stamp;
        self.seen[source.index()] = stamp;
        let mut layers: Vec<Vec<NodeId>> = Vec::new();
        let mut frontier = vec![source];
        for _ in 0..depth {
            let mut next = Vec::new();
            for &u in &frontier {
                let adj = if forward { graph.out_edges(u) } else { graph.in_edges(u) };
                for &(_, v) in adj {
                    if self.seen[v.index()] != stamp {
                        self.seen[v.index()] = stamp;
                        next.push(v);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            layers.push(next.clone());
            frontier = next;
        }
        layers
    }
}

/// Matching-based 2-approximate vertex cover of the underlying undirected
/// graph. Edges are considered in ascending `(subject, object)` order; an edge
/// with no covered endpoint contributes both endpoints.
pub fn approx_vertex_cover(graph: &RdfGraph) -> Vec<NodeId> {
    let mut edges: Vec<(NodeId, NodeId)> = graph.triples().iter().map(|t| (t.subject, t.object)).collect();
    edges.sort_unstable();
    edges.dedup();
    let mut in_cover = vec![false; graph.node_count()];
    for (s, o) in edges {
        if !in_cover[s.index()] && !in_cover[o.index()] {
            in_cover[s.index()] = true;
            in_cover[o.index()] = true;
        }
    }
    graph.nodes().filter(|n| in_cover[n.index()]).collect()
}
