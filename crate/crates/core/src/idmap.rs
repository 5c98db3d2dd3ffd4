//! Lexicographic label-to-ID mapping.
//!
//! Labels are sorted bytewise and numbered `0..N`, so the labels sharing a
//! prefix occupy one contiguous ID interval found with two binary searches.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::graph::{NodeId, RdfGraph};

/// Inclusive interval of label IDs. `lo > hi` encodes the empty interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IdInterval {
    pub lo: u32,
    pub hi: u32,
}

impl IdInterval {
    pub const EMPTY: IdInterval = IdInterval { lo: 1, hi: 0 };

    pub fn new(lo: u32, hi: u32) -> Self {
        Self { lo, hi }
    }

    /// Interval covering the half-open range `r`.
    pub fn from_range(r: Range<usize>) -> Self {
        if r.is_empty() {
            Self::EMPTY
        } else {
            Self::new(r.start as u32, (r.end - 1) as u32)
        }
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn len(&self) -> usize {
        if self.is_empty() {
            0
        } else {
            (self.hi - self.lo) as usize + 1
        }
    }

    pub fn contains(&self, id: u32) -> bool {
        self.lo <= id && id <= self.hi
    }

    pub fn intersects(&self, other: &IdInterval) -> bool {
        !self.is_empty() && !other.is_empty() && self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn covers(&self, other: &IdInterval) -> bool {
        other.is_empty() || (self.lo <= other.lo && other.hi <= self.hi)
    }

    pub fn ids(&self) -> impl Iterator<Item = u32> {
        let (lo, hi) = (self.lo, self.hi);
        (lo..=hi).take(self.len())
    }
}

/// Half-open index range of the entries in `sorted` that start with `prefix`.
/// `sorted` must be in bytewise order.
pub(crate) fn prefix_range<S: AsRef<str>>(sorted: &[S], prefix: &str) -> Range<usize> {
    let p = prefix.as_bytes();
    let lo = sorted.partition_point(|l| l.as_ref().as_bytes() < p);
    let hi = lo + sorted[lo..].partition_point(|l| l.as_ref().as_bytes().starts_with(p));
    lo..hi
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdMap {
    sorted_labels: Vec<String>,
    /// Label ID of each graph node.
    node_to_id: Vec<u32>,
    /// Graph node of each label ID.
    id_to_node: Vec<NodeId>,
}

impl IdMap {
    pub fn build(graph: &RdfGraph) -> Self {
        let mut order: Vec<NodeId> = graph.nodes().collect();
        order.sort_by(|a, b| graph.label(*a).as_bytes().cmp(graph.label(*b).as_bytes()));
        let mut node_to_id = vec![0u32; order.len()];
        for (id, node) in order.iter().enumerate() {
            node_to_id[node.index()] = id as u32;
        }
        let sorted_labels = order.iter().map(|n| graph.label(*n).to_owned()).collect();
        IdMap {
            sorted_labels,
            node_to_id,
            id_to_node: order,
        }
    }

    pub fn len(&self) -> usize {
        self.sorted_labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted_labels.is_empty()
    }

    pub fn id_of(&self, node: NodeId) -> u32 {
        self.node_to_id[node.index()]
    }

    pub fn node_of(&self, id: u32) -> NodeId {
        self.id_to_node[id as usize]
    }

    pub fn label_of(&self, id: u32) -> &str {
        &self.sorted_labels[id as usize]
    }

    pub fn id_of_label(&self, label: &str) -> Option<u32> {
        self.sorted_labels
            .binary_search_by(|l| l.as_bytes().cmp(label.as_bytes()))
            .ok()
            .map(|i| i as u32)
    }

    pub fn sorted_labels(&self) -> &[String] {
        &self.sorted_labels
    }

    /// IDs of all labels starting with `prefix`, in `O(log N)`.
    pub fn lookup_prefix(&self, prefix: &str) -> IdInterval {
        IdInterval::from_range(prefix_range(&self.sorted_labels, prefix))
    }

    /// The full ID range, i.e. what a wildcard matches.
    pub fn all(&self) -> IdInterval {
        IdInterval::from_range(0..self.len())
    }
}
