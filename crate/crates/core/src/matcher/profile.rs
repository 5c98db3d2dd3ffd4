//! Keyword profiles and the neighborhood containment check.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::graph::NodeId;
use crate::idmap::IdInterval;
use crate::ni::NiIndex;
use crate::query::QueryTemplate;

/// `{distance, count}` pair: at least `count` distinct neighbors must lie
/// within `|distance|` hops in the direction given by the sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct DistanceCount {
    pub distance: i8,
    pub count: u32,
}

/// Per-keyword `{distance, count}` requirements of one query node.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct KeywordProfile {
    pub keywords: BTreeMap<String, Vec<DistanceCount>>,
}

impl KeywordProfile {
    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }

    pub fn get(&self, keyword: &str) -> Option<&[DistanceCount]> {
        self.keywords.get(keyword).map(Vec::as_slice)
    }
}

/// Shortest template distances from `source` along directed edges, up to
/// `limit`. Predicate edges weigh 1; directed connection edges weigh their
/// distance bound, since the matched path can be no longer than that.
/// Bidirectional connections give no direction and are skipped.
pub(crate) fn template_distances(
    template: &QueryTemplate,
    source: usize,
    limit: u32,
    forward: bool,
) -> Vec<Option<u32>> {
    let n = template.node_count();
    let mut arcs: Vec<(usize, usize, u32)> = template
        .edges()
        .iter()
        .map(|e| (e.from, e.to, 1))
        .collect();
    arcs.extend(
        template
            .connections()
            .iter()
            .filter(|c| c.directed)
            .map(|c| (c.from, c.to, c.max_distance)),
    );
    let mut dist: Vec<Option<u32>> = vec![None; n];
    dist[source] = Some(0);
    // Bellman-Ford; templates have a handful of nodes.
    for _ in 0..n {
        let mut changed = false;
        for &(a, b, w) in &arcs {
            let (u, v) = if forward { (a, b) } else { (b, a) };
            if let Some(du) = dist[u] {
                let nd = du + w;
                if nd <= limit && dist[v].is_none_or(|dv| nd < dv) {
                    dist[v] = Some(nd);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    dist
}

/// Builds the keyword profile of query node `q` over its `k`-hop template
/// neighborhood.
///
/// For a keyword `p`, the count at distance `d` is the number of other query
/// nodes within `d` hops whose keyword starts with `p`: those nodes all match
/// labels inside `p`'s interval, so a more general keyword absorbs the counts
/// of the more specific ones it contains.
pub fn build_keyword_profile(template: &QueryTemplate, q: usize, k: u8) -> KeywordProfile {
    let mut profile = KeywordProfile::default();
    for forward in [true, false] {
        let dist = template_distances(template, q, k as u32, forward);
        let neighbors: Vec<(&str, u32)> = dist
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != q)
            .filter_map(|(i, d)| {
                let d = (*d)?;
                let kw = template.nodes()[i].keyword.as_deref()?;
                Some((kw, d))
            })
            .collect();
        for &(keyword, _) in &neighbors {
            let mut within: Vec<u32> = neighbors
                .iter()
                .filter(|(kw, _)| kw.starts_with(keyword))
                .map(|(_, d)| *d)
                .collect();
            within.sort_unstable();
            let pairs = profile.keywords.entry(keyword.to_owned()).or_default();
            let sign = if forward { 1 } else { -1 };
            for (i, d) in within.iter().enumerate() {
                let last = i + 1 == within.len() || within[i + 1] != *d;
                if last {
                    let pair = DistanceCount {
                        distance: sign * (*d as i8),
                        count: i as u32 + 1,
                    };
                    if !pairs.contains(&pair) {
                        pairs.push(pair);
                    }
                }
            }
            pairs.sort();
        }
    }
    profile
}

/// True iff node `n` can host query node `q` as far as the indexed
/// neighborhood of `n` can tell.
///
/// Requirements deeper than the depth indexed at `n` are skipped. Keyword
/// intervals built from prefixes are either nested or disjoint, and the
/// profile counts for a keyword include every more specific keyword it
/// contains, so checking each keyword's count independently is the same as
/// requiring an injective assignment of graph neighbors to query neighbors.
pub fn neighborhood_check(
    n: NodeId,
    profile: &KeywordProfile,
    index: &NiIndex,
    intervals: &HashMap<String, IdInterval>,
) -> bool {
    check_resolved(n, &profile.resolve(intervals), index)
}

/// A profile with keywords replaced by their ID intervals, so a check does
/// no string lookups.
pub(crate) type ResolvedProfile = Vec<(IdInterval, Vec<DistanceCount>)>;

impl KeywordProfile {
    /// Keywords without an interval in `intervals` are dropped. Narrow
    /// intervals come first: they are the likeliest to reject a node.
    pub(crate) fn resolve(&self, intervals: &HashMap<String, IdInterval>) -> ResolvedProfile {
        let mut resolved: ResolvedProfile = self
            .keywords
            .iter()
            .filter_map(|(k, pairs)| intervals.get(k).map(|z| (*z, pairs.clone())))
            .collect();
        resolved.sort_by_key(|(z, _)| z.hi.saturating_sub(z.lo));
        resolved
    }
}

pub(crate) fn check_resolved(n: NodeId, profile: &ResolvedProfile, index: &NiIndex) -> bool {
    let depth = index.depth(n) as i8;
    for (z, pairs) in profile {
        for pair in pairs {
            if pair.distance.abs() > depth {
                continue;
            }
            let (lo, hi) = if pair.distance > 0 {
                (1, pair.distance)
            } else {
                (pair.distance, -1)
            };
            let need = pair.count as usize;
            if index.count_within(n, lo, hi, z, need) < need {
                return false;
            }
        }
    }
    true
}
