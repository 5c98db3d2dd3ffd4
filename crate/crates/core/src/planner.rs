//! Selectivity statistics and the prune/no-prune decision.

use std::collections::{BTreeMap, VecDeque};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{RdfGraph, Triple};
use crate::idmap::prefix_range;
use crate::matcher::{DTree, Engine, ExecOptions, MatchOutput, Prepared};
use crate::query::QueryTemplate;
use crate::Result;

pub const DEFAULT_NGRAM: usize = 5;
/// Literal selectivity is tabulated for prefix lengths `1..=MAX_NGRAM`;
/// longer keywords use the last entry.
pub const MAX_NGRAM: usize = 24;

/// Selectivity of one attribute predicate's literals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiteralSelectivity {
    /// Distinct literal labels `|l(p_a)|`.
    pub unique: usize,
    /// `f` for prefix lengths 1, 2, ..., [`MAX_NGRAM`].
    pub by_n: Vec<f64>,
}

impl LiteralSelectivity {
    pub fn f(&self, n: usize) -> f64 {
        self.by_n[n.clamp(1, self.by_n.len()) - 1]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub edge_total: usize,
    pub pred_count: BTreeMap<String, usize>,
    pub pred_sel: BTreeMap<String, f64>,
    pub lit_sel: BTreeMap<String, LiteralSelectivity>,
    /// Prefix length used when a query gives no keyword for an attribute.
    pub ngram: usize,
    pub sampled: bool,
    pub sample_size: usize,
}

/// `f = m / |l|`, where `m` is the mean number of distinct literals matched
/// by each distinct prefix n-gram. Labels shorter than `n` are their own gram.
pub fn literal_selectivity(literals: &[&str], n: usize) -> f64 {
    let mut labels: Vec<&str> = literals.to_vec();
    labels.sort_unstable();
    labels.dedup();
    if labels.is_empty() {
        return 0.0;
    }
    let mut grams: Vec<&str> = labels
        .iter()
        .map(|l| match l.char_indices().nth(n) {
            Some((i, _)) => &l[..i],
            None => l,
        })
        .collect();
    grams.sort_unstable();
    grams.dedup();
    let matches: usize = grams.iter().map(|g| prefix_range(&labels, g).len()).sum();
    let m = matches as f64 / grams.len() as f64;
    m / labels.len() as f64
}

impl DatasetStats {
    /// Exact statistics over all triples, or over `sample` triples drawn
    /// uniformly without replacement.
    pub fn compute(graph: &RdfGraph, ngram: usize, sample: Option<(usize, u64)>) -> Result<Self> {
        if ngram == 0 {
            return Err(crate::Error::InvalidInput("n-gram length must be at least 1".into()));
        }
        let all = graph.triples();
        let (triples, sampled): (Vec<&Triple>, bool) = match sample {
            Some((k, seed)) if k < all.len() => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut idx = rand::seq::index::sample(&mut rng, all.len(), k).into_vec();
                idx.sort_unstable();
                (idx.into_iter().map(|i| &all[i]).collect(), true)
            }
            _ => (all.iter().collect(), false),
        };

        let mut pred_count: BTreeMap<String, usize> = BTreeMap::new();
        let mut literals: BTreeMap<String, Vec<&str>> = BTreeMap::new();
        for t in &triples {
            let p = graph.predicate_label(t.predicate);
            *pred_count.entry(p.to_owned()).or_default() += 1;
            if graph.is_literal(t.object) {
                literals.entry(p.to_owned()).or_default().push(graph.label(t.object));
            }
        }
        let edge_total = triples.len();
        let pred_sel = pred_count
            .iter()
            .map(|(p, c)| (p.clone(), *c as f64 / edge_total as f64))
            .collect();
        let lit_sel = literals
            .into_iter()
            .map(|(p, mut labels)| {
                labels.sort_unstable();
                labels.dedup();
                let by_n = (1..=MAX_NGRAM).map(|n| literal_selectivity(&labels, n)).collect();
                (p, LiteralSelectivity { unique: labels.len(), by_n })
            })
            .collect();
        Ok(Self {
            edge_total,
            pred_count,
            pred_sel,
            lit_sel,
            ngram,
            sampled,
            sample_size: edge_total,
        })
    }

    fn min_selectivity(&self) -> f64 {
        self.pred_sel.values().copied().fold(f64::INFINITY, f64::min)
    }

    /// Selectivity of a predicate keyword: the largest `s(p)` over the
    /// dataset predicates it prefixes, and the matching literal stats of
    /// that predicate. `None` when nothing matches.
    fn resolve(&self, keyword: &str) -> Option<(f64, Option<&LiteralSelectivity>)> {
        let (p, s) = self
            .pred_sel
            .range(keyword.to_owned()..)
            .take_while(|(p, _)| p.starts_with(keyword))
            .max_by(|a, b| a.1.total_cmp(b.1).then_with(|| b.0.cmp(a.0)))?;
        Some((*s, self.lit_sel.get(p)))
    }
}

/// Neighborhood selectivity of one query node.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Selectivity {
    pub value: f64,
    /// Predicate keywords with no match in the dataset.
    pub unresolved: Vec<String>,
}

/// `N = |Σ ln s(p_r) + Σ ln(s(p_a)·f)|` over the predicate edges within `k`
/// hops of query node `q` (edge direction ignored, each edge counted once).
pub fn neighborhood_selectivity(
    template: &QueryTemplate,
    q: usize,
    stats: &DatasetStats,
    k: u8,
) -> Selectivity {
    let n = template.node_count();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in template.edges() {
        adj[e.from].push(e.to);
        adj[e.to].push(e.from);
    }
    let mut dist = vec![u32::MAX; n];
    dist[q] = 0;
    let mut queue = VecDeque::from([q]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if dist[v] == u32::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }

    let mut out = Selectivity::default();
    let mut sum = 0.0;
    for e in template.edges() {
        if dist[e.from].min(dist[e.to]) >= k as u32 {
            continue;
        }
        let Some(keyword) = &e.predicate else {
            continue;
        };
        match stats.resolve(keyword) {
            Some((s, Some(lit))) => {
                let len = template.nodes()[e.to]
                    .keyword
                    .as_ref()
                    .map_or(stats.ngram, |kw| kw.chars().count());
                sum += (s * lit.f(len)).ln();
            }
            Some((s, None)) => sum += s.ln(),
            None => {
                out.unresolved.push(keyword.clone());
                sum += stats.min_selectivity().ln();
            }
        }
    }
    out.value = sum.abs();
    out
}

/// `(max_iterations, est_joins)`: the largest root candidate set and the
/// product of all root candidate-set sizes. A component without D-trees
/// contributes its single node's candidate count.
pub fn estimate_complexity(
    decompositions: &[Vec<DTree>],
    component_nodes: &[Vec<usize>],
    candidate_sizes: &[usize],
) -> (u64, u64) {
    let mut roots = Vec::new();
    for (trees, nodes) in decompositions.iter().zip(component_nodes) {
        if trees.is_empty() {
            roots.push(candidate_sizes[nodes[0]] as u64);
        } else {
            roots.extend(trees.iter().map(|t| candidate_sizes[t.root] as u64));
        }
    }
    if roots.contains(&0) {
        return (0, 0);
    }
    let max = roots.iter().copied().max().unwrap_or(0);
    let product = roots.iter().fold(1u64, |acc, r| acc.saturating_mul(*r));
    (max, product)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub iterations: u64,
    pub joins: u64,
    pub selectivity: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            iterations: 1000,
            joins: 1_000_000,
            selectivity: 10.0,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.joins == 0 || self.selectivity.is_nan() || self.selectivity <= 0.0 {
            return Err(crate::Error::InvalidInput(format!("thresholds must be positive: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Evidence {
    pub max_iterations: u64,
    pub est_joins: u64,
    pub max_neighborhood_selectivity: f64,
    pub selectivity: Vec<f64>,
    pub unresolved_predicates: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanDecision {
    pub use_pruning: bool,
    pub hops: u8,
    pub evidence: Evidence,
}

/// Prune iff some complexity estimate exceeds its threshold and some query
/// node is selective enough.
pub fn decide(evidence: Evidence, thresholds: &Thresholds, hops: u8) -> PlanDecision {
    let complex = evidence.max_iterations > thresholds.iterations || evidence.est_joins > thresholds.joins;
    let selective = evidence.max_neighborhood_selectivity >= thresholds.selectivity;
    PlanDecision {
        use_pruning: complex && selective,
        hops,
        evidence,
    }
}

/// Gathers the planner's inputs for a prepared query.
pub fn evidence(prepared: &Prepared<'_>, stats: &DatasetStats, hops: u8) -> Evidence {
    let nodes: Vec<Vec<usize>> = prepared
        .components
        .components
        .iter()
        .map(|c| c.nodes.clone())
        .collect();
    let (max_iterations, est_joins) =
        estimate_complexity(&prepared.decompositions, &nodes, &prepared.candidate_sizes());
    let mut ev = Evidence {
        max_iterations,
        est_joins,
        ..Default::default()
    };
    for q in 0..prepared.template.node_count() {
        let s = neighborhood_selectivity(prepared.template, q, stats, hops);
        ev.max_neighborhood_selectivity = ev.max_neighborhood_selectivity.max(s.value);
        ev.selectivity.push(s.value);
        for p in s.unresolved {
            if !ev.unresolved_predicates.contains(&p) {
                ev.unresolved_predicates.push(p);
            }
        }
    }
    ev
}

/// Plans a prepared query.
pub fn plan(prepared: &Prepared<'_>, stats: &DatasetStats, thresholds: &Thresholds, hops: u8) -> PlanDecision {
    decide(evidence(prepared, stats, hops), thresholds, hops)
}

/// How a query decides whether to prune.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Auto,
    Prune,
    NoPrune,
}

impl std::str::FromStr for Mode {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Mode::Auto),
            "prune" => Ok(Mode::Prune),
            "noprune" => Ok(Mode::NoPrune),
            _ => Err(crate::Error::InvalidInput(format!("unknown mode {s:?}"))),
        }
    }
}

/// Prepares, plans (in auto mode) and executes a template. Checks use the
/// full depth of the engine's index.
pub fn run_query(
    engine: &Engine<'_>,
    template: &QueryTemplate,
    mode: Mode,
    stats: &DatasetStats,
    thresholds: &Thresholds,
    opts: &ExecOptions,
) -> Result<(MatchOutput, Option<PlanDecision>)> {
    let hops = engine.index.variant().max_depth();
    let prepared = engine.prepare(template);
    let (prune, decision) = match mode {
        Mode::Prune => (true, None),
        Mode::NoPrune => (false, None),
        Mode::Auto => {
            let d = plan(&prepared, stats, thresholds, hops);
            (d.use_pruning, Some(d))
        }
    };
    let out = engine.execute(&prepared, prune, hops, opts)?;
    Ok((out, decision))
}

/// Tuning grids. The upper ends reach past the evidence of typical size-8
/// templates (join estimates of 10^12 and more, selectivities of 30 to 70)
/// so that "never prune" stays expressible.
pub const GRID_ITERATIONS: [u64; 6] = [10, 100, 1_000, 10_000, 100_000, 1_000_000];
pub const GRID_JOINS: [u64; 14] = [
    100,
    1_000,
    10_000,
    100_000,
    1_000_000,
    10_000_000,
    100_000_000,
    1_000_000_000,
    10_000_000_000,
    100_000_000_000,
    1_000_000_000_000,
    10_000_000_000_000,
    100_000_000_000_000,
    1_000_000_000_000_000,
];
pub const GRID_SELECTIVITY: [f64; 8] = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0];

/// Per-query measurements collected while tuning.
#[derive(Debug, Clone, Serialize)]
pub struct TuneSample {
    pub evidence: Evidence,
    pub prune_time: f64,
    pub noprune_time: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TuneReport {
    pub thresholds: Thresholds,
    /// Predicted total time of the chosen thresholds, in seconds.
    pub total_time: f64,
    pub samples: Vec<TuneSample>,
}

fn median_of_3(mut f: impl FnMut() -> Result<Duration>) -> Result<f64> {
    let mut t = [f()?, f()?, f()?];
    t.sort_unstable();
    Ok(t[1].as_secs_f64())
}

/// Grid search over thresholds.
///
/// A query's running time depends only on whether it prunes, so each sample
/// is timed once per mode (median of three runs) and every grid point is
/// scored as the sum of the times of the modes it would choose. Ties go to
/// the smallest thresholds.
pub fn tune_thresholds(
    engine: &Engine<'_>,
    stats: &DatasetStats,
    templates: &[QueryTemplate],
    hops: u8,
) -> Result<TuneReport> {
    if templates.is_empty() {
        log::warn!("no sample templates; using default thresholds");
        return Ok(TuneReport {
            thresholds: Thresholds::default(),
            total_time: 0.0,
            samples: Vec::new(),
        });
    }
    if templates.len() < 10 {
        log::warn!("only {} sample templates; tuning may overfit", templates.len());
    }
    let opts = ExecOptions::default();
    let mut samples = Vec::with_capacity(templates.len());
    for t in templates {
        let run = |prune: bool| {
            move || -> Result<Duration> {
                let start = Instant::now();
                let prepared = engine.prepare(t);
                engine.execute(&prepared, prune, hops, &opts)?;
                Ok(start.elapsed())
            }
        };
        let prune_time = median_of_3(run(true))?;
        let noprune_time = median_of_3(run(false))?;
        let prepared = engine.prepare(t);
        samples.push(TuneSample {
            evidence: evidence(&prepared, stats, hops),
            prune_time,
            noprune_time,
        });
    }

    let mut best: Option<(f64, Thresholds)> = None;
    for &iterations in &GRID_ITERATIONS {
        for &joins in &GRID_JOINS {
            for &selectivity in &GRID_SELECTIVITY {
                let th = Thresholds { iterations, joins, selectivity };
                let total: f64 = samples
                    .iter()
                    .map(|s| {
                        if decide(s.evidence.clone(), &th, hops).use_pruning {
                            s.prune_time
                        } else {
                            s.noprune_time
                        }
                    })
                    .sum();
                if best.is_none_or(|(b, _)| total < b) {
                    best = Some((total, th));
                }
            }
        }
    }
    let (total_time, thresholds) = best.expect("grid is not empty");
    Ok(TuneReport {
        thresholds,
        total_time,
        samples,
    })
}
