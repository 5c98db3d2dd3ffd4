//! Dataset metrics that predict whether neighborhood pruning pays off:
//! coherence, relationship specialty and literal diversity.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::graph::{EdgeKind, NodeId, RdfGraph};
use crate::{Error, Result};

pub const DEFAULT_SAMPLE: usize = 100_000;

/// Non-excess Pearson kurtosis `μ₄ / σ⁴` with population moments. A constant
/// sample has kurtosis 1.
pub fn pearson_kurtosis(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidInput("kurtosis of an empty sample".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= n;
    m4 /= n;
    if m2 == 0.0 {
        return Ok(1.0);
    }
    Ok(m4 / (m2 * m2))
}

/// Which nodes contribute to a relationship predicate's distribution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SpecialtyOptions {
    /// Count object-side participation too.
    pub count_objects: bool,
    /// Give every resource an entry, including those with zero occurrences.
    pub include_zeros: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredicateKurtosis {
    pub predicate: String,
    pub occurrences: usize,
    pub kurtosis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Specialty {
    pub value: f64,
    pub per_predicate: Vec<PredicateKurtosis>,
}

/// Occurrence-weighted mean of the kurtosis of per-node relationship-edge
/// counts, one distribution per relationship predicate. `None` without
/// relationship edges.
pub fn relationship_specialty(graph: &RdfGraph, opts: SpecialtyOptions) -> Option<Specialty> {
    let mut counts: BTreeMap<&str, (usize, HashMap<NodeId, usize>)> = BTreeMap::new();
    for t in graph.triples() {
        if graph.edge_kind(t) != EdgeKind::Relationship {
            continue;
        }
        let (occurrences, per_node) = counts.entry(graph.predicate_label(t.predicate)).or_default();
        *occurrences += 1;
        *per_node.entry(t.subject).or_default() += 1;
        if opts.count_objects {
            *per_node.entry(t.object).or_default() += 1;
        }
    }
    if counts.is_empty() {
        return None;
    }
    let resources = graph.nodes().filter(|n| !graph.is_literal(*n)).count();
    let mut per_predicate = Vec::with_capacity(counts.len());
    for (p, (occurrences, per_node)) in counts {
        let mut values: Vec<f64> = per_node.values().map(|c| *c as f64).collect();
        if opts.include_zeros {
            values.resize(resources.max(values.len()), 0.0);
        }
        values.sort_by(f64::total_cmp);
        per_predicate.push(PredicateKurtosis {
            predicate: p.to_owned(),
            occurrences,
            kurtosis: pearson_kurtosis(&values).expect("non-empty"),
        });
    }
    let total: usize = per_predicate.iter().map(|p| p.occurrences).sum();
    let value = per_predicate
        .iter()
        .map(|p| p.occurrences as f64 / total as f64 * p.kurtosis)
        .sum();
    Some(Specialty { value, per_predicate })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeCoverage {
    pub type_name: String,
    pub instances: usize,
    pub predicates: usize,
    pub coverage: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coherence {
    pub value: f64,
    pub per_type: Vec<TypeCoverage>,
}

fn is_type_predicate(label: &str) -> bool {
    label.ends_with("type")
}

/// Coverage-weighted structuredness over resource types.
///
/// Types are the objects of predicates whose label ends in `type`. Untyped
/// resources are grouped by their set of outgoing predicates. Type
/// predicates are left out of `P(T)`, and types whose instances have no
/// other outgoing predicate are skipped.
/// `None` when no type remains.
pub fn coherence(graph: &RdfGraph) -> Option<Coherence> {
    let mut types: BTreeMap<String, BTreeSet<NodeId>> = BTreeMap::new();
    let mut typed: HashSet<NodeId> = HashSet::new();
    for t in graph.triples() {
        if is_type_predicate(graph.predicate_label(t.predicate)) {
            types.entry(graph.label(t.object).to_owned()).or_default().insert(t.subject);
            typed.insert(t.subject);
        }
    }
    let props = |n: NodeId| -> BTreeSet<&str> {
        graph
            .out_edges(n)
            .iter()
            .map(|(p, _)| graph.predicate_label(*p))
            .filter(|p| !is_type_predicate(p))
            .collect()
    };
    for n in graph.nodes() {
        if graph.is_literal(n) || typed.contains(&n) {
            continue;
        }
        let sig: Vec<&str> = props(n).into_iter().collect();
        if sig.is_empty() {
            continue;
        }
        types.entry(format!("[{}]", sig.join(" "))).or_default().insert(n);
    }

    let mut rows = Vec::new();
    for (name, instances) in &types {
        let mut have: BTreeMap<&str, usize> = BTreeMap::new();
        for n in instances {
            for p in props(*n) {
                *have.entry(p).or_default() += 1;
            }
        }
        if have.is_empty() {
            continue;
        }
        let total: usize = have.values().sum();
        let coverage = total as f64 / (have.len() * instances.len()) as f64;
        rows.push(TypeCoverage {
            type_name: name.clone(),
            instances: instances.len(),
            predicates: have.len(),
            coverage,
            weight: (have.len() + instances.len()) as f64,
        });
    }
    if rows.is_empty() {
        return None;
    }
    let denom: f64 = rows.iter().map(|r| r.weight).sum();
    let mut value = 0.0;
    for r in &mut rows {
        r.weight /= denom;
        value += r.weight * r.coverage;
    }
    Some(Coherence { value: value.min(1.0), per_type: rows })
}

/// Lowercased words, split on whitespace and ASCII punctuation.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| c.is_whitespace() || c.is_ascii_punctuation())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Diversity {
    pub words: usize,
    /// Attribute edges actually sampled.
    pub sampled: usize,
}

/// Distinct words among the literals of up to `sample` attribute edges
/// drawn uniformly without replacement.
pub fn literal_diversity(graph: &RdfGraph, sample: usize, seed: u64) -> Diversity {
    let attrs: Vec<NodeId> = graph
        .triples()
        .iter()
        .filter(|t| graph.edge_kind(t) == EdgeKind::Attribute)
        .map(|t| t.object)
        .collect();
    let picked: Vec<NodeId> = if sample >= attrs.len() {
        attrs
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rand::seq::index::sample(&mut rng, attrs.len(), sample)
            .into_iter()
            .map(|i| attrs[i])
            .collect()
    };
    let words: HashSet<String> = picked.iter().flat_map(|n| tokenize(graph.label(*n))).collect();
    Diversity {
        words: words.len(),
        sampled: picked.len(),
    }
}

pub const COHERENCE_BELOW: f64 = 0.8;
pub const SPECIALTY_ABOVE: f64 = 3.0;
pub const DIVERSITY_RATIO: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Benefit {
    Low,
    Medium,
    High,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenefitPrediction {
    pub label: Benefit,
    pub signals: usize,
    pub rule: String,
}

/// One signal each for low coherence, high specialty and high diversity
/// (distinct words per sampled edge); 0-1 signals is low, 2 medium, 3 high.
pub fn predict_benefit(coherence: Option<f64>, specialty: Option<f64>, diversity: Diversity) -> BenefitPrediction {
    let mut signals = 0;
    if coherence.is_some_and(|c| c < COHERENCE_BELOW) {
        signals += 1;
    }
    if specialty.is_some_and(|s| s > SPECIALTY_ABOVE) {
        signals += 1;
    }
    if diversity.sampled > 0 && diversity.words as f64 / diversity.sampled as f64 >= DIVERSITY_RATIO {
        signals += 1;
    }
    let label = match signals {
        0 | 1 => Benefit::Low,
        2 => Benefit::Medium,
        _ => Benefit::High,
    };
    BenefitPrediction {
        label,
        signals,
        rule: format!(
            "one signal each for coherence < {COHERENCE_BELOW}, specialty > {SPECIALTY_ABOVE}, \
             diversity/sampled >= {DIVERSITY_RATIO}; 0-1 low, 2 medium, 3 high"
        ),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub coherence: Option<f64>,
    pub specialty: Option<f64>,
    pub diversity: usize,
    pub sample_size: usize,
    pub sampled_edges: usize,
    pub per_predicate_kurtosis: Vec<PredicateKurtosis>,
    pub per_type_coverage: Vec<TypeCoverage>,
    pub benefit: BenefitPrediction,
}

pub fn profile(graph: &RdfGraph, sample: usize, seed: u64, opts: SpecialtyOptions) -> MetricsReport {
    let coh = coherence(graph);
    let spec = relationship_specialty(graph, opts);
    let div = literal_diversity(graph, sample, seed);
    let benefit = predict_benefit(coh.as_ref().map(|c| c.value), spec.as_ref().map(|s| s.value), div);
    MetricsReport {
        coherence: coh.as_ref().map(|c| c.value),
        specialty: spec.as_ref().map(|s| s.value),
        diversity: div.words,
        sample_size: sample,
        sampled_edges: div.sampled,
        per_predicate_kurtosis: spec.map(|s| s.per_predicate).unwrap_or_default(),
        per_type_coverage: coh.map(|c| c.per_type).unwrap_or_default(),
        benefit,
    }
}
