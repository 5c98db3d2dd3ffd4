//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs without the libtest harness so the report stays
//! readable; `cargo test -p rdfh-core --test acceptance` runs it alone.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::Rng;
use rdfh_core::graph::{parse_ntriples, GraphBuilder};
use rdfh_core::matcher::{build_keyword_profile, neighborhood_check, Connectivity};
use rdfh_core::metrics::{coherence, literal_diversity, pearson_kurtosis, relationship_specialty, SpecialtyOptions};
use rdfh_core::ni::approx_vertex_cover;
use rdfh_core::planner::{
    decide, estimate_complexity, literal_selectivity, neighborhood_selectivity, run_query, tune_thresholds,
    Evidence, LiteralSelectivity, Mode, DEFAULT_NGRAM, MAX_NGRAM,
};
use rdfh_core::query::{parse_query, PredicateEdge, QueryNode};
use rdfh_core::synth::{diverse_graph, path_graph, regular_graph};
use rdfh_core::workload::{generate_query, GenConfig};
use rdfh_core::{
    DatasetStats, Engine, ExecOptions, IdMap, NiIndex, NodeId, QueryTemplate, RdfGraph, Thresholds,
};

use common::{brute_force, random_graph, random_template, rng, Distances};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// The four index configurations used throughout.
fn indexes(g: &RdfGraph, map: &IdMap, m: usize) -> Vec<NiIndex> {
    let mut v: Vec<NiIndex> = (1..=3).map(|d| NiIndex::build(g, map, d, m).unwrap()).collect();
    v.push(NiIndex::build_vertex_cover(g, map, m).unwrap());
    v
}

fn index_name(i: usize) -> &'static str {
    ["1-hop", "2-hop", "3-hop", "vertex-cover"][i]
}

struct Case {
    graph: RdfGraph,
    template: QueryTemplate,
    matches: BTreeSet<Vec<NodeId>>,
}

/// Random (graph, template) pairs with a tractable brute-force answer.
fn corpus(count: usize) -> (Vec<Case>, usize) {
    let mut r = rng(0xACCE);
    let mut cases = Vec::with_capacity(count);
    let mut skipped = 0;
    while cases.len() < count {
        let nodes = if r.gen_bool(0.15) { r.gen_range(60..=200) } else { r.gen_range(4..=60) };
        let edges = r.gen_range(nodes / 2..=(3 * nodes).min(600));
        let graph = random_graph(&mut r, nodes, edges);
        let map = IdMap::build(&graph);
        let template = random_template(&mut r, &graph, &map, 8);
        let dist = Distances::new(&graph);
        match brute_force(&graph, &template, &dist, 20_000) {
            Some(matches) => cases.push(Case { graph, template, matches }),
            None => skipped += 1,
        }
    }
    (cases, skipped)
}

fn result_set(out: &rdfh_core::MatchOutput) -> BTreeSet<Vec<NodeId>> {
    out.results.iter().map(|r| r.binding.clone()).collect()
}

fn criterion_1(cases: &[Case], skipped: usize) -> Outcome {
    let mut r = rng(1);
    let mut failures = Vec::new();
    let (mut nonempty, mut pruned_runs) = (0, 0);
    for (i, c) in cases.iter().enumerate() {
        let map = IdMap::build(&c.graph);
        let idx = indexes(&c.graph, &map, r.gen_range(1..=6));
        let stats = DatasetStats::compute(&c.graph, DEFAULT_NGRAM, None).unwrap();
        let thresholds = Thresholds {
            iterations: [1, 10, 1000][r.gen_range(0..3)],
            joins: [1, 100, 1_000_000][r.gen_range(0..3)],
            selectivity: [0.5, 2.0, 10.0][r.gen_range(0..3)],
        };
        nonempty += usize::from(!c.matches.is_empty());
        let opts = ExecOptions::default();
        let runs = [
            (Mode::NoPrune, 1usize),
            (Mode::Prune, i % 4),
            (Mode::Auto, (i + 1) % 4),
        ];
        for (mode, which) in runs {
            let engine = Engine::new(&c.graph, &map, &idx[which]);
            let (out, decision) = run_query(&engine, &c.template, mode, &stats, &thresholds, &opts).unwrap();
            pruned_runs += usize::from(out.stats.pruned);
            if decision.is_some_and(|d| d.use_pruning != out.stats.pruned) {
                failures.push(format!("case {i}: auto plan not followed"));
            }
            if result_set(&out) != c.matches {
                failures.push(format!(
                    "case {i} {mode:?}/{}: {} results, oracle {}",
                    index_name(which),
                    out.results.len(),
                    c.matches.len()
                ));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{} pairs x 3 modes ({} with matches, {} pruned runs, {} oversized skipped){}",
            cases.len(),
            nonempty,
            pruned_runs,
            skipped,
            first_failures(&failures)
        ),
    )
}

fn first_failures(f: &[String]) -> String {
    if f.is_empty() {
        String::new()
    } else {
        format!("; {} failures, e.g. {}", f.len(), f[..f.len().min(3)].join(" | "))
    }
}

fn criterion_2(cases: &[Case]) -> Outcome {
    let mut violations = Vec::new();
    let mut eliminated_total = 0usize;
    for (i, c) in cases.iter().enumerate() {
        let map = IdMap::build(&c.graph);
        let idx = indexes(&c.graph, &map, 5);
        let engine = Engine::new(&c.graph, &map, &idx[0]);
        let prepared = engine.prepare(&c.template);
        for (which, index) in idx.iter().enumerate() {
            let hops = index.variant().max_depth();
            for q in 0..c.template.node_count() {
                let profile = build_keyword_profile(&c.template, q, hops);
                let used: BTreeSet<NodeId> = c.matches.iter().map(|m| m[q]).collect();
                for &n in &prepared.candidates[q] {
                    if !neighborhood_check(n, &profile, index, &prepared.intervals) {
                        eliminated_total += 1;
                        if used.contains(&n) {
                            violations.push(format!("case {i} q{q} {} {}", index_name(which), c.graph.label(n)));
                        }
                    }
                }
            }
        }
    }
    outcome(
        violations.is_empty() && eliminated_total > 0,
        format!(
            "{} candidates eliminated over k=1,2,3 and vertex cover, {} appear in oracle matches{}",
            eliminated_total,
            violations.len(),
            first_failures(&violations)
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut r = rng(3);
    let mut checks = 0usize;
    let mut failures = Vec::new();
    for gi in 0..50 {
        let nodes = r.gen_range(5..=45);
        let edges = r.gen_range(nodes..=3 * nodes);
        let g = random_graph(&mut r, nodes, edges);
        let map = IdMap::build(&g);
        let dist = Distances::new(&g);
        for (which, index) in indexes(&g, &map, r.gen_range(1..=6)).iter().enumerate() {
            let mut conn = Connectivity::new(index, &map);
            for a in g.nodes() {
                for b in g.nodes() {
                    for d_c in 1..=6 {
                        checks += 1;
                        if conn.check(a, b, d_c) != dist.within(a, b, d_c) {
                            failures.push(format!("graph {gi} {} {a}->{b} d_c={d_c}", index_name(which)));
                        }
                    }
                }
            }
        }
    }
    outcome(failures.is_empty(), format!("{checks} checks against BFS{}", first_failures(&failures)))
}

/// Smallest vertex cover of the undirected version of `g` (exhaustive).
fn exact_min_cover(g: &RdfGraph) -> usize {
    let n = g.node_count();
    let edges: Vec<(usize, usize)> = g.triples().iter().map(|t| (t.subject.index(), t.object.index())).collect();
    (0u32..1 << n)
        .filter(|set| edges.iter().all(|(a, b)| set & (1 << a) != 0 || set & (1 << b) != 0))
        .map(|set| set.count_ones() as usize)
        .min()
        .unwrap_or(0)
}

fn criterion_4() -> Outcome {
    let mut r = rng(4);
    let mut failures = Vec::new();
    let (mut entries, mut ratio_checked) = (0usize, 0usize);
    let mut worst_ratio: f64 = 0.0;
    for gi in 0..120 {
        let nodes = if gi % 2 == 0 { r.gen_range(2..=16) } else { r.gen_range(10..=80) };
        let edges = r.gen_range(1..=3 * nodes);
        let g = random_graph(&mut r, nodes, edges);
        let map = IdMap::build(&g);
        let dist = Distances::new(&g);
        let m = r.gen_range(1..=6);
        for (which, index) in indexes(&g, &map, m).iter().enumerate() {
            for n in g.nodes() {
                let depth = index.depth(n);
                for d in 1..=depth {
                    for forward in [true, false] {
                        let signed = if forward { d as i8 } else { -(d as i8) };
                        let mut got: Vec<u32> = index
                            .entries(n)
                            .filter(|e| e.distance == signed)
                            .flat_map(|e| e.neighbor_ids.iter().copied())
                            .collect();
                        got.sort_unstable();
                        let mut want: Vec<u32> = g
                            .nodes()
                            .filter(|&v| {
                                let dd = if forward { dist.get(n, v) } else { dist.get(v, n) };
                                dd as u32 == d as u32
                            })
                            .map(|v| map.id_of(v))
                            .collect();
                        want.sort_unstable();
                        if got != want {
                            failures.push(format!("graph {gi} {} node {n} distance {signed}", index_name(which)));
                        }
                    }
                }
                for e in index.entries(n) {
                    entries += 1;
                    if e.count() > m || e.count() == 0 {
                        failures.push(format!("graph {gi} entry of size {} with m={m}", e.count()));
                    }
                }
            }
        }
        let cover = approx_vertex_cover(&g);
        let in_cover: BTreeSet<NodeId> = cover.iter().copied().collect();
        if !g.triples().iter().all(|t| in_cover.contains(&t.subject) || in_cover.contains(&t.object)) {
            failures.push(format!("graph {gi}: cover misses an edge"));
        }
        if g.node_count() <= 16 {
            let best = exact_min_cover(&g);
            ratio_checked += 1;
            if best > 0 {
                worst_ratio = worst_ratio.max(cover.len() as f64 / best as f64);
            }
            if cover.len() > 2 * best {
                failures.push(format!("graph {gi}: cover {} vs optimum {best}", cover.len()));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{entries} entries checked against BFS layers; {ratio_checked} covers vs exact optimum, worst ratio {worst_ratio:.2}{}",
            first_failures(&failures)
        ),
    )
}

const G1: &str = r#"<ex:p1> <ex:author> <ex:a1> .
<ex:a1> <ex:name> "Philip S.Yu" .
<ex:p1> <ex:booktitle> "VLDB" .
<ex:p1> <ex:title> "T1" .
<ex:p2> <ex:author> <ex:a2> .
<ex:a2> <ex:name> "Jiawei Han" .
<ex:p2> <ex:cite> <ex:p1> .
"#;

fn criterion_5() -> Outcome {
    let mut checks: Vec<(&str, f64, f64)> = Vec::new();
    let g1 = parse_ntriples(G1).unwrap();

    let stats = DatasetStats::compute(&g1, DEFAULT_NGRAM, None).unwrap();
    checks.push(("|E|", stats.edge_total as f64, 7.0));
    checks.push(("s(author)", stats.pred_sel["ex:author"], 2.0 / 7.0));
    checks.push(("s(cite)", stats.pred_sel["ex:cite"], 1.0 / 7.0));
    checks.push(("s(name)", stats.pred_sel["ex:name"], 2.0 / 7.0));
    checks.push(("f abc/abd/xyz n=2", literal_selectivity(&["abc", "abd", "xyz"], 2), (2.0 + 1.0) / 2.0 / 3.0));
    checks.push(("f single literal", literal_selectivity(&["solo"], 5), 1.0));

    let mut st = stats.clone();
    st.pred_sel.clear();
    st.lit_sel.clear();
    st.pred_sel.insert("rel".into(), 2.0 / 7.0);
    st.pred_sel.insert("attr".into(), 1.0 / 7.0);
    st.lit_sel.insert("attr".into(), LiteralSelectivity { unique: 1, by_n: vec![1.0; MAX_NGRAM] });
    let node = |name: &str| QueryNode { name: name.into(), keyword: None };
    let pedge = |from, p: &str, to| PredicateEdge { from, predicate: Some(p.into()), to };
    let t = QueryTemplate::new(vec![node("q"), node("a"), node("b")], vec![pedge(0, "rel", 1), pedge(0, "attr", 2)], vec![])
        .unwrap();
    let expected_n = (f64::ln(2.0 / 7.0) + f64::ln(1.0 / 7.0 * 1.0)).abs();
    checks.push(("N example", neighborhood_selectivity(&t, 0, &st, 1).value, expected_n));
    checks.push(("N example ~3.1987", (neighborhood_selectivity(&t, 0, &st, 1).value * 1e4).round(), 31987.0));
    let lone = QueryTemplate::new(vec![node("q")], vec![], vec![]).unwrap();
    checks.push(("N no edges", neighborhood_selectivity(&lone, 0, &st, 2).value, 0.0));
    let double = QueryTemplate::new(vec![node("q"), node("a"), node("b")], vec![pedge(0, "attr", 1), pedge(0, "attr", 2)], vec![])
        .unwrap();
    checks.push(("N doubled attribute", neighborhood_selectivity(&double, 0, &st, 1).value, 2.0 * f64::ln(1.0 / 7.0).abs()));

    let tree = |root| rdfh_core::matcher::DTree { root, edges: vec![] };
    let (i, j) = estimate_complexity(&[vec![tree(0), tree(1)]], &[vec![0, 1]], &[3, 10]);
    checks.push(("complexity iterations", i as f64, 10.0));
    checks.push(("complexity joins", j as f64, 30.0));
    let (i, j) = estimate_complexity(&[vec![tree(0)]], &[vec![0]], &[7]);
    checks.push(("single tree", (i + j) as f64, 14.0));
    let (i, j) = estimate_complexity(&[vec![tree(0), tree(1)]], &[vec![0, 1]], &[0, 10]);
    checks.push(("empty root", (i + j) as f64, 0.0));

    let th = Thresholds { iterations: 100, joins: 1000, selectivity: 5.0 };
    let ev = |a, b, n| Evidence { max_iterations: a, est_joins: b, max_neighborhood_selectivity: n, ..Default::default() };
    checks.push(("decide (150,500,6.2)", decide(ev(150, 500, 6.2), &th, 2).use_pruning as u8 as f64, 1.0));
    checks.push(("decide (10,20,6.2)", decide(ev(10, 20, 6.2), &th, 2).use_pruning as u8 as f64, 0.0));
    checks.push(("decide (150,500,2.0)", decide(ev(150, 500, 2.0), &th, 2).use_pruning as u8 as f64, 0.0));

    checks.push(("kurtosis {-1,1}", pearson_kurtosis(&[-1.0, 1.0]).unwrap(), 1.0));
    // mean 1/4: mu4 = (3 * (1/4)^4 + (3/4)^4) / 4, sigma^2 = (3 * (1/4)^2 + (3/4)^2) / 4
    let mu4 = (3.0 * 0.25f64.powi(4) + 0.75f64.powi(4)) / 4.0;
    let var = (3.0 * 0.25f64.powi(2) + 0.75f64.powi(2)) / 4.0;
    checks.push(("kurtosis {0,0,0,1}", pearson_kurtosis(&[0.0, 0.0, 0.0, 1.0]).unwrap(), mu4 / (var * var)));
    checks.push(("kurtosis {5,5,5}", pearson_kurtosis(&[5.0, 5.0, 5.0]).unwrap(), 1.0));

    checks.push(("RS(G1)", relationship_specialty(&g1, SpecialtyOptions::default()).unwrap().value, 1.0));

    let mut b = GraphBuilder::new();
    b.add_str("ex:A", "rdf:type", "ex:T", false);
    b.add_str("ex:B", "rdf:type", "ex:T", false);
    b.add_str("ex:A", "ex:p", "1", true);
    b.add_str("ex:A", "ex:q", "2", true);
    b.add_str("ex:B", "ex:p", "3", true);
    checks.push(("coherence example", coherence(&b.finish()).unwrap().value, 3.0 / 4.0));

    let mut b = GraphBuilder::new();
    for (s, l) in [("ex:a", "red car"), ("ex:b", "red bus"), ("ex:c", "blue car")] {
        b.add_str(s, "ex:label", l, true);
    }
    checks.push(("diversity example", literal_diversity(&b.finish(), 3, 0).words as f64, 4.0));

    let bad: Vec<String> = checks
        .iter()
        .filter(|(_, got, want)| (got - want).abs() > 1e-9 * want.abs().max(1e-300) && got != want)
        .map(|(name, got, want)| format!("{name}: got {got}, want {want}"))
        .collect();
    outcome(bad.is_empty(), format!("{} spot checks{}", checks.len(), first_failures(&bad)))
}

/// Papers, their authors and a citation chain, for the citation
/// example: one VLDB paper by Philip S.Yu cited directly by a Jiawei Han
/// paper, one reached over a two-hop citation path, plus near misses.
const CITATIONS: &str = r#"<ex:Paper1> <ex:title> "Mining Frequent Patterns" .
<ex:Paper1> <ex:booktitle> "SIGMOD" .
<ex:Paper1> <ex:author> <ex:People1> .
<ex:People1> <ex:name> "Jiawei Han" .
<ex:Paper1> <ex:cite> <ex:Paper2> .
<ex:Paper1> <ex:cite> <ex:Paper4> .
<ex:Paper1> <ex:cite> <ex:Paper5> .
<ex:Paper2> <ex:title> "Graph Indexing" .
<ex:Paper2> <ex:booktitle> "VLDB" .
<ex:Paper2> <ex:author> <ex:People2> .
<ex:People2> <ex:name> "Philip S.Yu" .
<ex:Paper4> <ex:title> "Stream Clustering" .
<ex:Paper4> <ex:booktitle> "ICDE" .
<ex:Paper4> <ex:author> <ex:People3> .
<ex:People3> <ex:name> "Wei Wang" .
<ex:Paper4> <ex:cite> <ex:Paper3> .
<ex:Paper3> <ex:title> "Top-k Query Processing" .
<ex:Paper3> <ex:booktitle> "VLDB" .
<ex:Paper3> <ex:author> <ex:People2> .
<ex:Paper5> <ex:title> "Outlier Detection" .
<ex:Paper5> <ex:booktitle> "ICDE" .
<ex:Paper5> <ex:author> <ex:People2> .
<ex:Paper6> <ex:title> "Uncertain Data" .
<ex:Paper6> <ex:booktitle> "VLDB" .
<ex:Paper6> <ex:author> <ex:People2> .
"#;

const CITATION_QUERY: &str = r#"{
  "nodes": [
    {"id": "?p", "keyword": "Paper"},
    {"id": "?t", "keyword": "*"},
    {"id": "?n1", "keyword": "Philip"},
    {"id": "?n2", "keyword": "Jiawei"},
    {"id": "?q", "keyword": "Paper"},
    {"id": "?v", "keyword": "VLDB"}
  ],
  "edges": [
    {"from": "?p", "predicate": "title", "to": "?t"},
    {"from": "?p", "predicate": "booktitle", "to": "?v"}
  ],
  "connections": [
    {"from": "?p", "to": "?n1", "max_distance": 2, "directed": true},
    {"from": "?q", "to": "?n2", "max_distance": 2, "directed": true},
    {"from": "?q", "to": "?p", "max_distance": 4, "directed": false}
  ]
}"#;

fn criterion_6() -> Outcome {
    // Node labels are local names so that "Paper" prefixes paper IDs.
    let text = CITATIONS.replace("<ex:", "<");
    let g = parse_ntriples(&text).unwrap();
    let map = IdMap::build(&g);
    let t = parse_query(CITATION_QUERY).unwrap();
    let stats = DatasetStats::compute(&g, DEFAULT_NGRAM, None).unwrap();
    let oracle = brute_force(&g, &t, &Distances::new(&g), 1000).unwrap();
    let mut counts = Vec::new();
    let mut agree = true;
    for index in indexes(&g, &map, 5) {
        let engine = Engine::new(&g, &map, &index);
        for mode in [Mode::NoPrune, Mode::Prune, Mode::Auto] {
            let opts = ExecOptions { instantiate_paths: true, ..Default::default() };
            let (out, _) = run_query(&engine, &t, mode, &stats, &Thresholds::default(), &opts).unwrap();
            counts.push(out.results.len());
            agree &= result_set(&out) == oracle;
        }
    }
    let papers: Vec<&str> = oracle.iter().map(|m| g.label(m[0])).collect();
    outcome(
        agree && oracle.len() == 2 && counts.iter().all(|c| *c == 2),
        format!("matches per run {counts:?}; ?p bound to {papers:?}"),
    )
}

/// Templates of mixed sizes 4/6/8 whose evaluation stays under
/// `PROBE_ROWS` intermediate rows with pruning and ten times that without.
/// Type nodes are hubs, and templates grown through them can have millions
/// of matches; the bound keeps the unpruned runs within memory.
const PROBE_ROWS: usize = 200_000;

fn workload(engine: &Engine<'_>, stats: &DatasetStats, count: usize, seed: u64) -> (Vec<QueryTemplate>, usize) {
    let sizes = [4, 6, 8];
    let fits = |t: &QueryTemplate, mode: Mode, rows: usize| {
        let probe = ExecOptions { max_rows: Some(rows), ..Default::default() };
        match run_query(engine, t, mode, stats, &Thresholds::default(), &probe) {
            Ok(_) => true,
            Err(rdfh_core::Error::RowLimit(_)) => false,
            Err(e) => panic!("{e}"),
        }
    };
    let mut templates = Vec::with_capacity(count);
    let mut dropped = 0;
    let mut s = seed;
    while templates.len() < count {
        let size = sizes[templates.len() % sizes.len()];
        let cfg = GenConfig { size, seed: s, ..Default::default() };
        s += 1;
        let Ok(q) = generate_query(engine.graph, engine.idmap, &cfg) else {
            continue;
        };
        if fits(&q.template, Mode::Prune, PROBE_ROWS) && fits(&q.template, Mode::NoPrune, 10 * PROBE_ROWS) {
            templates.push(q.template);
        } else {
            dropped += 1;
        }
    }
    (templates, dropped)
}

/// Median-of-3 wall time of a query in one mode, planning included.
fn timed(engine: &Engine<'_>, t: &QueryTemplate, mode: Mode, stats: &DatasetStats, th: &Thresholds) -> (Duration, usize, bool) {
    let mut times = Vec::with_capacity(3);
    let mut results = 0;
    let mut pruned = false;
    for _ in 0..3 {
        let start = Instant::now();
        let (out, _) = run_query(engine, t, mode, stats, th, &ExecOptions::default()).unwrap();
        times.push(start.elapsed());
        results = out.results.len();
        pruned = out.stats.pruned;
    }
    times.sort_unstable();
    (times[1], results, pruned)
}

struct ModeTotals {
    auto: Duration,
    prune: Duration,
    noprune: Duration,
    auto_pruned: usize,
    dropped: usize,
    consistent: bool,
}

fn run_workload(g: &RdfGraph, tune_seed: u64, test_seed: u64) -> (ModeTotals, Thresholds) {
    let map = IdMap::build(g);
    let index = NiIndex::build(g, &map, 2, 5).unwrap();
    let engine = Engine::new(g, &map, &index);
    let stats = DatasetStats::compute(g, DEFAULT_NGRAM, None).unwrap();
    let (tuning, _) = workload(&engine, &stats, 24, tune_seed);
    let th = tune_thresholds(&engine, &stats, &tuning, 2).unwrap().thresholds;
    let (test, dropped) = workload(&engine, &stats, 42, test_seed);
    let mut totals = ModeTotals {
        auto: Duration::ZERO,
        prune: Duration::ZERO,
        noprune: Duration::ZERO,
        auto_pruned: 0,
        dropped,
        consistent: true,
    };
    for t in &test {
        let (a, ra, pruned) = timed(&engine, t, Mode::Auto, &stats, &th);
        let (p, rp, _) = timed(&engine, t, Mode::Prune, &stats, &th);
        let (n, rn, _) = timed(&engine, t, Mode::NoPrune, &stats, &th);
        totals.auto += a;
        totals.prune += p;
        totals.noprune += n;
        totals.auto_pruned += usize::from(pruned);
        totals.consistent &= ra == rp && rp == rn && rn > 0;
    }
    (totals, th)
}

fn criterion_7() -> Outcome {
    let diverse = diverse_graph(6_500, 7);
    let regular = regular_graph(4_000, 7);
    let (d, dth) = run_workload(&diverse, 1_000, 0);
    let (r, rth) = run_workload(&regular, 1_000, 0);
    let ms = |x: Duration| x.as_secs_f64() * 1e3;
    let diverse_ok = d.auto.as_secs_f64() <= 1.10 * d.prune.min(d.noprune).as_secs_f64();
    let regular_ok = r.auto.as_secs_f64() <= 1.10 * r.noprune.as_secs_f64();
    outcome(
        diverse_ok && regular_ok && d.consistent && r.consistent,
        format!(
            "diverse ({} triples, {} hub templates dropped, tau {:?}): auto {:.1} ms ({} pruned), prune {:.1} ms, \
             noprune {:.1} ms; regular ({} triples, {} dropped, tau {:?}): auto {:.1} ms ({} pruned), prune {:.1} ms, \
             noprune {:.1} ms",
            diverse.edge_count(),
            d.dropped,
            (dth.iterations, dth.joins, dth.selectivity),
            ms(d.auto),
            d.auto_pruned,
            ms(d.prune),
            ms(d.noprune),
            regular.edge_count(),
            r.dropped,
            (rth.iterations, rth.joins, rth.selectivity),
            ms(r.auto),
            r.auto_pruned,
            ms(r.prune),
            ms(r.noprune),
        ),
    )
}

/// Stars `c -link-> a, c -link-> b` with the connection `a ~5~> b`, one
/// per centre keyword `ex:n1` .. `ex:n9` (about 1100 centres each). The
/// endpoints are spread over most of the graph, so the checks touch
/// thousands of distinct neighbor sets.
fn connection_workload() -> Vec<QueryTemplate> {
    (1..=9)
        .map(|d| {
            parse_query(&format!(
                r#"{{"nodes": [{{"id": "c", "keyword": "ex:n{d}"}}, {{"id": "a"}}, {{"id": "b"}}],
                    "edges": [{{"from": "c", "predicate": "ex:link", "to": "a"}},
                              {{"from": "c", "predicate": "ex:link", "to": "b"}}],
                    "connections": [{{"from": "a", "to": "b", "max_distance": 5, "directed": true}}]}}"#
            ))
            .unwrap()
        })
        .collect()
}

fn criterion_8() -> Outcome {
    let g = path_graph(4000, 3, 8);
    let map = IdMap::build(&g);
    let stats = DatasetStats::compute(&g, DEFAULT_NGRAM, None).unwrap();
    let templates = connection_workload();
    let mut fractions = Vec::new();
    let mut checks = Vec::new();
    for d in 1..=3 {
        let index = NiIndex::build(&g, &map, d, 5).unwrap();
        let engine = Engine::new(&g, &map, &index);
        let (mut conn, mut total) = (0.0, 0.0);
        let mut n_checks = 0;
        for t in &templates {
            // fastest of five runs, to keep scheduler noise out of the ratio
            let mut best: Option<(f64, f64)> = None;
            for _ in 0..5 {
                let (out, _) = run_query(&engine, t, Mode::NoPrune, &stats, &Thresholds::default(), &ExecOptions::default()).unwrap();
                let s = &out.stats;
                let sample = (s.connectivity_time.as_secs_f64(), s.total_time.as_secs_f64());
                n_checks = n_checks.max(s.connectivity_checks);
                if best.is_none_or(|b| sample.1 < b.1) {
                    best = Some(sample);
                }
            }
            let (c, tt) = best.unwrap();
            conn += c;
            total += tt;
        }
        fractions.push(conn / total);
        checks.push(n_checks);
    }
    let monotone = fractions.windows(2).all(|w| w[1] <= w[0]);
    outcome(
        monotone,
        format!(
            "connectivity share of query time at depth 1/2/3: {:.3} / {:.3} / {:.3} ({} checks per query at most)",
            fractions[0], fractions[1], fractions[2], checks[0]
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut r = rng(9);
    let mut graphs: Vec<(String, RdfGraph)> = (0..60)
        .map(|i| {
            let n = r.gen_range(2..=120);
            let edges = r.gen_range(1..=3 * n);
            (format!("random {i}"), random_graph(&mut r, n, edges))
        })
        .collect();
    graphs.push(("fixture".into(), parse_ntriples(G1).unwrap()));
    graphs.push(("diverse".into(), diverse_graph(3000, 9)));
    graphs.push(("regular".into(), regular_graph(3000, 9)));
    graphs.push(("paths".into(), path_graph(2000, 3, 9)));
    let mut bad = Vec::new();
    let mut sample = String::new();
    for (name, g) in &graphs {
        let map = IdMap::build(g);
        let idx = indexes(g, &map, 5);
        let e: Vec<usize> = idx.iter().map(NiIndex::total_entries).collect();
        let ids: Vec<usize> = idx.iter().map(NiIndex::total_ids).collect();
        // order: 1-hop <= VC <= 2-hop <= 3-hop
        let ordered = |v: &[usize]| v[0] <= v[3] && v[3] <= v[1] && v[1] <= v[2];
        if !ordered(&e) || !ordered(&ids) {
            bad.push(format!("{name}: entries {e:?}"));
        }
        if name == "diverse" {
            sample = format!("diverse graph entries 1-hop {} / VC {} / 2-hop {} / 3-hop {}", e[0], e[3], e[1], e[2]);
        }
    }
    outcome(bad.is_empty(), format!("{} graphs; {sample}{}", graphs.len(), first_failures(&bad)))
}

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn main() {
    let started = Instant::now();
    let (cases, skipped) = corpus(520);
    let criteria: Vec<Criterion<'_>> = vec![
        ("oracle equivalence", Box::new(|| criterion_1(&cases, skipped))),
        ("pruning soundness", Box::new(|| criterion_2(&cases))),
        ("connectivity check", Box::new(criterion_3)),
        ("index correctness", Box::new(criterion_4)),
        ("formula spot checks", Box::new(criterion_5)),
        ("citation example", Box::new(criterion_6)),
        ("hybrid advantage", Box::new(criterion_7)),
        ("index monotonicity", Box::new(criterion_8)),
        ("space trend", Box::new(criterion_9)),
    ];
    // ACCEPTANCE_ONLY=7,8 runs a subset
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if only.as_ref().is_some_and(|o| !o.contains(&(i + 1))) {
            continue;
        }
        let t = Instant::now();
        let o = run();
        failed += usize::from(!o.pass);
        println!(
            "criterion {} [{}] {}: {} ({:.1}s)",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            name,
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    let ran = only.map_or(criteria.len(), |o| o.len());
    println!("{} of {} criteria passed in {:.1}s", ran - failed, ran, started.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
