//! `rdfh`: build a workspace from an N-Triples file, then profile, tune,
//! query and benchmark it.

mod workspace;

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use rdfh_core::graph::parse_ntriples;
use rdfh_core::metrics::{profile, SpecialtyOptions, DEFAULT_SAMPLE};
use rdfh_core::ni::{DEFAULT_BINNING, DEFAULT_DMAX};
use rdfh_core::planner::{plan, run_query, tune_thresholds, DEFAULT_NGRAM};
use rdfh_core::query::parse_query;
use rdfh_core::synth::{diverse_graph, path_graph, regular_graph};
use rdfh_core::workload::{generate_query, GenConfig};
use rdfh_core::{DatasetStats, Engine, ExecOptions, IdMap, MatchOutput, Mode, NiIndex, QueryTemplate, RdfGraph};
use serde_json::{json, Value};

use workspace::Workspace;

#[derive(Parser)]
#[command(name = "rdfh", version, about = "Keyword template matching over RDF graphs")]
struct Cli {
    /// Workspace directory.
    #[arg(short, long, global = true, default_value = "rdfh-workspace")]
    workspace: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an N-Triples file into a new workspace.
    Ingest {
        file: PathBuf,
        /// Workspace to create (overrides --workspace).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Count resource/literal nodes and relationship/attribute edges.
    Classify,
    /// Build the neighborhood index.
    #[command(group(ArgGroup::new("variant").args(["dmax", "vertex_cover"])))]
    Index {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        dmax: Option<u8>,
        #[arg(long)]
        vertex_cover: bool,
        #[arg(long, default_value_t = DEFAULT_BINNING)]
        binning: usize,
    },
    /// Report coherence, relationship specialty and literal diversity.
    Profile {
        #[arg(long, default_value_t = DEFAULT_SAMPLE)]
        sample: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Count object-side participation in relationship specialty.
        #[arg(long)]
        count_objects: bool,
        /// Include resources with zero occurrences in relationship specialty.
        #[arg(long)]
        include_zeros: bool,
    },
    /// Compute the planner's predicate and literal statistics.
    Stats {
        #[arg(long, default_value_t = DEFAULT_NGRAM)]
        ngram: usize,
        /// Estimate from this many sampled triples.
        #[arg(long)]
        sample: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate query templates from random subgraphs.
    GenQueries {
        /// Template sizes, used in rotation.
        #[arg(long, value_delimiter = ',', default_value = "4")]
        size: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        cedge_prob: f64,
        /// Literal keywords match between LO and HI labels.
        #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
        match_cap: Option<Vec<usize>>,
        #[arg(short, long, default_value = "queries")]
        out: PathBuf,
    },
    /// Fit the planner thresholds on a directory of templates.
    Tune {
        #[arg(long)]
        queries: PathBuf,
    },
    /// Print the planner thresholds, or override some of them.
    Thresholds {
        #[arg(long)]
        iterations: Option<u64>,
        #[arg(long)]
        joins: Option<u64>,
        #[arg(long)]
        selectivity: Option<f64>,
    },
    /// Match a template and print one JSON line per result.
    Query {
        #[arg(long)]
        template: PathBuf,
        #[arg(long, default_value = "auto")]
        mode: Mode,
        /// Attach shortest paths for connection edges.
        #[arg(long)]
        paths: bool,
        /// Print the plan decision without executing.
        #[arg(long)]
        explain: bool,
        /// Process intra-component connection edges first.
        #[arg(long)]
        invert_cedge_order: bool,
        /// Abort when an intermediate result exceeds this many rows.
        #[arg(long)]
        max_rows: Option<usize>,
    },
    /// Time every template of a directory under each mode.
    Bench {
        #[arg(long)]
        queries: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "auto,prune,noprune")]
        modes: Vec<Mode>,
        /// Runs per query and mode; the median is reported.
        #[arg(long, default_value_t = 3)]
        repeat: usize,
        #[arg(long)]
        max_rows: Option<usize>,
    },
    /// Write a synthetic graph as N-Triples.
    GenGraph {
        #[arg(long, value_enum)]
        kind: GraphKind,
        #[arg(long)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphKind {
    Diverse,
    Regular,
    Paths,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let ws = Workspace::new(&cli.workspace);
    match cli.command {
        Command::Ingest { file, output } => {
            let ws = output.map_or(ws, Workspace::new);
            let text = fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let start = Instant::now();
            let graph = parse_ntriples(&text).with_context(|| format!("parsing {}", file.display()))?;
            let manifest = ws.create(&graph, &file.display().to_string())?;
            log::info!("ingested {} triples in {:.2?}", graph.edge_count(), start.elapsed());
            print_json(&json!({ "manifest": manifest, "classes": graph.classify() }))
        }
        Command::Classify => print_json(&ws.graph()?.classify()),
        Command::Index { dmax, vertex_cover, binning } => {
            let graph = ws.graph()?;
            let map = IdMap::build(&graph);
            let start = Instant::now();
            let index = if vertex_cover {
                NiIndex::build_vertex_cover(&graph, &map, binning)?
            } else {
                NiIndex::build(&graph, &map, dmax.unwrap_or(DEFAULT_DMAX), binning)?
            };
            log::info!("built index in {:.2?}", start.elapsed());
            print_json(&ws.save_index(&index)?)
        }
        Command::Profile { sample, seed, count_objects, include_zeros } => {
            if sample == 0 {
                bail!("--sample must be at least 1");
            }
            let graph = ws.graph()?;
            print_json(&profile(&graph, sample, seed, SpecialtyOptions { count_objects, include_zeros }))
        }
        Command::Stats { ngram, sample, seed } => {
            let graph = ws.graph()?;
            let stats = DatasetStats::compute(&graph, ngram, sample.map(|k| (k, seed)))?;
            ws.save_stats(&stats)?;
            print_json(&json!({
                "edge_total": stats.edge_total,
                "predicates": stats.pred_sel.len(),
                "attribute_predicates": stats.lit_sel.len(),
                "ngram": stats.ngram,
                "sampled": stats.sampled,
            }))
        }
        Command::GenQueries { size, count, seed, cedge_prob, match_cap, out } => {
            gen_queries(&ws, &size, count, seed, cedge_prob, match_cap, &out)
        }
        Command::Tune { queries } => {
            let graph = ws.graph()?;
            let index = ws.index(&graph)?;
            let stats = ws.stats()?;
            let map = IdMap::build(&graph);
            let engine = Engine::new(&graph, &map, &index);
            let templates: Vec<QueryTemplate> = load_queries(&queries)?.into_iter().map(|(_, t)| t).collect();
            let report = tune_thresholds(&engine, &stats, &templates, index.variant().max_depth())?;
            ws.save_thresholds(&report.thresholds)?;
            print_json(&report)
        }
        Command::Thresholds { iterations, joins, selectivity } => {
            ws.manifest()?;
            let mut th = ws.thresholds()?;
            if iterations.is_some() || joins.is_some() || selectivity.is_some() {
                th.iterations = iterations.unwrap_or(th.iterations);
                th.joins = joins.unwrap_or(th.joins);
                th.selectivity = selectivity.unwrap_or(th.selectivity);
                th.validate()?;
                ws.save_thresholds(&th)?;
            }
            print_json(&th)
        }
        Command::Query { template, mode, paths, explain, invert_cedge_order, max_rows } => {
            let opts = ExecOptions {
                instantiate_paths: paths,
                invert_connection_order: invert_cedge_order,
                max_rows,
                ..Default::default()
            };
            query(&ws, &template, mode, explain, &opts)
        }
        Command::Bench { queries, modes, repeat, max_rows } => bench(&ws, &queries, &modes, repeat.max(1), max_rows),
        Command::GenGraph { kind, size, seed, out } => {
            let graph = match kind {
                GraphKind::Diverse => diverse_graph(size, seed),
                GraphKind::Regular => regular_graph(size, seed),
                GraphKind::Paths => path_graph(size, 3, seed),
            };
            fs::write(&out, graph.to_ntriples()).with_context(|| format!("writing {}", out.display()))?;
            print_json(&json!({ "file": out, "nodes": graph.node_count(), "triples": graph.edge_count() }))
        }
    }
}

fn gen_queries(
    ws: &Workspace,
    sizes: &[usize],
    count: usize,
    seed: u64,
    cedge_prob: f64,
    match_cap: Option<Vec<usize>>,
    out: &Path,
) -> Result<()> {
    if sizes.is_empty() {
        bail!("--size needs at least one value");
    }
    let graph = ws.graph()?;
    let map = IdMap::build(&graph);
    let match_cap = match match_cap.as_deref() {
        Some(&[lo, hi]) => (lo, hi),
        _ => GenConfig::default().match_cap,
    };
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut entries = Vec::new();
    for i in 0..count {
        let cfg = GenConfig {
            size: sizes[i % sizes.len()],
            seed: seed.wrapping_add(i as u64),
            match_cap,
            connection_edge_prob: cedge_prob,
        };
        cfg.validate()?;
        let q = match generate_query(&graph, &map, &cfg) {
            Ok(q) => q,
            Err(e) => {
                log::warn!("query {i}: {e}");
                continue;
            }
        };
        let file = format!("q{i:04}.json");
        fs::write(out.join(&file), q.template.to_json())?;
        let source: Vec<&str> = q.source.iter().map(|n| graph.label(*n)).collect();
        entries.push(json!({ "file": file, "size": cfg.size, "seed": cfg.seed, "source": source }));
    }
    let manifest = json!({
        "match_cap": match_cap,
        "connection_edge_prob": cedge_prob,
        "queries": entries,
    });
    fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    print_json(&json!({ "dir": out, "generated": entries.len(), "requested": count }))
}

/// Every `*.json` template in `dir` except the generator's manifest, by name.
fn load_queries(dir: &Path) -> Result<Vec<(String, QueryTemplate)>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json") && p.file_name().is_some_and(|n| n != "manifest.json"))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no query templates in {}; run `rdfh gen-queries` first", dir.display());
    }
    files
        .into_iter()
        .map(|p| {
            let text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
            let t = parse_query(&text).with_context(|| format!("parsing {}", p.display()))?;
            Ok((p.file_name().unwrap().to_string_lossy().into_owned(), t))
        })
        .collect()
}

/// Result lines ordered by their sorted `(query node, label)` pairs.
fn canonical_rows(graph: &RdfGraph, template: &QueryTemplate, out: &MatchOutput) -> Vec<Value> {
    let names: Vec<&str> = template.nodes().iter().map(|n| n.name.as_str()).collect();
    let mut rows: Vec<(Vec<(&str, &str)>, Value)> = out
        .results
        .iter()
        .map(|r| {
            let mut pairs: Vec<(&str, &str)> = names.iter().zip(&r.binding).map(|(q, n)| (*q, graph.label(*n))).collect();
            pairs.sort_unstable();
            let bindings: serde_json::Map<String, Value> =
                pairs.iter().map(|(q, l)| (q.to_string(), Value::from(*l))).collect();
            let mut row = json!({ "bindings": bindings });
            if let Some(paths) = &r.paths {
                let paths: Vec<Value> = paths
                    .iter()
                    .map(|ps| {
                        let labels: Vec<Vec<&str>> =
                            ps.paths.iter().map(|p| p.iter().map(|n| graph.label(*n)).collect()).collect();
                        json!({ "paths": labels, "truncated": ps.truncated })
                    })
                    .collect();
                row["paths"] = Value::from(paths);
            }
            (pairs, row)
        })
        .collect();
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    rows.into_iter().map(|(_, v)| v).collect()
}

fn query(ws: &Workspace, file: &Path, mode: Mode, explain: bool, opts: &ExecOptions) -> Result<()> {
    let text = fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let template = parse_query(&text).with_context(|| format!("parsing {}", file.display()))?;
    let graph = ws.graph()?;
    let index = ws.index(&graph)?;
    let map = IdMap::build(&graph);
    let engine = Engine::new(&graph, &map, &index);
    let hops = index.variant().max_depth();
    if explain {
        let decision = plan(&engine.prepare(&template), &ws.stats()?, &ws.thresholds()?, hops);
        return print_json(&decision);
    }
    // forced modes need no statistics
    let (stats, th) = match mode {
        Mode::Auto => (ws.stats()?, ws.thresholds()?),
        _ => (DatasetStats::default(), Default::default()),
    };
    let start = Instant::now();
    let (out, decision) = run_query(&engine, &template, mode, &stats, &th, opts)?;
    let elapsed = start.elapsed();
    let mut w = BufWriter::new(io::stdout().lock());
    for row in canonical_rows(&graph, &template, &out) {
        writeln!(w, "{row}")?;
    }
    let summary = json!({
        "summary": {
            "matches": out.results.len(),
            "mode": mode,
            "seconds": elapsed.as_secs_f64(),
            "plan": decision,
            "stats": out.stats,
        }
    });
    writeln!(w, "{summary}")?;
    w.flush()?;
    Ok(())
}

fn bench(ws: &Workspace, dir: &Path, modes: &[Mode], repeat: usize, max_rows: Option<usize>) -> Result<()> {
    if modes.is_empty() {
        bail!("--modes needs at least one mode");
    }
    let graph = ws.graph()?;
    let index = ws.index(&graph)?;
    let map = IdMap::build(&graph);
    let engine = Engine::new(&graph, &map, &index);
    let needs_plan = modes.contains(&Mode::Auto);
    let (stats, th) = if needs_plan {
        (ws.stats()?, ws.thresholds()?)
    } else {
        (DatasetStats::default(), Default::default())
    };
    let opts = ExecOptions { max_rows, ..Default::default() };
    let queries = load_queries(dir)?;
    let mut totals = vec![Duration::ZERO; modes.len()];
    let (mut consistent, mut failed) = (true, 0usize);
    let mut w = BufWriter::new(io::stdout().lock());
    for (name, template) in &queries {
        let mut reference: Option<BTreeSet<Vec<u32>>> = None;
        for (mi, &mode) in modes.iter().enumerate() {
            let mut times = Vec::with_capacity(repeat);
            let mut last = None;
            for _ in 0..repeat {
                let start = Instant::now();
                let r = run_query(&engine, template, mode, &stats, &th, &opts);
                times.push(start.elapsed());
                match r {
                    Ok(r) => last = Some(r),
                    Err(e) => {
                        last = None;
                        writeln!(w, "{}", json!({ "query": name, "mode": mode, "error": e.to_string() }))?;
                        break;
                    }
                }
            }
            let Some((out, decision)) = last else {
                failed += 1;
                continue;
            };
            times.sort_unstable();
            let median = times[times.len() / 2];
            totals[mi] += median;
            let set: BTreeSet<Vec<u32>> = out.results.iter().map(|r| r.binding.iter().map(|n| n.0).collect()).collect();
            match &reference {
                Some(s) if *s != set => consistent = false,
                Some(_) => {}
                None => reference = Some(set),
            }
            let row = json!({
                "query": name,
                "mode": mode,
                "seconds": median.as_secs_f64(),
                "matches": out.results.len(),
                "pruned": out.stats.pruned,
                "candidates_before": out.stats.candidates_before.iter().sum::<usize>(),
                "candidates_after": out.stats.candidates_after.iter().sum::<usize>(),
                "joins": out.stats.joins,
                "join_rows": out.stats.join_rows,
                "connectivity_checks": out.stats.connectivity_checks,
                "plan": decision.map(|d| d.evidence),
            });
            writeln!(w, "{row}")?;
        }
    }
    let totals: serde_json::Map<String, Value> = modes
        .iter()
        .zip(&totals)
        .map(|(m, t)| (serde_json::to_value(m).unwrap().as_str().unwrap().to_owned(), Value::from(t.as_secs_f64())))
        .collect();
    let summary = json!({
        "summary": { "queries": queries.len(), "failed_runs": failed, "total_seconds": totals, "consistent": consistent }
    });
    writeln!(w, "{summary}")?;
    w.flush()?;
    if !consistent {
        bail!("modes disagree on some result set");
    }
    Ok(())
}
