//! On-disk workspace: a directory of JSON artifacts produced by the build
//! steps (`ingest`, `index`, `stats`, `tune`) and read by later commands.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rdfh_core::graph::GraphSnapshot;
use rdfh_core::ni::IndexVariant;
use rdfh_core::{DatasetStats, NiIndex, RdfGraph, Thresholds};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

const MANIFEST: &str = "manifest.json";
const GRAPH: &str = "graph.json";
const INDEX: &str = "index.json";
const STATS: &str = "stats.json";
const THRESHOLDS: &str = "thresholds.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndexInfo {
    pub variant: IndexVariant,
    pub binning: usize,
    pub version: u32,
    pub entries: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub graph_version: u32,
    pub source: String,
    pub nodes: usize,
    pub triples: usize,
    pub index: Option<IndexInfo>,
}

pub struct Workspace {
    dir: PathBuf,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string(value)?;
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

impl Workspace {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Reads an artifact, or fails naming the command that creates it.
    fn read<T: DeserializeOwned>(&self, name: &str, step: &str) -> Result<T> {
        let path = self.path(name);
        if !path.exists() {
            bail!("{} not found; run `rdfh {step}` first", path.display());
        }
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn manifest(&self) -> Result<Manifest> {
        let m: Manifest = self.read(MANIFEST, "ingest <file.nt>")?;
        if m.format_version != FORMAT_VERSION {
            bail!(
                "workspace format {} is not supported (expected {FORMAT_VERSION}); re-run `rdfh ingest`",
                m.format_version
            );
        }
        Ok(m)
    }

    /// Starts a fresh workspace around `graph`, dropping artifacts derived
    /// from a previous graph.
    pub fn create(&self, graph: &RdfGraph, source: &str) -> Result<Manifest> {
        fs::create_dir_all(&self.dir).with_context(|| format!("creating {}", self.dir.display()))?;
        for stale in [INDEX, STATS, THRESHOLDS] {
            let p = self.path(stale);
            if p.exists() {
                fs::remove_file(&p)?;
            }
        }
        write_json(&self.path(GRAPH), &graph.to_snapshot())?;
        let manifest = Manifest {
            format_version: FORMAT_VERSION,
            graph_version: GraphSnapshot::VERSION,
            source: source.to_owned(),
            nodes: graph.node_count(),
            triples: graph.edge_count(),
            index: None,
        };
        write_json(&self.path(MANIFEST), &manifest)?;
        Ok(manifest)
    }

    pub fn graph(&self) -> Result<RdfGraph> {
        let m = self.manifest()?;
        let snap: GraphSnapshot = self.read(GRAPH, "ingest <file.nt>")?;
        if snap.version != m.graph_version {
            bail!("graph snapshot does not match the manifest; re-run `rdfh ingest`");
        }
        Ok(RdfGraph::from_snapshot(snap)?)
    }

    pub fn save_index(&self, index: &NiIndex) -> Result<IndexInfo> {
        let mut m = self.manifest()?;
        write_json(&self.path(INDEX), index)?;
        let info = IndexInfo {
            variant: index.variant(),
            binning: index.binning(),
            version: index.version(),
            entries: index.total_entries(),
        };
        m.index = Some(info.clone());
        write_json(&self.path(MANIFEST), &m)?;
        Ok(info)
    }

    pub fn index(&self, graph: &RdfGraph) -> Result<NiIndex> {
        let m = self.manifest()?;
        let Some(info) = m.index else {
            bail!("no index in {}; run `rdfh index` first", self.dir.display());
        };
        let index: NiIndex = self.read(INDEX, "index")?;
        index.check_version()?;
        if index.variant() != info.variant || index.binning() != info.binning {
            bail!("index snapshot does not match the manifest; re-run `rdfh index`");
        }
        if index.node_count() != graph.node_count() {
            bail!("index was built for a different graph; re-run `rdfh index`");
        }
        Ok(index)
    }

    pub fn save_stats(&self, stats: &DatasetStats) -> Result<()> {
        self.manifest()?;
        write_json(&self.path(STATS), stats)
    }

    pub fn stats(&self) -> Result<DatasetStats> {
        self.read(STATS, "stats")
    }

    pub fn save_thresholds(&self, th: &Thresholds) -> Result<()> {
        self.manifest()?;
        write_json(&self.path(THRESHOLDS), th)
    }

    /// Stored thresholds, or the defaults when `tune` has not run.
    pub fn thresholds(&self) -> Result<Thresholds> {
        if !self.path(THRESHOLDS).exists() {
            log::warn!("no tuned thresholds; using defaults (run `rdfh tune` to fit them)");
            return Ok(Thresholds::default());
        }
        self.read(THRESHOLDS, "tune")
    }
}
