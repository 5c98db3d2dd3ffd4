//! Query templates: prefix keywords on nodes, predicate edges, and
//! connection edges bounded by a maximum path length.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Keyword value denoting "match anything" in the file format.
pub const WILDCARD: &str = "*";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryNode {
    pub name: String,
    /// Prefix keyword; `None` is a wildcard.
    pub keyword: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateEdge {
    pub from: usize,
    /// Prefix keyword on the predicate label; `None` is a wildcard.
    pub predicate: Option<String>,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectionEdge {
    pub from: usize,
    pub to: usize,
    pub max_distance: u32,
    /// `false` accepts a path in either direction.
    pub directed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryTemplate {
    nodes: Vec<QueryNode>,
    edges: Vec<PredicateEdge>,
    connections: Vec<ConnectionEdge>,
}

impl QueryTemplate {
    pub fn new(
        nodes: Vec<QueryNode>,
        edges: Vec<PredicateEdge>,
        connections: Vec<ConnectionEdge>,
    ) -> Result<Self> {
        let t = QueryTemplate {
            nodes,
            edges,
            connections,
        };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::Query("template has no nodes".into()));
        }
        let mut seen = HashMap::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if let Some(prev) = seen.insert(n.name.as_str(), i) {
                return Err(Error::Query(format!(
                    "duplicate node id {:?} (nodes {prev} and {i})",
                    n.name
                )));
            }
            if n.keyword.as_deref() == Some("") {
                return Err(Error::Query(format!("node {:?} has an empty keyword", n.name)));
            }
        }
        let n = self.nodes.len();
        for (i, e) in self.edges.iter().enumerate() {
            if e.from >= n || e.to >= n {
                return Err(Error::Query(format!("edge {i} references an unknown node")));
            }
            if e.predicate.as_deref() == Some("") {
                return Err(Error::Query(format!("edge {i} has an empty predicate keyword")));
            }
        }
        for (i, c) in self.connections.iter().enumerate() {
            if c.from >= n || c.to >= n {
                return Err(Error::Query(format!("connection {i} references an unknown node")));
            }
            if c.max_distance < 1 {
                return Err(Error::Query(format!(
                    "connection {i} ({} -> {}) has max_distance 0",
                    self.nodes[c.from].name, self.nodes[c.to].name
                )));
            }
            if c.from == c.to {
                return Err(Error::Query(format!("connection {i} is a self loop")));
            }
        }
        let mut uf = UnionFind::new(n);
        for e in &self.edges {
            uf.union(e.from, e.to);
        }
        for c in &self.connections {
            uf.union(c.from, c.to);
        }
        let root = uf.find(0);
        if let Some(i) = (1..n).find(|&i| uf.find(i) != root) {
            return Err(Error::Query(format!(
                "template is disconnected: node {:?} is not connected to {:?}",
                self.nodes[i].name, self.nodes[0].name
            )));
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[QueryNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[PredicateEdge] {
        &self.edges
    }

    pub fn connections(&self) -> &[ConnectionEdge] {
        &self.connections
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    /// Components of the predicate-edge graph, with every connection edge
    /// classified as intra- or inter-component.
    pub fn split_components(&self) -> Components {
        let n = self.nodes.len();
        let mut uf = UnionFind::new(n);
        for e in &self.edges {
            uf.union(e.from, e.to);
        }
        let mut comp_of_root = HashMap::new();
        let mut component_of = vec![0usize; n];
        let mut components: Vec<QueryComponent> = Vec::new();
        for (q, slot) in component_of.iter_mut().enumerate() {
            let r = uf.find(q);
            let c = *comp_of_root.entry(r).or_insert_with(|| {
                components.push(QueryComponent::default());
                components.len() - 1
            });
            components[c].nodes.push(q);
            *slot = c;
        }
        for (i, e) in self.edges.iter().enumerate() {
            components[component_of[e.from]].edges.push(i);
        }
        let connection_class = self
            .connections
            .iter()
            .map(|c| {
                let (a, b) = (component_of[c.from], component_of[c.to]);
                if a == b {
                    ConnectionClass::Intra(a)
                } else {
                    ConnectionClass::Inter(a, b)
                }
            })
            .collect();
        Components {
            components,
            component_of,
            connection_class,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: QueryFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&QueryFile::from(self)).expect("query serializes")
    }
}

/// Parses a template from the JSON query file format.
pub fn parse_query(text: &str) -> Result<QueryTemplate> {
    QueryTemplate::from_json(text)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryComponent {
    pub nodes: Vec<usize>,
    /// Indices into [`QueryTemplate::edges`].
    pub edges: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConnectionClass {
    Intra(usize),
    Inter(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    pub components: Vec<QueryComponent>,
    pub component_of: Vec<usize>,
    /// Parallel to [`QueryTemplate::connections`].
    pub connection_class: Vec<ConnectionClass>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // keep the smaller index as root so component numbering is stable
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct QueryFile {
    nodes: Vec<NodeRecord>,
    #[serde(default)]
    edges: Vec<EdgeRecord>,
    #[serde(default)]
    connections: Vec<ConnectionRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeRecord {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    keyword: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EdgeRecord {
    from: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    predicate: Option<String>,
    to: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct ConnectionRecord {
    from: String,
    to: String,
    max_distance: i64,
    #[serde(default = "default_directed")]
    directed: bool,
}

fn default_directed() -> bool {
    true
}

fn keyword_from_file(k: Option<String>) -> Option<String> {
    k.filter(|k| k != WILDCARD)
}

impl TryFrom<QueryFile> for QueryTemplate {
    type Error = Error;

    fn try_from(file: QueryFile) -> Result<Self> {
        let index: HashMap<String, usize> = file
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.clone(), i))
            .collect();
        let lookup = |name: &str, what: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::Query(format!("{what} references unknown node {name:?}")))
        };
        let mut edges = Vec::with_capacity(file.edges.len());
        for (i, e) in file.edges.iter().enumerate() {
            edges.push(PredicateEdge {
                from: lookup(&e.from, &format!("edge {i}"))?,
                predicate: keyword_from_file(e.predicate.clone()),
                to: lookup(&e.to, &format!("edge {i}"))?,
            });
        }
        let mut connections = Vec::with_capacity(file.connections.len());
        for (i, c) in file.connections.iter().enumerate() {
            if c.max_distance < 1 || c.max_distance > u32::MAX as i64 {
                return Err(Error::Query(format!(
                    "connection {i} ({} -> {}) has max_distance {} (must be >= 1)",
                    c.from, c.to, c.max_distance
                )));
            }
            connections.push(ConnectionEdge {
                from: lookup(&c.from, &format!("connection {i}"))?,
                to: lookup(&c.to, &format!("connection {i}"))?,
                max_distance: c.max_distance as u32,
                directed: c.directed,
            });
        }
        let nodes = file
            .nodes
            .into_iter()
            .map(|n| QueryNode {
                name: n.id,
                keyword: keyword_from_file(n.keyword),
            })
            .collect();
        QueryTemplate::new(nodes, edges, connections)
    }
}

impl From<&QueryTemplate> for QueryFile {
    fn from(t: &QueryTemplate) -> Self {
        let name = |i: usize| t.nodes[i].name.clone();
        QueryFile {
            nodes: t
                .nodes
                .iter()
                .map(|n| NodeRecord {
                    id: n.name.clone(),
                    keyword: n.keyword.clone(),
                })
                .collect(),
            edges: t
                .edges
                .iter()
                .map(|e| EdgeRecord {
                    from: name(e.from),
                    predicate: e.predicate.clone(),
                    to: name(e.to),
                })
                .collect(),
            connections: t
                .connections
                .iter()
                .map(|c| ConnectionRecord {
                    from: name(c.from),
                    to: name(c.to),
                    max_distance: c.max_distance as i64,
                    directed: c.directed,
                })
                .collect(),
        }
    }
}
