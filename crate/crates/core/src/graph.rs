//! In-memory RDF graph: N-Triples ingestion, node/edge classification and
//! adjacency access.

use std::collections::HashMap;
use std::fmt;
use std::fmt::Write as _;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::idmap::prefix_range;
use crate::{Error, Result};

/// Dense node identifier, `0..node_count()`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Predicate identifier. Predicates are numbered in bytewise label order, so a
/// predicate prefix keyword resolves to a contiguous range of ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PredId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Resource,
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    Relationship,
    Attribute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: NodeId,
    pub predicate: PredId,
    pub object: NodeId,
}

/// An RDF term as it appears in the input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Iri(String),
    /// Blank node label including the `_:` prefix.
    Blank(String),
    /// Lexical form only; datatype and language tags are dropped.
    Literal(String),
}

impl Term {
    fn into_parts(self) -> (String, NodeKind) {
        match self {
            Term::Iri(s) | Term::Blank(s) => (s, NodeKind::Resource),
            Term::Literal(s) => (s, NodeKind::Literal),
        }
    }
}

/// Counts produced by [`RdfGraph::classify`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassReport {
    pub resource_nodes: usize,
    pub literal_nodes: usize,
    pub relationship_edges: usize,
    pub attribute_edges: usize,
}

/// Directed labeled multigraph with unique node labels.
///
/// Immutable once built. Adjacency is stored in CSR form sorted by
/// `(predicate, neighbor)`.
#[derive(Debug, Clone)]
pub struct RdfGraph {
    labels: Vec<String>,
    kinds: Vec<NodeKind>,
    predicates: Vec<String>,
    triples: Vec<Triple>,
    out_offsets: Vec<u32>,
    out_adj: Vec<(PredId, NodeId)>,
    in_offsets: Vec<u32>,
    in_adj: Vec<(PredId, NodeId)>,
    by_label: HashMap<String, NodeId>,
}

impl Default for RdfGraph {
    fn default() -> Self {
        GraphBuilder::new().finish()
    }
}

impl RdfGraph {
    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.triples.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.labels.len() as u32).map(NodeId)
    }

    pub fn label(&self, node: NodeId) -> &str {
        &self.labels[node.index()]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn kind(&self, node: NodeId) -> NodeKind {
        self.kinds[node.index()]
    }

    pub fn is_literal(&self, node: NodeId) -> bool {
        self.kinds[node.index()] == NodeKind::Literal
    }

    pub fn node_by_label(&self, label: &str) -> Option<NodeId> {
        self.by_label.get(label).copied()
    }

    pub fn predicates(&self) -> &[String] {
        &self.predicates
    }

    pub fn predicate_label(&self, p: PredId) -> &str {
        &self.predicates[p.0 as usize]
    }

    pub fn predicate_by_label(&self, label: &str) -> Option<PredId> {
        self.predicates
            .binary_search_by(|p| p.as_bytes().cmp(label.as_bytes()))
            .ok()
            .map(|i| PredId(i as u32))
    }

    /// Range of predicate ids whose label starts with `prefix`.
    pub fn predicate_prefix(&self, prefix: &str) -> Range<u32> {
        let r = prefix_range(&self.predicates, prefix);
        r.start as u32..r.end as u32
    }

    /// All triples, sorted by `(subject, predicate, object)`.
    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn edge_kind(&self, t: &Triple) -> EdgeKind {
        if self.is_literal(t.object) {
            EdgeKind::Attribute
        } else {
            EdgeKind::Relationship
        }
    }

    pub fn out_edges(&self, node: NodeId) -> &[(PredId, NodeId)] {
        let i = node.index();
        &self.out_adj[self.out_offsets[i] as usize..self.out_offsets[i + 1] as usize]
    }

    pub fn in_edges(&self, node: NodeId) -> &[(PredId, NodeId)] {
        let i = node.index();
        &self.in_adj[self.in_offsets[i] as usize..self.in_offsets[i + 1] as usize]
    }

    pub fn out_degree(&self, node: NodeId) -> usize {
        self.out_edges(node).len()
    }

    pub fn in_degree(&self, node: NodeId) -> usize {
        self.in_edges(node).len()
    }

    pub fn has_edge(&self, subject: NodeId, predicate: PredId, object: NodeId) -> bool {
        self.out_edges(subject).binary_search(&(predicate, object)).is_ok()
    }

    pub fn classify(&self) -> ClassReport {
        let literal_nodes = self.kinds.iter().filter(|k| **k == NodeKind::Literal).count();
        let attribute_edges = self
            .triples
            .iter()
            .filter(|t| self.edge_kind(t) == EdgeKind::Attribute)
            .count();
        ClassReport {
            resource_nodes: self.node_count() - literal_nodes,
            literal_nodes,
            relationship_edges: self.edge_count() - attribute_edges,
            attribute_edges,
        }
    }

    /// Serializes the graph back to N-Triples, one triple per line in
    /// `(subject, predicate, object)` id order.
    pub fn to_ntriples(&self) -> String {
        let mut out = String::new();
        for t in &self.triples {
            self.write_term(&mut out, t.subject);
            out.push(' ');
            out.push('<');
            out.push_str(self.predicate_label(t.predicate));
            out.push_str("> ");
            self.write_term(&mut out, t.object);
            out.push_str(" .\n");
        }
        out
    }

    fn write_term(&self, out: &mut String, node: NodeId) {
        let label = self.label(node);
        match self.kind(node) {
            NodeKind::Resource if label.starts_with("_:") => out.push_str(label),
            NodeKind::Resource => {
                out.push('<');
                out.push_str(label);
                out.push('>');
            }
            NodeKind::Literal => {
                out.push('"');
                for c in label.chars() {
                    match c {
                        '"' => out.push_str("\\\""),
                        '\\' => out.push_str("\\\\"),
                        '\n' => out.push_str("\\n"),
                        '\r' => out.push_str("\\r"),
                        '\t' => out.push_str("\\t"),
                        c if (c as u32) < 0x20 => {
                            let _ = write!(out, "\\u{:04X}", c as u32);
                        }
                        c => out.push(c),
                    }
                }
                out.push('"');
            }
        }
    }

    pub fn to_snapshot(&self) -> GraphSnapshot {
        GraphSnapshot {
            version: GraphSnapshot::VERSION,
            labels: self.labels.clone(),
            kinds: self.kinds.clone(),
            predicates: self.predicates.clone(),
            triples: self
                .triples
                .iter()
                .map(|t| [t.subject.0, t.predicate.0, t.object.0])
                .collect(),
        }
    }

    pub fn from_snapshot(snap: GraphSnapshot) -> Result<Self> {
        if snap.version != GraphSnapshot::VERSION {
            return Err(Error::Snapshot(format!(
                "graph snapshot version {} (expected {})",
                snap.version,
                GraphSnapshot::VERSION
            )));
        }
        if snap.labels.len() != snap.kinds.len() {
            return Err(Error::Snapshot("labels and kinds differ in length".into()));
        }
        let n = snap.labels.len() as u32;
        let np = snap.predicates.len() as u32;
        let mut triples = Vec::with_capacity(snap.triples.len());
        for [s, p, o] in snap.triples {
            if s >= n || o >= n || p >= np {
                return Err(Error::Snapshot(format!("triple ({s}, {p}, {o}) out of range")));
            }
            triples.push(Triple {
                subject: NodeId(s),
                predicate: PredId(p),
                object: NodeId(o),
            });
        }
        Ok(assemble(snap.labels, snap.kinds, snap.predicates, triples))
    }
}

/// Serializable form of [`RdfGraph`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphSnapshot {
    pub version: u32,
    pub labels: Vec<String>,
    pub kinds: Vec<NodeKind>,
    pub predicates: Vec<String>,
    pub triples: Vec<[u32; 3]>,
}

impl GraphSnapshot {
    pub const VERSION: u32 = 1;
}

/// Incremental graph construction. Nodes are numbered by first appearance.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    labels: Vec<String>,
    kinds: Vec<NodeKind>,
    by_label: HashMap<String, NodeId>,
    predicates: Vec<String>,
    pred_ids: HashMap<String, u32>,
    triples: Vec<(NodeId, u32, NodeId)>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Interns a node. A label seen both as a resource and as a literal
    /// becomes a single resource node.
    pub fn node(&mut self, term: Term) -> NodeId {
        let (label, kind) = term.into_parts();
        if let Some(&id) = self.by_label.get(&label) {
            if kind == NodeKind::Resource {
                self.kinds[id.index()] = NodeKind::Resource;
            }
            return id;
        }
        let id = NodeId(self.labels.len() as u32);
        self.by_label.insert(label.clone(), id);
        self.labels.push(label);
        self.kinds.push(kind);
        id
    }

    fn predicate(&mut self, label: &str) -> u32 {
        if let Some(&p) = self.pred_ids.get(label) {
            return p;
        }
        let p = self.predicates.len() as u32;
        self.predicates.push(label.to_owned());
        self.pred_ids.insert(label.to_owned(), p);
        p
    }

    pub fn add(&mut self, subject: Term, predicate: &str, object: Term) {
        let s = self.node(subject);
        let p = self.predicate(predicate);
        let o = self.node(object);
        self.triples.push((s, p, o));
    }

    /// Convenience for tests and generators: subject and predicate are IRIs,
    /// the object is an IRI unless `literal` is set.
    pub fn add_str(&mut self, subject: &str, predicate: &str, object: &str, literal: bool) {
        let object = if literal {
            Term::Literal(object.to_owned())
        } else {
            resource_term(object)
        };
        self.add(resource_term(subject), predicate, object);
    }

    pub fn finish(self) -> RdfGraph {
        // Renumber predicates in bytewise label order.
        let mut order: Vec<u32> = (0..self.predicates.len() as u32).collect();
        order.sort_by(|a, b| {
            self.predicates[*a as usize]
                .as_bytes()
                .cmp(self.predicates[*b as usize].as_bytes())
        });
        let mut remap = vec![0u32; order.len()];
        for (new, old) in order.iter().enumerate() {
            remap[*old as usize] = new as u32;
        }
        let predicates = order
            .iter()
            .map(|old| self.predicates[*old as usize].clone())
            .collect();
        let triples = self
            .triples
            .into_iter()
            .map(|(s, p, o)| Triple {
                subject: s,
                predicate: PredId(remap[p as usize]),
                object: o,
            })
            .collect();
        assemble(self.labels, self.kinds, predicates, triples)
    }
}

fn resource_term(label: &str) -> Term {
    if label.starts_with("_:") {
        Term::Blank(label.to_owned())
    } else {
        Term::Iri(label.to_owned())
    }
}

fn assemble(
    labels: Vec<String>,
    kinds: Vec<NodeKind>,
    predicates: Vec<String>,
    mut triples: Vec<Triple>,
) -> RdfGraph {
    triples.sort_unstable();
    triples.dedup();
    let n = labels.len();

    let mut out_offsets = vec![0u32; n + 1];
    let mut in_offsets = vec![0u32; n + 1];
    for t in &triples {
        out_offsets[t.subject.index() + 1] += 1;
        in_offsets[t.object.index() + 1] += 1;
    }
    for i in 0..n {
        out_offsets[i + 1] += out_offsets[i];
        in_offsets[i + 1] += in_offsets[i];
    }
    let mut out_adj = vec![(PredId(0), NodeId(0)); triples.len()];
    let mut in_adj = vec![(PredId(0), NodeId(0)); triples.len()];
    let mut out_fill = out_offsets.clone();
    let mut in_fill = in_offsets.clone();
    for t in &triples {
        let s = t.subject.index();
        out_adj[out_fill[s] as usize] = (t.predicate, t.object);
        out_fill[s] += 1;
        let o = t.object.index();
        in_adj[in_fill[o] as usize] = (t.predicate, t.subject);
        in_fill[o] += 1;
    }
    for i in 0..n {
        out_adj[out_offsets[i] as usize..out_offsets[i + 1] as usize].sort_unstable();
        in_adj[in_offsets[i] as usize..in_offsets[i + 1] as usize].sort_unstable();
    }
    let by_label = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.clone(), NodeId(i as u32)))
        .collect();

    RdfGraph {
        labels,
        kinds,
        predicates,
        triples,
        out_offsets,
        out_adj,
        in_offsets,
        in_adj,
        by_label,
    }
}

/// Parses N-Triples text. Blank lines and `#` comments are skipped.
pub fn parse_ntriples(text: &str) -> Result<RdfGraph> {
    let mut builder = GraphBuilder::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let mut cur = Cursor::new(line, line_no);
        cur.skip_ws();
        if cur.at_end() || cur.peek() == Some('#') {
            continue;
        }
        let subject = match cur.term()? {
            t @ (Term::Iri(_) | Term::Blank(_)) => t,
            Term::Literal(_) => return Err(cur.error("literal in subject position")),
        };
        cur.skip_ws();
        let predicate = match cur.term()? {
            Term::Iri(p) => p,
            _ => return Err(cur.error("predicate must be an IRI")),
        };
        cur.skip_ws();
        let object = cur.term()?;
        cur.skip_ws();
        if !cur.eat('.') {
            return Err(cur.error("expected '.' terminating the triple"));
        }
        cur.skip_ws();
        if !(cur.at_end() || cur.peek() == Some('#')) {
            return Err(cur.error("trailing content after '.'"));
        }
        builder.add(subject, &predicate, object);
    }
    Ok(builder.finish())
}

struct Cursor<'a> {
    rest: &'a str,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn new(rest: &'a str, line: usize) -> Self {
        Self { rest, line }
    }

    fn error(&self, message: &str) -> Error {
        Error::Parse {
            line: self.line,
            message: message.to_owned(),
        }
    }

    fn at_end(&self) -> bool {
        self.rest.is_empty()
    }

    fn peek(&self) -> Option<char> {
        self.rest.chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.rest = &self.rest[c.len_utf8()..];
        Some(c)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn skip_ws(&mut self) {
        self.rest = self.rest.trim_start_matches([' ', '\t', '\r']);
    }

    fn term(&mut self) -> Result<Term> {
        match self.peek() {
            Some('<') => self.iri().map(Term::Iri),
            Some('_') => self.blank(),
            Some('"') => self.literal(),
            Some(_) => Err(self.error("expected '<', '_:' or '\"'")),
            None => Err(self.error("unexpected end of line")),
        }
    }

    fn iri(&mut self) -> Result<String> {
        self.bump();
        let mut out = String::new();
        loop {
            match self.bump() {
                Some('>') => break,
                Some('\\') => out.push(self.unicode_escape()?),
                Some(c) if c == ' ' || c == '<' || c == '"' => {
                    return Err(self.error("invalid character in IRI"))
                }
                Some(c) => out.push(c),
                None => return Err(self.error("unterminated IRI")),
            }
        }
        if out.is_empty() {
            return Err(self.error("empty IRI"));
        }
        Ok(out)
    }

    fn blank(&mut self) -> Result<Term> {
        if !self.rest.starts_with("_:") {
            return Err(self.error("expected blank node '_:'"));
        }
        let end = self
            .rest
            .find(|c: char| c.is_whitespace() || c == '<' || c == '"')
            .unwrap_or(self.rest.len());
        // A blank node label may not end with '.', so "_:b." is "_:b" + ".".
        let mut label = &self.rest[..end];
        while label.len() > 2 && label.ends_with('.') {
            label = &label[..label.len() - 1];
        }
        if label.len() <= 2 {
            return Err(self.error("empty blank node label"));
        }
        self.rest = &self.rest[label.len()..];
        Ok(Term::Blank(label.to_owned()))
    }

    fn literal(&mut self) -> Result<Term> {
        self.bump();
        let mut out = String::new();
        loop {
            match self.bump() {
                Some('"') => break,
                Some('\\') => match self.bump() {
                    Some('t') => out.push('\t'),
                    Some('b') => out.push('\u{8}'),
                    Some('n') => out.push('\n'),
                    Some('r') => out.push('\r'),
                    Some('f') => out.push('\u{c}'),
                    Some('"') => out.push('"'),
                    Some('\'') => out.push('\''),
                    Some('\\') => out.push('\\'),
                    Some('u') => out.push(self.hex_escape(4)?),
                    Some('U') => out.push(self.hex_escape(8)?),
                    _ => return Err(self.error("invalid escape in literal")),
                },
                Some(c) => out.push(c),
                None => return Err(self.error("unterminated literal")),
            }
        }
        if self.eat('@') {
            let end = self
                .rest
                .find(|c: char| !(c.is_ascii_alphanumeric() || c == '-'))
                .unwrap_or(self.rest.len());
            if end == 0 {
                return Err(self.error("empty language tag"));
            }
            self.rest = &self.rest[end..];
        } else if self.rest.starts_with("^^") {
            self.rest = &self.rest[2..];
            if self.peek() != Some('<') {
                return Err(self.error("expected datatype IRI after '^^'"));
            }
            self.iri()?;
        }
        Ok(Term::Literal(out))
    }

    /// `\uXXXX` or `\UXXXXXXXX` with the backslash already consumed.
    fn unicode_escape(&mut self) -> Result<char> {
        match self.bump() {
            Some('u') => self.hex_escape(4),
            Some('U') => self.hex_escape(8),
            _ => Err(self.error("invalid escape in IRI")),
        }
    }

    fn hex_escape(&mut self, digits: usize) -> Result<char> {
        let hex = self
            .rest
            .get(..digits)
            .filter(|h| h.bytes().all(|b| b.is_ascii_hexdigit()))
            .ok_or_else(|| self.error("truncated unicode escape"))?;
        let c = u32::from_str_radix(hex, 16)
            .ok()
            .and_then(char::from_u32)
            .ok_or_else(|| self.error("invalid unicode scalar in escape"))?;
        self.rest = &self.rest[digits..];
        Ok(c)
    }
}
