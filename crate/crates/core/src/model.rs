//! Property-graph data model and the line-oriented text format.
//!
//! A graph is an immutable labeled multigraph. Every node and edge carries
//! exactly one label and a map of typed attributes (string or exact
//! rational). Adjacency is indexed per `(node, edge label)` in file load
//! order, which keeps traversals and benchmark runs reproducible.
//!
//! File format (UTF-8, one record per line, `#` starts a comment):
//!
//! ```text
//! N <id> <label> [key=value]...
//! E <id> <src-id> <dst-id> <label> [key=value]...
//! ```
//!
//! A value is a double-quoted string (with `\"` and `\\` escapes) or an
//! exact numeric literal such as `25`, `-0.5`, or `1/3`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::rat::{parse_rat, render_rat, Rat};

/// Attribute value: either a string or an exact rational.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Str(String),
    Num(Rat),
}

pub type AttrMap = BTreeMap<String, Value>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeIdx(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeIdx(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabelId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone)]
pub struct Node {
    pub id: String,
    pub label: LabelId,
    pub attrs: AttrMap,
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub id: String,
    pub src: NodeIdx,
    pub dst: NodeIdx,
    pub label: LabelId,
    pub attrs: AttrMap,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LoadError {
    #[error("line {line}: duplicate {kind} id `{id}`")]
    DuplicateId {
        line: usize,
        kind: &'static str,
        id: String,
    },
    #[error("line {line}: edge `{edge}` references unknown node `{node}`")]
    DanglingEndpoint {
        line: usize,
        edge: String,
        node: String,
    },
    #[error("line {line}: malformed line: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: malformed value literal `{literal}`")]
    MalformedValue { line: usize, literal: String },
}

/// Immutable property graph with label-indexed adjacency.
#[derive(Debug, Default, Clone)]
pub struct PropertyGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    node_by_id: HashMap<String, NodeIdx>,
    edge_by_id: HashMap<String, EdgeIdx>,
    labels: Vec<String>,
    label_by_name: HashMap<String, LabelId>,
    out: HashMap<(NodeIdx, LabelId), Vec<EdgeIdx>>,
    inn: HashMap<(NodeIdx, LabelId), Vec<EdgeIdx>>,
}

impl PropertyGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeIdx, &Node)> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (NodeIdx(i as u32), n))
    }

    pub fn edges(&self) -> impl Iterator<Item = (EdgeIdx, &Edge)> {
        self.edges
            .iter()
            .enumerate()
            .map(|(i, e)| (EdgeIdx(i as u32), e))
    }

    pub fn node(&self, idx: NodeIdx) -> &Node {
        &self.nodes[idx.0 as usize]
    }

    pub fn edge(&self, idx: EdgeIdx) -> &Edge {
        &self.edges[idx.0 as usize]
    }

    pub fn node_idx(&self, id: &str) -> Option<NodeIdx> {
        self.node_by_id.get(id).copied()
    }

    pub fn edge_idx(&self, id: &str) -> Option<EdgeIdx> {
        self.edge_by_id.get(id).copied()
    }

    pub fn label_id(&self, name: &str) -> Option<LabelId> {
        self.label_by_name.get(name).copied()
    }

    pub fn label_name(&self, label: LabelId) -> &str {
        &self.labels[label.0 as usize]
    }

    pub fn node_labels(&self) -> impl Iterator<Item = (LabelId, &str)> {
        self.labels
            .iter()
            .enumerate()
            .map(|(i, s)| (LabelId(i as u32), s.as_str()))
    }

    /// Edges adjacent to `v` with the given label, in load order. Forward
    /// yields outgoing edges paired with their targets; backward yields
    /// incoming edges paired with their sources.
    pub fn adjacent(&self, v: NodeIdx, label: LabelId, dir: Direction) -> &[EdgeIdx] {
        let index = match dir {
            Direction::Forward => &self.out,
            Direction::Backward => &self.inn,
        };
        index.get(&(v, label)).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Name-based adjacency lookup; errors on an unknown node id.
    pub fn neighbors(
        &self,
        node_id: &str,
        label: &str,
        dir: Direction,
    ) -> Result<Vec<(String, String)>, String> {
        let v = self
            .node_idx(node_id)
            .ok_or_else(|| format!("unknown node id `{node_id}`"))?;
        let Some(label) = self.label_id(label) else {
            return Ok(Vec::new());
        };
        Ok(self
            .adjacent(v, label, dir)
            .iter()
            .map(|&e| {
                let edge = self.edge(e);
                let other = match dir {
                    Direction::Forward => edge.dst,
                    Direction::Backward => edge.src,
                };
                (edge.id.clone(), self.node(other).id.clone())
            })
            .collect())
    }

    fn intern_label(&mut self, name: &str) -> LabelId {
        if let Some(&id) = self.label_by_name.get(name) {
            return id;
        }
        let id = LabelId(self.labels.len() as u32);
        self.labels.push(name.to_string());
        self.label_by_name.insert(name.to_string(), id);
        id
    }

    /// Appends a node; used by loaders and generators.
    pub fn add_node(&mut self, id: &str, label: &str, attrs: AttrMap) -> Result<NodeIdx, String> {
        if self.node_by_id.contains_key(id) {
            return Err(format!("duplicate node id `{id}`"));
        }
        let label = self.intern_label(label);
        let idx = NodeIdx(self.nodes.len() as u32);
        self.nodes.push(Node {
            id: id.to_string(),
            label,
            attrs,
        });
        self.node_by_id.insert(id.to_string(), idx);
        Ok(idx)
    }

    pub fn add_edge(
        &mut self,
        id: &str,
        src: &str,
        dst: &str,
        label: &str,
        attrs: AttrMap,
    ) -> Result<EdgeIdx, String> {
        if self.edge_by_id.contains_key(id) {
            return Err(format!("duplicate edge id `{id}`"));
        }
        let src_idx = self
            .node_idx(src)
            .ok_or_else(|| format!("unknown node `{src}`"))?;
        let dst_idx = self
            .node_idx(dst)
            .ok_or_else(|| format!("unknown node `{dst}`"))?;
        let label = self.intern_label(label);
        let idx = EdgeIdx(self.edges.len() as u32);
        self.edges.push(Edge {
            id: id.to_string(),
            src: src_idx,
            dst: dst_idx,
            label,
            attrs,
        });
        self.edge_by_id.insert(id.to_string(), idx);
        self.out.entry((src_idx, label)).or_default().push(idx);
        self.inn.entry((dst_idx, label)).or_default().push(idx);
        Ok(idx)
    }

    /// Serializes back to the text format: nodes then edges in load order,
    /// attributes in sorted key order. Reloading the output yields an
    /// identical graph.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for node in &self.nodes {
            write!(out, "N {} {}", node.id, self.label_name(node.label)).unwrap();
            write_attrs(&mut out, &node.attrs);
            out.push('\n');
        }
        for edge in &self.edges {
            write!(
                out,
                "E {} {} {} {}",
                edge.id,
                self.node(edge.src).id,
                self.node(edge.dst).id,
                self.label_name(edge.label)
            )
            .unwrap();
            write_attrs(&mut out, &edge.attrs);
            out.push('\n');
        }
        out
    }
}

fn write_attrs(out: &mut String, attrs: &AttrMap) {
    for (key, value) in attrs {
        match value {
            Value::Str(s) => write!(
                out,
                " {key}=\"{}\"",
                s.replace('\\', "\\\\").replace('"', "\\\"")
            )
            .unwrap(),
            Value::Num(r) => write!(out, " {key}={}", render_rat(r)).unwrap(),
        }
    }
}

/// A path: alternating node/edge sequence where each edge is traversed
/// forward or backward. May be a single node or empty.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Path {
    pub nodes: Vec<NodeIdx>,
    pub edges: Vec<(EdgeIdx, Direction)>,
}

impl Path {
    pub fn empty() -> Self {
        Path::default()
    }

    pub fn single(v: NodeIdx) -> Self {
        Path {
            nodes: vec![v],
            edges: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn len_edges(&self) -> usize {
        self.edges.len()
    }

    /// Checks the alternation structure against the graph: each forward edge
    /// runs prior→current, each backward edge current→prior.
    pub fn is_well_formed(&self, g: &PropertyGraph) -> bool {
        if self.nodes.is_empty() {
            return self.edges.is_empty();
        }
        if self.nodes.len() != self.edges.len() + 1 {
            return false;
        }
        if self.nodes.iter().any(|v| (v.0 as usize) >= g.node_count()) {
            return false;
        }
        self.edges.iter().enumerate().all(|(i, &(e, dir))| {
            if (e.0 as usize) >= g.edge_count() {
                return false;
            }
            let edge = g.edge(e);
            match dir {
                Direction::Forward => edge.src == self.nodes[i] && edge.dst == self.nodes[i + 1],
                Direction::Backward => edge.src == self.nodes[i + 1] && edge.dst == self.nodes[i],
            }
        })
    }

    pub fn repeats_node(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.nodes.iter().any(|v| !seen.insert(*v))
    }
}

/// One element of the sequence a path spells out: nodes and edges both
/// contribute, and backward edges carry the inverse marker.
#[derive(Debug, Clone)]
pub struct Element<'g> {
    pub label: LabelId,
    pub inverse: bool,
    pub attrs: &'g AttrMap,
}

impl Path {
    pub fn elements<'g>(&self, g: &'g PropertyGraph) -> Vec<Element<'g>> {
        let mut seq = Vec::new();
        if self.nodes.is_empty() {
            return seq;
        }
        let first = g.node(self.nodes[0]);
        seq.push(Element {
            label: first.label,
            inverse: false,
            attrs: &first.attrs,
        });
        for (i, &(e, dir)) in self.edges.iter().enumerate() {
            let edge = g.edge(e);
            seq.push(Element {
                label: edge.label,
                inverse: dir == Direction::Backward,
                attrs: &edge.attrs,
            });
            let node = g.node(self.nodes[i + 1]);
            seq.push(Element {
                label: node.label,
                inverse: false,
                attrs: &node.attrs,
            });
        }
        seq
    }
}

/// Parses the text format. Loading is all-or-nothing: the first error wins
/// and nothing is returned.
pub fn load_graph(text: &str) -> Result<PropertyGraph, LoadError> {
    struct PendingEdge {
        line: usize,
        id: String,
        src: String,
        dst: String,
        label: String,
        attrs: AttrMap,
    }

    let mut graph = PropertyGraph::default();
    let mut pending = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = tokenize(raw, line)?;
        let kind = tokens.remove(0);
        match kind.as_str() {
            "N" => {
                if tokens.len() < 2 {
                    return Err(LoadError::MalformedLine {
                        line,
                        reason: "node record needs `N <id> <label>`".into(),
                    });
                }
                let id = tokens.remove(0);
                let label = tokens.remove(0);
                let attrs = parse_attrs(tokens, line)?;
                if graph.node_by_id.contains_key(&id) {
                    return Err(LoadError::DuplicateId {
                        line,
                        kind: "node",
                        id,
                    });
                }
                graph
                    .add_node(&id, &label, attrs)
                    .expect("checked duplicate");
            }
            "E" => {
                if tokens.len() < 4 {
                    return Err(LoadError::MalformedLine {
                        line,
                        reason: "edge record needs `E <id> <src> <dst> <label>`".into(),
                    });
                }
                let id = tokens.remove(0);
                let src = tokens.remove(0);
                let dst = tokens.remove(0);
                let label = tokens.remove(0);
                let attrs = parse_attrs(tokens, line)?;
                pending.push(PendingEdge {
                    line,
                    id,
                    src,
                    dst,
                    label,
                    attrs,
                });
            }
            other => {
                return Err(LoadError::MalformedLine {
                    line,
                    reason: format!("unknown record type `{other}`"),
                });
            }
        }
    }
    for e in pending {
        if graph.edge_by_id.contains_key(&e.id) {
            return Err(LoadError::DuplicateId {
                line: e.line,
                kind: "edge",
                id: e.id,
            });
        }
        for endpoint in [&e.src, &e.dst] {
            if graph.node_idx(endpoint).is_none() {
                return Err(LoadError::DanglingEndpoint {
                    line: e.line,
                    edge: e.id,
                    node: endpoint.clone(),
                });
            }
        }
        graph
            .add_edge(&e.id, &e.src, &e.dst, &e.label, e.attrs)
            .expect("checked");
    }
    Ok(graph)
}

/// Splits a record line into tokens. Quoted segments inside `key="..."`
/// may contain whitespace and escapes.
fn tokenize(line: &str, lineno: usize) -> Result<Vec<String>, LoadError> {
    let mut tokens = Vec::new();
    let mut chars = line.chars().peekable();
    loop {
        while matches!(chars.peek(), Some(' ') | Some('\t')) {
            chars.next();
        }
        let Some(_) = chars.peek() else { break };
        let mut token = String::new();
        while let Some(&c) = chars.peek() {
            match c {
                ' ' | '\t' => break,
                '"' => {
                    chars.next();
                    token.push('"');
                    let mut closed = false;
                    while let Some(c) = chars.next() {
                        match c {
                            '\\' => match chars.next() {
                                Some('"') => token.push('"'),
                                Some('\\') => token.push('\\'),
                                other => {
                                    return Err(LoadError::MalformedValue {
                                        line: lineno,
                                        literal: format!(
                                            "\\{}",
                                            other.map(String::from).unwrap_or_default()
                                        ),
                                    })
                                }
                            },
                            '"' => {
                                closed = true;
                                break;
                            }
                            c => token.push(c),
                        }
                    }
                    if !closed {
                        return Err(LoadError::MalformedValue {
                            line: lineno,
                            literal: "unterminated string".into(),
                        });
                    }
                    token.push('\u{0}'); // marks a quoted literal for the attr parser
                }
                c => {
                    token.push(c);
                    chars.next();
                }
            }
        }
        tokens.push(token);
    }
    Ok(tokens)
}

fn parse_attrs(tokens: Vec<String>, line: usize) -> Result<AttrMap, LoadError> {
    let mut attrs = AttrMap::new();
    for token in tokens {
        let Some((key, value)) = token.split_once('=') else {
            return Err(LoadError::MalformedLine {
                line,
                reason: format!("expected key=value, found `{token}`"),
            });
        };
        if key.is_empty() {
            return Err(LoadError::MalformedLine {
                line,
                reason: "empty attribute key".into(),
            });
        }
        let parsed = if let Some(body) = value.strip_prefix('"') {
            let Some(body) = body.strip_suffix('\u{0}') else {
                return Err(LoadError::MalformedValue {
                    line,
                    literal: value.to_string(),
                });
            };
            Value::Str(body.to_string())
        } else {
            match parse_rat(value) {
                Some(r) => Value::Num(r),
                None => {
                    return Err(LoadError::MalformedValue {
                        line,
                        literal: value.to_string(),
                    })
                }
            }
        };
        attrs.insert(key.to_string(), parsed);
    }
    Ok(attrs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat_int;

    pub(crate) const SOCIAL: &str = include_str!("../testdata/social.pg");

    #[test]
    fn loads_minimal_graph() {
        let g = load_graph("N a Person age=25\nN b Person age=30\nE e1 a b follow since=2020\n")
            .unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
        let follow = g.label_id("follow").unwrap();
        let a = g.node_idx("a").unwrap();
        let out = g.adjacent(a, follow, Direction::Forward);
        assert_eq!(out.len(), 1);
        assert_eq!(g.edge(out[0]).id, "e1");
        assert_eq!(
            g.node(g.node_idx("a").unwrap()).attrs.get("age"),
            Some(&Value::Num(rat_int(25)))
        );
    }

    #[test]
    fn loads_social_fixture() {
        let g = load_graph(SOCIAL).unwrap();
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.edge_count(), 7);
        // Outgoing follow edges of Alice, in load order.
        let got = g.neighbors("alice", "follow", Direction::Forward).unwrap();
        assert_eq!(
            got,
            vec![
                ("e1".to_string(), "bob".to_string()),
                ("e5".to_string(), "charlie".to_string())
            ]
        );
        assert!(g
            .neighbors("alice", "favorite", Direction::Forward)
            .unwrap()
            .is_empty());
        let back = g.neighbors("bob", "follow", Direction::Backward).unwrap();
        assert_eq!(back, vec![("e1".to_string(), "alice".to_string())]);
    }

    #[test]
    fn duplicate_node_id_reports_line() {
        let err = load_graph("N a X\nN a Y\n").unwrap_err();
        assert_eq!(
            err,
            LoadError::DuplicateId {
                line: 2,
                kind: "node",
                id: "a".into()
            }
        );
    }

    #[test]
    fn dangling_endpoint_reports_line() {
        let err = load_graph("N a X\nE e a b r\n").unwrap_err();
        assert_eq!(
            err,
            LoadError::DanglingEndpoint {
                line: 2,
                edge: "e".into(),
                node: "b".into()
            }
        );
    }

    #[test]
    fn malformed_value_reports_line() {
        let err = load_graph("N a X age=2x5\n").unwrap_err();
        assert_eq!(
            err,
            LoadError::MalformedValue {
                line: 1,
                literal: "2x5".into()
            }
        );
    }

    #[test]
    fn quoted_strings_with_escapes_and_spaces() {
        let g = load_graph(r#"N a X name="Ada \"L\" \\ Byron" note="two words""#).unwrap();
        let attrs = &g.node(g.node_idx("a").unwrap()).attrs;
        assert_eq!(
            attrs.get("name"),
            Some(&Value::Str(r#"Ada "L" \ Byron"#.into()))
        );
        assert_eq!(attrs.get("note"), Some(&Value::Str("two words".into())));
    }

    #[test]
    fn serialization_round_trips() {
        let g = load_graph(SOCIAL).unwrap();
        let text = g.to_text();
        let g2 = load_graph(&text).unwrap();
        assert_eq!(text, g2.to_text());
        assert_eq!(g.node_count(), g2.node_count());
        assert_eq!(g.edge_count(), g2.edge_count());
        for (idx, node) in g.nodes() {
            let n2 = g2.node(idx);
            assert_eq!(node.id, n2.id);
            assert_eq!(g.label_name(node.label), g2.label_name(n2.label));
            assert_eq!(node.attrs, n2.attrs);
        }
    }

    #[test]
    fn edge_appears_exactly_in_its_indexes() {
        let g = load_graph(SOCIAL).unwrap();
        for (idx, edge) in g.edges() {
            assert!(g
                .adjacent(edge.src, edge.label, Direction::Forward)
                .contains(&idx));
            assert!(g
                .adjacent(edge.dst, edge.label, Direction::Backward)
                .contains(&idx));
            for (v, _) in g.nodes() {
                for (label, _) in g.node_labels() {
                    let in_out = g.adjacent(v, label, Direction::Forward).contains(&idx);
                    let in_in = g.adjacent(v, label, Direction::Backward).contains(&idx);
                    assert_eq!(in_out, v == edge.src && label == edge.label);
                    assert_eq!(in_in, v == edge.dst && label == edge.label);
                }
            }
        }
    }
}
