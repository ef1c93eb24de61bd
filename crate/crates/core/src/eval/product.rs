//! Shared product-search machinery: synchronized transitions between graph
//! and automaton, the search-state arena, and path reconstruction.

use crate::automaton::{ParametricAutomaton, StateId};
use crate::constraints::{Assignment, BoundStore};
use crate::model::{Direction, EdgeIdx, LabelId, NodeIdx, Path, PropertyGraph};
use crate::oracle::{FeasibilityOracle, OracleError};

/// Graph and automaton paired for one evaluation, with the automaton's
/// labels resolved against the graph's interned labels once up front.
pub struct ProductCtx<'a> {
    pub graph: &'a PropertyGraph,
    pub automaton: &'a ParametricAutomaton,
    labels: Vec<Option<LabelId>>,
}

/// A node-atom transition that fires on `v`: the transition index and the
/// successor automaton state.
pub type NodeFire = (u32, StateId);

/// An edge-atom transition that fires out of `v`: transition index, the edge
/// taken, its traversal direction, the neighbor reached, and the successor
/// automaton state.
pub type EdgeFire = (u32, EdgeIdx, Direction, NodeIdx, StateId);

impl<'a> ProductCtx<'a> {
    pub fn new(graph: &'a PropertyGraph, automaton: &'a ParametricAutomaton) -> Self {
        let max_label = automaton
            .transitions()
            .iter()
            .map(|t| t.label)
            .max()
            .map(|m| m as usize + 1)
            .unwrap_or(0);
        let mut resolved = vec![None; max_label];
        for t in automaton.transitions() {
            let name = automaton.label_name(t.label);
            resolved[t.label as usize] = graph.label_id(name);
        }
        ProductCtx {
            graph,
            automaton,
            labels: resolved,
        }
    }

    fn graph_label(&self, label: u32) -> Option<LabelId> {
        self.labels.get(label as usize).copied().flatten()
    }

    /// Transitions from `q` that match the label of node `v`. Node atoms are
    /// direction-free: inverse-flagged transitions never fire on nodes.
    pub fn node_transitions(&self, v: NodeIdx, q: StateId) -> Vec<NodeFire> {
        let node_label = self.graph.node(v).label;
        self.automaton
            .outgoing(q)
            .iter()
            .filter_map(|&idx| {
                let t = self.automaton.transition(idx);
                if !t.inverse && self.graph_label(t.label) == Some(node_label) {
                    Some((idx, t.to))
                } else {
                    None
                }
            })
            .collect()
    }

    /// Edge moves available from node `v` in state `q`: forward transitions
    /// walk outgoing edges, inverse transitions walk incoming edges
    /// backward. Edges appear in load order per transition.
    pub fn edge_transitions(&self, v: NodeIdx, q: StateId) -> Vec<EdgeFire> {
        let mut fires = Vec::new();
        for &idx in self.automaton.outgoing(q) {
            let t = self.automaton.transition(idx);
            let Some(label) = self.graph_label(t.label) else {
                continue;
            };
            let dir = if t.inverse {
                Direction::Backward
            } else {
                Direction::Forward
            };
            for &e in self.graph.adjacent(v, label, dir) {
                let edge = self.graph.edge(e);
                let neighbor = match dir {
                    Direction::Forward => edge.dst,
                    Direction::Backward => edge.src,
                };
                fires.push((idx, e, dir, neighbor, t.to));
            }
        }
        fires
    }
}

/// One snapshot in the search: graph node, automaton state, the edge that
/// led here, and the predecessor link used for path reconstruction.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub v: NodeIdx,
    pub q: StateId,
    pub edge: Option<(EdgeIdx, Direction)>,
    pub prev: Option<usize>,
}

/// Append-only arena of snapshots; indices are the `prev` links.
#[derive(Debug, Default)]
pub struct Arena {
    nodes: Vec<Snapshot>,
}

impl Arena {
    pub fn push(&mut self, snapshot: Snapshot) -> usize {
        self.nodes.push(snapshot);
        self.nodes.len() - 1
    }

    pub fn get(&self, idx: usize) -> &Snapshot {
        &self.nodes[idx]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Walks `prev` links back to the start, yielding the alternating path.
    pub fn path_of(&self, idx: usize) -> Path {
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        let mut cursor = Some(idx);
        while let Some(i) = cursor {
            let snap = self.get(i);
            nodes.push(snap.v);
            if let Some(e) = snap.edge {
                edges.push(e);
            }
            cursor = snap.prev;
        }
        nodes.reverse();
        edges.reverse();
        Path { nodes, edges }
    }

    /// True iff `v` already occurs on the path ending at `idx`.
    pub fn chain_contains(&self, idx: usize, v: NodeIdx) -> bool {
        let mut cursor = Some(idx);
        while let Some(i) = cursor {
            let snap = self.get(i);
            if snap.v == v {
                return true;
            }
            cursor = snap.prev;
        }
        false
    }
}

/// Instruments an oracle so the evaluator's statistics report exactly the
/// number of feasibility checks issued.
pub struct CountingOracle<'a> {
    inner: &'a mut dyn FeasibilityOracle,
    pub checks: u64,
}

impl<'a> CountingOracle<'a> {
    pub fn new(inner: &'a mut dyn FeasibilityOracle) -> Self {
        CountingOracle { inner, checks: 0 }
    }
}

impl FeasibilityOracle for CountingOracle<'_> {
    fn check_feasible(&mut self, store: &BoundStore) -> Result<bool, OracleError> {
        self.checks += 1;
        self.inner.check_feasible(store)
    }

    fn get_model(&mut self, store: &BoundStore) -> Result<Assignment, OracleError> {
        self.inner.get_model(store)
    }
}
