//! Accumulate-and-check evaluation: every transition's instantiated atoms
//! are collected into the search state's formula set, and the oracle is
//! consulted only when a final automaton state is reached.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::time::Instant;

use super::product::{Arena, CountingOracle, ProductCtx, Snapshot};
use super::{
    EvalError, EvalOptions, EvalStats, PathSemantics, QueryResult, VisitedKey, TIMEOUT_STRIDE,
};
use crate::constraints::{instantiate, tighten_all, Assignment, BoundStore, Ground, NormAtom};
use crate::model::{EdgeIdx, NodeIdx, Path};
use crate::oracle::FeasibilityOracle;

type FormulaSet = BTreeSet<NormAtom>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Key {
    Coarse(NodeIdx, u32, Option<EdgeIdx>),
    Digest(NodeIdx, u32, String),
}

fn formulas_digest(set: &FormulaSet) -> String {
    let mut out = String::from("F");
    for atom in set {
        out.push('|');
        out.push_str(&atom.to_string());
    }
    out
}

fn key(opts: &EvalOptions, snapshot: &Snapshot, set: &FormulaSet) -> Key {
    match opts.visited {
        VisitedKey::Coarse => Key::Coarse(snapshot.v, snapshot.q.0, snapshot.edge.map(|(e, _)| e)),
        VisitedKey::StoreDigest => Key::Digest(snapshot.v, snapshot.q.0, formulas_digest(set)),
    }
}

fn store_of(set: &FormulaSet) -> BoundStore {
    let atoms: Vec<NormAtom> = set.iter().cloned().collect();
    tighten_all(&BoundStore::new(), &atoms)
}

pub(super) fn run(
    ctx: &ProductCtx<'_>,
    start: NodeIdx,
    opts: &EvalOptions,
    oracle: &mut dyn FeasibilityOracle,
    deadline: Instant,
) -> Result<QueryResult, EvalError> {
    let mut oracle = CountingOracle::new(oracle);
    let mut stats = EvalStats::default();
    let aut = ctx.automaton;

    // A pattern that accepts the empty sequence matches the empty path.
    if aut.is_final(aut.initial()) {
        stats.oracle_calls = oracle.checks;
        return Ok(QueryResult::yes(
            Path::empty(),
            Assignment::default(),
            stats,
        ));
    }

    let mut arena = Arena::default();
    let mut visited: HashSet<Key> = HashSet::new();
    let mut queue: VecDeque<(usize, FormulaSet)> = VecDeque::new();

    // Initial synchronization on the start node.
    let start_attrs = &ctx.graph.node(start).attrs;
    for (tidx, q) in ctx.node_transitions(start, aut.initial()) {
        let constraint = aut.constraint(aut.transition(tidx).constraint);
        let Ground::Atoms(atoms) = instantiate(constraint, start_attrs) else {
            continue;
        };
        let set: FormulaSet = atoms.into_iter().collect();
        let snapshot = Snapshot {
            v: start,
            q,
            edge: None,
            prev: None,
        };
        let k = key(opts, &snapshot, &set);
        if !visited.insert(k) {
            continue;
        }
        let idx = arena.push(snapshot);
        stats.states_enqueued += 1;
        if aut.is_final(q) && oracle.check_feasible(&store_of(&set))? {
            let model = oracle.get_model(&store_of(&set))?;
            stats.oracle_calls = oracle.checks;
            return Ok(QueryResult::yes(arena.path_of(idx), model, stats));
        }
        queue.push_back((idx, set));
    }

    while let Some((state_idx, formulas)) = queue.pop_front() {
        stats.states_expanded += 1;
        if stats.states_expanded % TIMEOUT_STRIDE == 0 && Instant::now() >= deadline {
            stats.oracle_calls = oracle.checks;
            return Ok(QueryResult::timeout(stats));
        }
        let (v, q) = {
            let s = arena.get(state_idx);
            (s.v, s.q)
        };
        for (etidx, edge, dir, neighbor, q_mid) in ctx.edge_transitions(v, q) {
            if opts.semantics == PathSemantics::Simple && arena.chain_contains(state_idx, neighbor)
            {
                continue;
            }
            let edge_constraint = aut.constraint(aut.transition(etidx).constraint);
            let Ground::Atoms(edge_atoms) =
                instantiate(edge_constraint, &ctx.graph.edge(edge).attrs)
            else {
                continue;
            };
            let mut after_edge = formulas.clone();
            after_edge.extend(edge_atoms);
            for (ntidx, q_next) in ctx.node_transitions(neighbor, q_mid) {
                let node_constraint = aut.constraint(aut.transition(ntidx).constraint);
                let Ground::Atoms(node_atoms) =
                    instantiate(node_constraint, &ctx.graph.node(neighbor).attrs)
                else {
                    continue;
                };
                let mut set = after_edge.clone();
                set.extend(node_atoms);
                let snapshot = Snapshot {
                    v: neighbor,
                    q: q_next,
                    edge: Some((edge, dir)),
                    prev: Some(state_idx),
                };
                let k = key(opts, &snapshot, &set);
                if visited.contains(&k) {
                    continue;
                }
                visited.insert(k);
                let idx = arena.push(snapshot);
                stats.states_enqueued += 1;
                if aut.is_final(q_next) && oracle.check_feasible(&store_of(&set))? {
                    let model = oracle.get_model(&store_of(&set))?;
                    stats.oracle_calls = oracle.checks;
                    return Ok(QueryResult::yes(arena.path_of(idx), model, stats));
                }
                queue.push_back((idx, set));
            }
        }
    }
    stats.oracle_calls = oracle.checks;
    Ok(QueryResult::no(stats))
}
