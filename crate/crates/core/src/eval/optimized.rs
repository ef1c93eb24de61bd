//! Macro-state evaluation: each transition instantiates its constraint,
//! tightens the bound store, and asks the oracle for consistency right away,
//! so infeasible branches are pruned before they are enqueued. A final
//! automaton state answers immediately; its store is feasible by
//! construction.

use std::collections::{HashSet, VecDeque};
use std::time::Instant;

use super::product::{Arena, CountingOracle, ProductCtx, Snapshot};
use super::{
    EvalError, EvalOptions, EvalStats, PathSemantics, QueryResult, VisitedKey, TIMEOUT_STRIDE,
};
use crate::constraints::{instantiate, Assignment, BoundStore, Ground};
use crate::model::{AttrMap, EdgeIdx, NodeIdx, Path};
use crate::oracle::FeasibilityOracle;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Key {
    Coarse(NodeIdx, u32, Option<EdgeIdx>),
    Digest(NodeIdx, u32, String),
}

fn key(opts: &EvalOptions, snapshot: &Snapshot, store: &BoundStore) -> Key {
    match opts.visited {
        VisitedKey::Coarse => Key::Coarse(snapshot.v, snapshot.q.0, snapshot.edge.map(|(e, _)| e)),
        VisitedKey::StoreDigest => Key::Digest(snapshot.v, snapshot.q.0, store.digest()),
    }
}

/// Instantiate-tighten-check for one transition. `None` means the branch is
/// rejected (string mismatch, missing attribute, ground-false fact, or an
/// inconsistent store).
fn update(
    store: &BoundStore,
    constraint: &crate::query::Constraint,
    attrs: &AttrMap,
    oracle: &mut CountingOracle<'_>,
) -> Result<Option<BoundStore>, EvalError> {
    let Ground::Atoms(atoms) = instantiate(constraint, attrs) else {
        return Ok(None);
    };
    let mut next = store.clone();
    for atom in &atoms {
        next.tighten_mut(atom);
    }
    if oracle.check_feasible(&next)? {
        Ok(Some(next))
    } else {
        Ok(None)
    }
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

    if aut.is_final(aut.initial()) {
        return Ok(QueryResult::yes(
            Path::empty(),
            Assignment::default(),
            stats,
        ));
    }

    let mut arena = Arena::default();
    let mut visited: HashSet<Key> = HashSet::new();
    let mut queue: VecDeque<(usize, BoundStore)> = VecDeque::new();

    let start_attrs = &ctx.graph.node(start).attrs;
    for (tidx, q) in ctx.node_transitions(start, aut.initial()) {
        let constraint = aut.constraint(aut.transition(tidx).constraint);
        let Some(store) = update(&BoundStore::new(), constraint, start_attrs, &mut oracle)? else {
            continue;
        };
        let snapshot = Snapshot {
            v: start,
            q,
            edge: None,
            prev: None,
        };
        let k = key(opts, &snapshot, &store);
        if !visited.insert(k) {
            continue;
        }
        let idx = arena.push(snapshot);
        stats.states_enqueued += 1;
        if aut.is_final(q) {
            let model = oracle.get_model(&store)?;
            stats.oracle_calls = oracle.checks;
            return Ok(QueryResult::yes(arena.path_of(idx), model, stats));
        }
        queue.push_back((idx, store));
    }

    while let Some((state_idx, store)) = queue.pop_front() {
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
            let Some(after_edge) = update(
                &store,
                edge_constraint,
                &ctx.graph.edge(edge).attrs,
                &mut oracle,
            )?
            else {
                continue;
            };
            for (ntidx, q_next) in ctx.node_transitions(neighbor, q_mid) {
                let node_constraint = aut.constraint(aut.transition(ntidx).constraint);
                let Some(next_store) = update(
                    &after_edge,
                    node_constraint,
                    &ctx.graph.node(neighbor).attrs,
                    &mut oracle,
                )?
                else {
                    continue;
                };
                let snapshot = Snapshot {
                    v: neighbor,
                    q: q_next,
                    edge: Some((edge, dir)),
                    prev: Some(state_idx),
                };
                let k = key(opts, &snapshot, &next_store);
                if visited.contains(&k) {
                    continue;
                }
                visited.insert(k);
                let idx = arena.push(snapshot);
                stats.states_enqueued += 1;
                if aut.is_final(q_next) {
                    // Feasible by construction; no re-check needed.
                    let model = oracle.get_model(&next_store)?;
                    stats.oracle_calls = oracle.checks;
                    return Ok(QueryResult::yes(arena.path_of(idx), model, stats));
                }
                queue.push_back((idx, next_store));
            }
        }
    }
    stats.oracle_calls = oracle.checks;
    Ok(QueryResult::no(stats))
}
