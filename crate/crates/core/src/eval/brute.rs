//! Exhaustive reference evaluation for small graphs: depth-first
//! enumeration of every (walk, automaton run) pair up to a length cap, with
//! feasibility decided by Fourier-Motzkin elimination only at final states.
//! No pruning, no bound stores; this is the ground truth the two real
//! evaluators are checked against.

use std::time::Instant;

use super::product::{Arena, ProductCtx, Snapshot};
use super::{EvalError, EvalOptions, EvalStats, PathSemantics, QueryResult};
use crate::constraints::{instantiate, tighten_all, Assignment, BoundStore, Ground, NormAtom};
use crate::model::{NodeIdx, Path};
use crate::oracle::{fm_feasible, get_model};

const MAX_CAP: usize = 4096;

struct Dfs<'a> {
    ctx: &'a ProductCtx<'a>,
    opts: &'a EvalOptions,
    cap: usize,
    deadline: Instant,
    arena: Arena,
    stats: EvalStats,
    steps: u64,
}

enum Outcome {
    Found(usize, Assignment),
    Exhausted,
    TimedOut,
}

impl Dfs<'_> {
    fn explore(
        &mut self,
        state_idx: usize,
        depth: usize,
        atoms: &[NormAtom],
    ) -> Result<Outcome, EvalError> {
        self.steps += 1;
        if self.steps.is_multiple_of(super::TIMEOUT_STRIDE) && Instant::now() >= self.deadline {
            return Ok(Outcome::TimedOut);
        }
        self.stats.states_expanded += 1;
        let (v, q) = {
            let s = self.arena.get(state_idx);
            (s.v, s.q)
        };
        if self.ctx.automaton.is_final(q) && feasible(atoms) {
            let model = model_for(atoms);
            return Ok(Outcome::Found(state_idx, model));
        }
        if depth == self.cap {
            self.stats.cap_exceeded = true;
            return Ok(Outcome::Exhausted);
        }
        for (etidx, edge, dir, neighbor, q_mid) in self.ctx.edge_transitions(v, q) {
            if self.opts.semantics == PathSemantics::Simple
                && self.arena.chain_contains(state_idx, neighbor)
            {
                continue;
            }
            let aut = self.ctx.automaton;
            let edge_constraint = aut.constraint(aut.transition(etidx).constraint);
            let Ground::Atoms(edge_atoms) =
                instantiate(edge_constraint, &self.ctx.graph.edge(edge).attrs)
            else {
                continue;
            };
            for (ntidx, q_next) in self.ctx.node_transitions(neighbor, q_mid) {
                let node_constraint = aut.constraint(aut.transition(ntidx).constraint);
                let Ground::Atoms(node_atoms) =
                    instantiate(node_constraint, &self.ctx.graph.node(neighbor).attrs)
                else {
                    continue;
                };
                let mut extended = atoms.to_vec();
                extended.extend(edge_atoms.iter().cloned());
                extended.extend(node_atoms);
                let idx = self.arena.push(Snapshot {
                    v: neighbor,
                    q: q_next,
                    edge: Some((edge, dir)),
                    prev: Some(state_idx),
                });
                self.stats.states_enqueued += 1;
                match self.explore(idx, depth + 1, &extended)? {
                    Outcome::Exhausted => {}
                    found_or_timeout => return Ok(found_or_timeout),
                }
            }
        }
        Ok(Outcome::Exhausted)
    }
}

/// Elimination over the raw accumulated atoms; duplicates are harmless.
fn feasible(atoms: &[NormAtom]) -> bool {
    match fm_feasible(atoms) {
        Ok(verdict) => verdict,
        // Over the elimination guards (many parameters): fall back to the
        // tightened store and the simplex. The brute-force verdict is still
        // independent of the macro-state search itself.
        Err(_) => crate::oracle::check_feasible(&store_of(atoms)),
    }
}

fn store_of(atoms: &[NormAtom]) -> BoundStore {
    tighten_all(&BoundStore::new(), atoms)
}

fn model_for(atoms: &[NormAtom]) -> Assignment {
    get_model(&store_of(atoms)).expect("feasible system has a model")
}

pub(super) fn run(
    ctx: &ProductCtx<'_>,
    start: NodeIdx,
    opts: &EvalOptions,
    deadline: Instant,
) -> Result<QueryResult, EvalError> {
    let cap = opts.walk_cap.unwrap_or(2 * ctx.graph.node_count() + 2);
    if cap > MAX_CAP {
        return Err(EvalError::CapTooLarge {
            got: cap,
            max: MAX_CAP,
        });
    }
    let mut dfs = Dfs {
        ctx,
        opts,
        cap,
        deadline,
        arena: Arena::default(),
        stats: EvalStats::default(),
        steps: 0,
    };
    let aut = ctx.automaton;

    // The empty path, then every walk beginning at the start node.
    if aut.is_final(aut.initial()) {
        return Ok(QueryResult::yes(
            Path::empty(),
            Assignment::default(),
            dfs.stats,
        ));
    }
    let start_attrs = &ctx.graph.node(start).attrs;
    for (tidx, q) in ctx.node_transitions(start, aut.initial()) {
        let constraint = aut.constraint(aut.transition(tidx).constraint);
        let Ground::Atoms(atoms) = instantiate(constraint, start_attrs) else {
            continue;
        };
        let idx = dfs.arena.push(Snapshot {
            v: start,
            q,
            edge: None,
            prev: None,
        });
        dfs.stats.states_enqueued += 1;
        match dfs.explore(idx, 0, &atoms)? {
            Outcome::Found(leaf, model) => {
                let path = dfs.arena.path_of(leaf);
                return Ok(QueryResult::yes(path, model, dfs.stats));
            }
            Outcome::TimedOut => return Ok(QueryResult::timeout(dfs.stats)),
            Outcome::Exhausted => {}
        }
    }
    Ok(QueryResult::no(dfs.stats))
}
