//! Query evaluation: a naive evaluator that accumulates instantiated
//! constraints and consults the oracle only at final automaton states, an
//! optimized evaluator that folds every transition into a tightest-bound
//! store and prunes infeasible branches immediately, and an exhaustive
//! brute-force reference for small graphs. All three search the product of
//! graph and automaton breadth-first with deterministic tie-breaking.

mod brute;
mod naive;
mod optimized;
mod product;
mod verify;

pub use product::{Arena, CountingOracle, EdgeFire, NodeFire, ProductCtx, Snapshot};
pub use verify::verify_answer;

use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::automaton::compile;
use crate::constraints::Assignment;
use crate::model::{Path, PropertyGraph};
use crate::oracle::{BuiltinOracle, FeasibilityOracle, OracleError};
use crate::query::PathQuery;
use crate::rat::Rat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Naive,
    Optimized,
    BruteForce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PathSemantics {
    /// Paths may repeat nodes.
    Walk,
    /// Paths must not repeat a node (checked along each candidate's own
    /// predecessor chain).
    Simple,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VisitedKey {
    /// Deduplicate on (node, state, incoming edge), ignoring the constraint
    /// payload. Cheap but incomplete when converging branches carry
    /// different constraints.
    Coarse,
    /// Deduplicate on (node, state, payload digest). Complete; the payload
    /// space is finite because bounds come from graph constants.
    StoreDigest,
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub algorithm: Algorithm,
    pub semantics: PathSemantics,
    pub visited: VisitedKey,
    pub timeout: Duration,
    /// Edge-count ceiling for brute-force walk enumeration; defaults to
    /// 2·|V|+2 when unset.
    pub walk_cap: Option<usize>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            algorithm: Algorithm::Optimized,
            semantics: PathSemantics::Walk,
            visited: VisitedKey::StoreDigest,
            timeout: Duration::from_secs(10),
            walk_cap: None,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct EvalStats {
    pub oracle_calls: u64,
    pub states_expanded: u64,
    pub states_enqueued: u64,
    #[serde(serialize_with = "ser_ms", rename = "time_ms")]
    pub elapsed: Duration,
    pub timed_out: bool,
    /// Brute force only: some walk hit the length cap, so exhaustiveness is
    /// not guaranteed.
    pub cap_exceeded: bool,
}

fn ser_ms<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64() * 1e3)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Answer {
    Yes,
    No,
    /// The deadline passed before an answer was found; distinct from `No`.
    Timeout,
}

#[derive(Debug, Clone)]
pub struct QueryResult {
    pub answer: Answer,
    pub path: Option<Path>,
    pub model: Option<Assignment>,
    pub stats: EvalStats,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("unknown start node `{0}`")]
    UnknownStartNode(String),
    #[error("oracle failure: {0}")]
    Oracle(#[from] OracleError),
    #[error("brute force needs a walk cap at most {max}, got {got}")]
    CapTooLarge { got: usize, max: usize },
}

/// Evaluates with the built-in exact oracle.
pub fn evaluate(
    graph: &PropertyGraph,
    query: &PathQuery,
    opts: &EvalOptions,
) -> Result<QueryResult, EvalError> {
    evaluate_with_oracle(graph, query, opts, &mut BuiltinOracle)
}

/// Evaluates against a caller-supplied oracle backend. The brute-force
/// algorithm ignores the oracle and decides feasibility by elimination.
pub fn evaluate_with_oracle(
    graph: &PropertyGraph,
    query: &PathQuery,
    opts: &EvalOptions,
    oracle: &mut dyn FeasibilityOracle,
) -> Result<QueryResult, EvalError> {
    let started = Instant::now();
    let Some(start) = graph.node_idx(&query.start) else {
        return Err(EvalError::UnknownStartNode(query.start.clone()));
    };
    let automaton = compile(&query.pattern);
    let ctx = ProductCtx::new(graph, &automaton);
    let deadline = started + opts.timeout;
    let mut result = match opts.algorithm {
        Algorithm::Naive => naive::run(&ctx, start, opts, oracle, deadline)?,
        Algorithm::Optimized => optimized::run(&ctx, start, opts, oracle, deadline)?,
        Algorithm::BruteForce => brute::run(&ctx, start, opts, deadline)?,
    };
    result.stats.elapsed = started.elapsed();
    Ok(result)
}

impl QueryResult {
    pub(crate) fn yes(path: Path, model: Assignment, stats: EvalStats) -> Self {
        QueryResult {
            answer: Answer::Yes,
            path: Some(path),
            model: Some(model),
            stats,
        }
    }

    pub(crate) fn no(stats: EvalStats) -> Self {
        QueryResult {
            answer: Answer::No,
            path: None,
            model: None,
            stats,
        }
    }

    pub(crate) fn timeout(stats: EvalStats) -> Self {
        let mut stats = stats;
        stats.timed_out = true;
        QueryResult {
            answer: Answer::Timeout,
            path: None,
            model: None,
            stats,
        }
    }

    /// JSON document: `answer` is `true`, `false`, or `"timeout"`; the path
    /// alternates node ids and edge hops; model values are exact fractions.
    pub fn to_json(&self, graph: &PropertyGraph) -> serde_json::Value {
        let answer = match self.answer {
            Answer::Yes => serde_json::Value::Bool(true),
            Answer::No => serde_json::Value::Bool(false),
            Answer::Timeout => serde_json::Value::String("timeout".into()),
        };
        let path = self.path.as_ref().map(|p| {
            let mut items = Vec::new();
            for (i, v) in p.nodes.iter().enumerate() {
                items.push(serde_json::json!(graph.node(*v).id));
                if let Some(&(e, dir)) = p.edges.get(i) {
                    items.push(serde_json::json!({
                        "edge": graph.edge(e).id,
                        "direction": dir,
                    }));
                }
            }
            serde_json::Value::Array(items)
        });
        let model = self.model.as_ref().map(|m| {
            let entries: serde_json::Map<String, serde_json::Value> =
                m.0.iter()
                    .map(|(name, value)| (name.clone(), json_rat(value)))
                    .collect();
            serde_json::Value::Object(entries)
        });
        serde_json::json!({
            "answer": answer,
            "path": path,
            "model": model,
            "stats": self.stats,
        })
    }
}

fn json_rat(value: &Rat) -> serde_json::Value {
    serde_json::json!({
        "num": value.numer().to_string(),
        "den": value.denom().to_string(),
    })
}

/// Deadlines are polled every 256 dequeues.
pub(crate) const TIMEOUT_STRIDE: u64 = 256;
