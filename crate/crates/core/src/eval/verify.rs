//! Independent answer checking: given a claimed witness path and parameter
//! model, confirm the path is well-formed in the graph and that its element
//! sequence is accepted by the pattern under that fixed model. Constraints
//! are evaluated by direct exact substitution; no feasibility oracle is
//! involved.

use std::collections::HashSet;

use num_traits::Zero;

use crate::automaton::compile;
use crate::constraints::Assignment;
use crate::model::{AttrMap, Element, Path, PropertyGraph, Value};
use crate::query::{CAtom, CmpOp, Constraint, LinExpr, PathQuery, VarRef};
use crate::rat::Rat;

use super::PathSemantics;

/// True iff `(path, model)` is a valid witness for the query under the given
/// path semantics.
pub fn verify_answer(
    graph: &PropertyGraph,
    query: &PathQuery,
    path: &Path,
    model: &Assignment,
    semantics: PathSemantics,
) -> bool {
    if !path.is_well_formed(graph) {
        return false;
    }
    if let Some(&first) = path.nodes.first() {
        if graph.node(first).id != query.start {
            return false;
        }
    }
    if semantics == PathSemantics::Simple && path.repeats_node() {
        return false;
    }
    let automaton = compile(&query.pattern);
    let elements = path.elements(graph);

    // Nondeterministic run over the element sequence; every transition's
    // constraint must hold outright under the model.
    let mut visited: HashSet<(u32, usize)> = HashSet::new();
    let mut stack = vec![(automaton.initial(), 0usize)];
    while let Some((state, pos)) = stack.pop() {
        if pos == elements.len() {
            if automaton.is_final(state) {
                return true;
            }
            continue;
        }
        let element = &elements[pos];
        for &tidx in automaton.outgoing(state) {
            let t = automaton.transition(tidx);
            if t.inverse != element.inverse {
                continue;
            }
            if Some(automaton.label_name(t.label)) != graph_label_name(graph, element) {
                continue;
            }
            if !constraint_holds(automaton.constraint(t.constraint), element.attrs, model) {
                continue;
            }
            if visited.insert((t.to.0, pos + 1)) {
                stack.push((t.to, pos + 1));
            }
        }
    }
    false
}

fn graph_label_name<'g>(graph: &'g PropertyGraph, element: &Element<'g>) -> Option<&'g str> {
    Some(graph.label_name(element.label))
}

fn constraint_holds(constraint: &Constraint, attrs: &AttrMap, model: &Assignment) -> bool {
    constraint.0.iter().all(|atom| match atom {
        CAtom::StrEq { attr, value } => {
            matches!(attrs.get(attr), Some(Value::Str(actual)) if actual == value)
        }
        CAtom::Cmp { lhs, op, rhs } => {
            let (Some(l), Some(r)) = (eval_expr(lhs, attrs, model), eval_expr(rhs, attrs, model))
            else {
                return false;
            };
            match op {
                CmpOp::Lt => l < r,
                CmpOp::Gt => l > r,
                CmpOp::Le => l <= r,
                CmpOp::Ge => l >= r,
                CmpOp::Eq => l == r,
                CmpOp::Ne => l != r,
            }
        }
    })
}

fn eval_expr(expr: &LinExpr, attrs: &AttrMap, model: &Assignment) -> Option<Rat> {
    let mut acc = expr.constant.clone();
    for (var, coef) in &expr.terms {
        let value = match var {
            VarRef::Attr(name) => match attrs.get(name) {
                Some(Value::Num(v)) => v.clone(),
                _ => return None,
            },
            // Parameters that cancelled out of every stored atom are
            // unconstrained; any value completes the model.
            VarRef::Param(name) => model.get(name).cloned().unwrap_or_else(Rat::zero),
        };
        acc += coef * value;
    }
    Some(acc)
}
