//! Feasibility oracles for bound-store constraint systems.
//!
//! The built-in oracle is an exact simplex over delta-rationals. Excluded
//! values (`term != c`) are handled by hyperplane containment: once the
//! polyhedron of upper/lower bounds is known nonempty, `term` is maximized
//! and minimized over it; the polyhedron lies inside `term = c` exactly when
//! both optima pin it there, and a convex set inside a finite union of
//! hyperplanes lies inside one of them.
//!
//! An adapter speaking SMT-LIB2 to an external solver process is available
//! as an alternative backend, and a Fourier-Motzkin eliminator serves as an
//! independent cross-check.

mod fm;
mod simplex;
pub mod smtlib;

pub use fm::{fm_feasible, FmError};
pub use simplex::{Optimum, Tableau};
pub use smtlib::SmtOracle;

use num_traits::{One, Signed};
use thiserror::Error;

use crate::constraints::{Assignment, BoundOp, BoundStore, DeltaRat, NormAtom};
use crate::rat::{rat, Rat};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("model requested for an infeasible store")]
    Infeasible,
    #[error("failed to launch solver `{command}`: {source}")]
    SolverLaunch {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("solver protocol error: {0}")]
    Protocol(String),
    #[error("solver answered `unknown`")]
    Unknown,
}

/// Feasibility decision and model extraction behind one interface, so an
/// evaluation can run against the built-in solver or an external process.
pub trait FeasibilityOracle {
    fn check_feasible(&mut self, store: &BoundStore) -> Result<bool, OracleError>;
    fn get_model(&mut self, store: &BoundStore) -> Result<Assignment, OracleError>;
}

/// The default exact in-process oracle. Stateless: every call stands alone.
#[derive(Debug, Default, Clone)]
pub struct BuiltinOracle;

impl FeasibilityOracle for BuiltinOracle {
    fn check_feasible(&mut self, store: &BoundStore) -> Result<bool, OracleError> {
        Ok(check_feasible(store))
    }

    fn get_model(&mut self, store: &BoundStore) -> Result<Assignment, OracleError> {
        get_model(store).ok_or(OracleError::Infeasible)
    }
}

/// True iff some rational assignment satisfies every bound and exclusion,
/// with strict inequalities read through the epsilon components.
pub fn check_feasible(store: &BoundStore) -> bool {
    let Some(mut tableau) = Tableau::build(store) else {
        return false;
    };
    if !tableau.check() {
        return false;
    }
    for (term, values) in store.exclusions() {
        for value in values {
            let pinned = DeltaRat::exact(value.clone());
            let max = tableau.optimize(term, true);
            if max != Optimum::Bounded(pinned.clone()) {
                continue;
            }
            let min = tableau.optimize(term, false);
            if min == Optimum::Bounded(pinned) {
                // Every feasible point has term = value.
                return false;
            }
        }
    }
    true
}

/// Extracts a concrete rational model from a feasible store. `None` when the
/// store is infeasible.
pub fn get_model(store: &BoundStore) -> Option<Assignment> {
    get_model_with_eps(store).map(|(assignment, _)| assignment)
}

/// Like [`get_model`], also returning the concrete epsilon under which every
/// stored atom holds by exact substitution.
pub fn get_model_with_eps(store: &BoundStore) -> Option<(Assignment, Rat)> {
    let mut work = store.clone();
    if !check_feasible(&work) {
        return None;
    }
    let exclusions: Vec<(crate::constraints::LinTerm, Rat)> = store
        .exclusions()
        .flat_map(|(t, vs)| vs.iter().map(move |v| (t.clone(), v.clone())))
        .collect();
    let tableau = loop {
        let mut tableau = Tableau::build(&work).expect("feasible store builds");
        let ok = tableau.check();
        debug_assert!(ok, "branching preserved feasibility");
        // A vertex sitting exactly on an excluded hyperplane is pushed off
        // it by branching strictly to one side; the left branch is tried
        // first.
        let hit = exclusions
            .iter()
            .find(|(term, value)| tableau.value_of(term) == DeltaRat::exact(value.clone()));
        match hit {
            None => break tableau,
            Some((term, value)) => {
                let coeffs = term
                    .coeffs()
                    .map(|(k, v)| (k.to_string(), v.clone()))
                    .collect::<std::collections::BTreeMap<_, _>>();
                let left = NormAtom::new(
                    coeffs.clone(),
                    BoundOp::Le,
                    DeltaRat::new(value.clone(), -1),
                );
                let (left_store, _) = work.tighten(&left);
                let left_ok = Tableau::build(&left_store).is_some_and(|mut t| t.check());
                if left_ok {
                    work = left_store;
                } else {
                    let right = NormAtom::new(coeffs, BoundOp::Ge, DeltaRat::new(value.clone(), 1));
                    work = work.tighten(&right).0;
                }
            }
        }
    };

    // Concretize epsilon: small enough that every delta-separated bound
    // comparison survives substitution, capped at 1.
    let mut eps0 = Rat::one();
    for (value, lo, hi) in tableau.bound_triples() {
        if let Some(l) = lo {
            if l.std < value.std && l.eps > value.eps {
                let cap = (&value.std - &l.std) / (&l.eps - &value.eps);
                eps0 = eps0.min(cap);
            }
        }
        if let Some(h) = hi {
            if value.std < h.std && value.eps > h.eps {
                let cap = (&h.std - &value.std) / (&value.eps - &h.eps);
                eps0 = eps0.min(cap);
            }
        }
    }
    debug_assert!(eps0.is_positive());

    // The remaining exclusions differ from their hyperplanes symbolically;
    // halving can only be needed finitely often to dodge accidental hits.
    loop {
        let clash = exclusions.iter().any(|(term, value)| {
            let v = tableau.value_of(term);
            v.concretize(&eps0) == *value
        });
        if !clash {
            break;
        }
        eps0 *= rat(1, 2);
    }

    let assignment = Assignment(
        tableau
            .assignment()
            .into_iter()
            .map(|(name, value)| {
                let concrete = value.concretize(&eps0);
                (name, concrete)
            })
            .collect(),
    );
    debug_assert!(store.satisfied_by(&assignment, &eps0));
    Some((assignment, eps0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{tighten_all, LinTerm};
    use crate::rat::rat_int;
    use num_traits::Zero;
    use std::collections::BTreeMap;

    fn atom(param: &str, op: BoundOp, std: i64, eps: i64) -> NormAtom {
        NormAtom {
            term: LinTerm::param(param),
            op,
            bound: DeltaRat::new(rat_int(std), eps),
        }
    }

    fn store_of(atoms: &[NormAtom]) -> BoundStore {
        tighten_all(&BoundStore::new(), atoms)
    }

    #[test]
    fn empty_store_is_feasible() {
        assert!(check_feasible(&BoundStore::new()));
        assert_eq!(get_model(&BoundStore::new()), Some(Assignment::default()));
    }

    #[test]
    fn crossing_bounds_are_infeasible() {
        let s = store_of(&[atom("p", BoundOp::Ge, 3, 0), atom("p", BoundOp::Le, 2, 0)]);
        assert!(!check_feasible(&s));
        assert_eq!(get_model(&s), None);
    }

    #[test]
    fn strict_weak_clash_is_infeasible() {
        // p < 5 together with p >= 5.
        let s = store_of(&[atom("p", BoundOp::Le, 5, -1), atom("p", BoundOp::Ge, 5, 0)]);
        assert!(!check_feasible(&s));
    }

    #[test]
    fn chained_terms_force_a_point() {
        // q >= 32, p <= 25, q - p <= 7: only p = 25, q = 32 works.
        let mut qp = BTreeMap::new();
        qp.insert("p".to_string(), rat_int(-1));
        qp.insert("q".to_string(), rat_int(1));
        let s = store_of(&[
            atom("q", BoundOp::Ge, 32, 0),
            atom("p", BoundOp::Le, 25, 0),
            NormAtom::new(qp, BoundOp::Le, DeltaRat::exact(rat_int(7))),
        ]);
        assert!(check_feasible(&s));
        let model = get_model(&s).unwrap();
        assert_eq!(model.get("p"), Some(&rat_int(25)));
        assert_eq!(model.get("q"), Some(&rat_int(32)));
    }

    #[test]
    fn forced_value_model() {
        let s = store_of(&[atom("p", BoundOp::Le, 5, 0), atom("p", BoundOp::Ge, 5, 0)]);
        let model = get_model(&s).unwrap();
        assert_eq!(model.get("p"), Some(&rat_int(5)));
    }

    #[test]
    fn strict_lower_bound_model_is_strictly_above() {
        let s = store_of(&[atom("p", BoundOp::Ge, 3, 1)]);
        let model = get_model(&s).unwrap();
        assert!(*model.get("p").unwrap() > rat_int(3));
    }

    #[test]
    fn exclusion_on_pinned_value_is_infeasible() {
        let s = store_of(&[
            atom("p", BoundOp::Le, 0, 0),
            atom("p", BoundOp::Ge, 0, 0),
            atom("p", BoundOp::Ne, 0, 0),
        ]);
        assert!(!check_feasible(&s));
    }

    #[test]
    fn exclusion_inside_interval_stays_feasible() {
        let s = store_of(&[
            atom("p", BoundOp::Le, 1, 0),
            atom("p", BoundOp::Ge, 0, 0),
            atom("p", BoundOp::Ne, 0, 0),
            atom("p", BoundOp::Ne, 1, 0),
        ]);
        assert!(check_feasible(&s));
        let model = get_model(&s).unwrap();
        let p = model.get("p").unwrap();
        assert!(*p > rat_int(0) && *p < rat_int(1));
    }

    #[test]
    fn exclusion_forces_branching_on_degenerate_vertex() {
        // The phase-1 vertex for 0 <= p <= 2 may land on p = 0; the model
        // must still avoid every excluded value.
        let s = store_of(&[
            atom("p", BoundOp::Ge, 0, 0),
            atom("p", BoundOp::Le, 2, 0),
            atom("p", BoundOp::Ne, 0, 0),
            atom("p", BoundOp::Ne, 2, 0),
            atom("p", BoundOp::Ne, 1, 0),
        ]);
        assert!(check_feasible(&s));
        let model = get_model(&s).unwrap();
        let p = model.get("p").unwrap();
        assert!(*p != rat_int(0) && *p != rat_int(1) && *p != rat_int(2));
    }

    #[test]
    fn hyperplane_containment_on_composite_term() {
        // p + q pinned to 4, with p free in [0, 4]: p + q != 4 kills it,
        // p != 17 does not.
        let mut pq = BTreeMap::new();
        pq.insert("p".to_string(), rat_int(1));
        pq.insert("q".to_string(), rat_int(1));
        let base = [
            NormAtom::new(pq.clone(), BoundOp::Le, DeltaRat::exact(rat_int(4))),
            NormAtom::new(pq.clone(), BoundOp::Ge, DeltaRat::exact(rat_int(4))),
            atom("p", BoundOp::Ge, 0, 0),
            atom("p", BoundOp::Le, 4, 0),
        ];
        let mut dead = base.to_vec();
        dead.push(NormAtom::new(pq, BoundOp::Ne, DeltaRat::exact(rat_int(4))));
        assert!(!check_feasible(&store_of(&dead)));
        let mut alive = base.to_vec();
        alive.push(atom("p", BoundOp::Ne, 17, 0));
        assert!(check_feasible(&store_of(&alive)));
        let model = get_model(&store_of(&alive)).unwrap();
        assert_eq!(
            model.get("p").unwrap() + model.get("q").unwrap(),
            rat_int(4)
        );
    }

    #[test]
    fn unbounded_directions_are_fine() {
        let s = store_of(&[atom("p", BoundOp::Ne, 0, 0)]);
        assert!(check_feasible(&s));
        let model = get_model(&s).unwrap();
        assert!(!model.get("p").unwrap().is_zero());
    }
}
