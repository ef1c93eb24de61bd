//! Cross-validation of the simplex oracle against Fourier-Motzkin
//! elimination on randomized constraint systems, plus model soundness and
//! the anti-cycling pivot budget.

use std::collections::BTreeMap;

use parapath::constraints::{tighten_all, BoundOp, BoundStore, DeltaRat, NormAtom};
use parapath::model::AttrMap;
use parapath::oracle::{check_feasible, fm_feasible, get_model_with_eps, Tableau};
use parapath::query::{CAtom, CmpOp, Constraint, LinExpr, VarRef};
use parapath::rat::{rat, rat_int, Rat};

mod common;
use common::Rng;

const PARAMS: [&str; 4] = ["p0", "p1", "p2", "p3"];

fn random_system(rng: &mut Rng) -> Vec<NormAtom> {
    let n_params = 1 + rng.below(4) as usize;
    let n_atoms = 1 + rng.below(12) as usize;
    let mut atoms = Vec::new();
    let mut diseqs = 0;
    for _ in 0..n_atoms {
        let width = 1 + rng.below(n_params.min(3) as u64) as usize;
        let mut coeffs = BTreeMap::new();
        for _ in 0..width {
            let p = PARAMS[rng.below(n_params as u64) as usize];
            let mut c = rng.int(-5, 5);
            if c == 0 {
                c = 1;
            }
            coeffs.insert(p.to_string(), rat_int(c));
        }
        let bound = rat_int(rng.int(-20, 20));
        let (op, eps) = match rng.below(7) {
            0 | 1 => (BoundOp::Le, 0),
            2 => (BoundOp::Le, -1),
            3 | 4 => (BoundOp::Ge, 0),
            5 => (BoundOp::Ge, 1),
            _ if diseqs < 3 => {
                diseqs += 1;
                (BoundOp::Ne, 0)
            }
            _ => (BoundOp::Le, 0),
        };
        atoms.push(NormAtom::new(coeffs, op, DeltaRat::new(bound, eps)));
    }
    atoms
}

fn store_of(atoms: &[NormAtom]) -> BoundStore {
    tighten_all(&BoundStore::new(), atoms)
}

#[test]
fn simplex_agrees_with_fourier_motzkin() {
    let mut rng = Rng::new(42);
    let (mut sat, mut unsat) = (0, 0);
    for case in 0..400 {
        let atoms = random_system(&mut rng);
        let store = store_of(&atoms);
        let fast = check_feasible(&store);
        let slow = fm_feasible(&atoms).expect("within elimination limits");
        assert_eq!(fast, slow, "case {case}: atoms {atoms:?}");
        if fast {
            sat += 1;
        } else {
            unsat += 1;
        }
    }
    // The generator should exercise both verdicts.
    assert!(
        sat > 50 && unsat > 50,
        "skewed sample: {sat} sat / {unsat} unsat"
    );
}

#[test]
fn models_satisfy_every_atom_exactly() {
    let mut rng = Rng::new(7);
    let mut checked = 0;
    for _ in 0..400 {
        let atoms = random_system(&mut rng);
        let store = store_of(&atoms);
        if let Some((model, eps0)) = get_model_with_eps(&store) {
            assert!(eps0 > Rat::from_integer(0.into()));
            for atom in store.atoms() {
                assert_eq!(
                    atom.satisfied_by(&model, &eps0),
                    Some(true),
                    "model {model:?} eps {eps0} violates {atom}"
                );
            }
            checked += 1;
        }
    }
    assert!(checked > 50);
}

#[test]
fn pivot_count_stays_within_budget() {
    let mut rng = Rng::new(1234);
    for _ in 0..400 {
        let atoms = random_system(&mut rng);
        let store = store_of(&atoms);
        let Some(mut tableau) = Tableau::build(&store) else {
            continue;
        };
        let (rows, cols) = tableau.size();
        let budget = 10 * ((rows + cols) as u64 + 1).pow(2);
        tableau.check();
        assert!(
            tableau.pivots <= budget,
            "{} pivots for {rows} rows x {cols} cols",
            tableau.pivots
        );
    }
}

/// Like `random_system` but with fractional coefficients and bounds, the
/// regime template constraints such as `0.5*?p + c <= attr` produce.
fn random_fractional_system(rng: &mut Rng) -> Vec<NormAtom> {
    let n_params = 1 + rng.below(3) as usize;
    let n_atoms = 1 + rng.below(10) as usize;
    let mut atoms = Vec::new();
    for _ in 0..n_atoms {
        let width = 1 + rng.below(n_params as u64) as usize;
        let mut coeffs = BTreeMap::new();
        for _ in 0..width {
            let p = PARAMS[rng.below(n_params as u64) as usize];
            let num = {
                let c = rng.int(-6, 6);
                if c == 0 {
                    1
                } else {
                    c
                }
            };
            let den = [1, 2, 3, 4][rng.below(4) as usize];
            coeffs.insert(p.to_string(), rat(num, den));
        }
        let bound = rat(rng.int(-24, 24), [1, 2, 3][rng.below(3) as usize]);
        let (op, eps) = match rng.below(6) {
            0 | 1 => (BoundOp::Le, 0),
            2 => (BoundOp::Le, -1),
            3 | 4 => (BoundOp::Ge, 0),
            _ => (BoundOp::Ge, 1),
        };
        atoms.push(NormAtom::new(coeffs, op, DeltaRat { std: bound, eps: rat_int(eps) }));
    }
    atoms
}

#[test]
fn simplex_agrees_with_elimination_on_fractional_systems() {
    let mut rng = Rng::new(5150);
    let (mut sat, mut unsat) = (0, 0);
    for case in 0..300 {
        let atoms = random_fractional_system(&mut rng);
        let store = store_of(&atoms);
        let fast = check_feasible(&store);
        let slow = fm_feasible(&atoms).expect("within limits");
        assert_eq!(fast, slow, "case {case}: {atoms:?}");
        if fast {
            sat += 1;
            let (model, eps0) = get_model_with_eps(&store).expect("sat has a model");
            for atom in store.atoms() {
                assert_eq!(atom.satisfied_by(&model, &eps0), Some(true), "case {case}: {atom}");
            }
        } else {
            unsat += 1;
        }
    }
    assert!(sat > 40 && unsat > 40, "skewed: {sat}/{unsat}");
}

#[test]
fn infeasibility_is_preserved_by_tightening() {
    let mut rng = Rng::new(99);
    let mut hit = 0;
    for _ in 0..600 {
        let atoms = random_system(&mut rng);
        let store = store_of(&atoms);
        if check_feasible(&store) {
            continue;
        }
        hit += 1;
        let extra = random_system(&mut rng);
        let bigger = tighten_all(&store, &extra);
        assert!(
            !check_feasible(&bigger),
            "tightening revived {atoms:?} + {extra:?}"
        );
    }
    assert!(hit > 30);
}

// --- strict-inequality rewriting ------------------------------------------

fn param_expr(name: &str, coef: i64) -> LinExpr {
    let mut e = LinExpr::default();
    e.add_term(VarRef::Param(name.to_string()), rat_int(coef));
    e
}

/// Random strict/weak comparison constraints over parameters only.
fn random_strict_constraint(rng: &mut Rng) -> Constraint {
    let n_params = 1 + rng.below(3) as usize;
    let n_atoms = 1 + rng.below(8) as usize;
    let mut atoms = Vec::new();
    for _ in 0..n_atoms {
        let mut lhs = LinExpr::default();
        let width = 1 + rng.below(2) as usize;
        let start = rng.below(n_params as u64) as usize;
        for k in 0..width.min(n_params) {
            let p = PARAMS[(start + k) % n_params];
            let mut c = rng.int(-4, 4);
            if c == 0 {
                c = 2;
            }
            lhs.add(&param_expr(p, c), &Rat::from_integer(1.into()));
        }
        let rhs = LinExpr::constant(rat_int(rng.int(-10, 10)));
        let op = match rng.below(6) {
            0 => CmpOp::Lt,
            1 => CmpOp::Gt,
            2 => CmpOp::Le,
            3 => CmpOp::Ge,
            4 => CmpOp::Eq,
            _ => CmpOp::Ne,
        };
        atoms.push(CAtom::Cmp { lhs, op, rhs });
    }
    Constraint(atoms)
}

/// Encodes the same constraint with an explicit positive epsilon variable
/// instead of delta-rational bounds: an independent route to the same
/// satisfiability question.
fn explicit_eps_atoms(constraint: &Constraint) -> Vec<NormAtom> {
    const EPS: &str = "xeps";
    let mut out = Vec::new();
    for catom in &constraint.0 {
        let CAtom::Cmp { lhs, op, rhs } = catom else {
            unreachable!()
        };
        let mut coeffs: BTreeMap<String, Rat> = BTreeMap::new();
        let constant = &lhs.constant - &rhs.constant;
        for (expr, sign) in [(lhs, 1i64), (rhs, -1i64)] {
            for (var, coef) in &expr.terms {
                let VarRef::Param(p) = var else {
                    unreachable!()
                };
                let entry = coeffs.entry(p.clone()).or_insert_with(|| rat_int(0));
                *entry += coef * rat_int(sign);
            }
        }
        coeffs.retain(|_, c| *c != rat_int(0));
        let bound = -constant;
        assert!(!coeffs.is_empty(), "generator keeps parameters distinct");
        let with_eps = |coeffs: &BTreeMap<String, Rat>, eps_coef: i64| {
            let mut c = coeffs.clone();
            c.insert(EPS.to_string(), rat_int(eps_coef));
            c
        };
        match op {
            CmpOp::Le => out.push(NormAtom::new(coeffs, BoundOp::Le, DeltaRat::exact(bound))),
            CmpOp::Ge => out.push(NormAtom::new(coeffs, BoundOp::Ge, DeltaRat::exact(bound))),
            CmpOp::Lt => out.push(NormAtom::new(
                with_eps(&coeffs, 1),
                BoundOp::Le,
                DeltaRat::exact(bound),
            )),
            CmpOp::Gt => out.push(NormAtom::new(
                with_eps(&coeffs, -1),
                BoundOp::Ge,
                DeltaRat::exact(bound),
            )),
            CmpOp::Eq => {
                out.push(NormAtom::new(
                    coeffs.clone(),
                    BoundOp::Le,
                    DeltaRat::exact(bound.clone()),
                ));
                out.push(NormAtom::new(coeffs, BoundOp::Ge, DeltaRat::exact(bound)));
            }
            CmpOp::Ne => out.push(NormAtom::new(coeffs, BoundOp::Ne, DeltaRat::exact(bound))),
        }
    }
    // eps strictly positive.
    out.push(NormAtom::new(
        BTreeMap::from([(EPS.to_string(), rat_int(1))]),
        BoundOp::Ge,
        DeltaRat::new(rat_int(0), 1),
    ));
    out
}

#[test]
fn strict_rewrite_preserves_satisfiability() {
    let mut rng = Rng::new(2024);
    for case in 0..300 {
        let constraint = random_strict_constraint(&mut rng);
        // Production route: instantiate (parameters only, no attributes)
        // rewrites strict ops into delta-rational bounds.
        let parapath::constraints::Ground::Atoms(delta_atoms) =
            parapath::constraints::instantiate(&constraint, &AttrMap::new())
        else {
            // Ground-false conjuncts cannot appear: every atom has params.
            unreachable!()
        };
        let delta_verdict = fm_feasible(&delta_atoms).expect("small system");
        let explicit_verdict = fm_feasible(&explicit_eps_atoms(&constraint)).expect("small system");
        assert_eq!(
            delta_verdict, explicit_verdict,
            "case {case}: {constraint:?}"
        );
        // And the simplex agrees with both.
        assert_eq!(
            check_feasible(&store_of(&delta_atoms)),
            delta_verdict,
            "case {case}"
        );
    }
}
