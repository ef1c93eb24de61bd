//! Constraint instantiation and the bound store.
//!
//! When a transition constraint is matched against a graph element, every
//! attribute occurrence is replaced by the element's value. String equalities
//! and fully-ground comparisons are decided on the spot; what remains are
//! comparisons over global parameters only. Strict comparisons are rewritten
//! with a shared positive infinitesimal:
//!
//! ```text
//! t < t'   becomes   t + eps <= t'
//! t > t'   becomes   t - eps >= t'
//! t = t'   becomes   t <= t'  and  t >= t'
//! ```
//!
//! so every surviving atom is `term <= bound`, `term >= bound`, or
//! `term != c`, with the bound a delta-rational (rational plus an epsilon
//! coefficient). A [`BoundStore`] keeps only the tightest bound per term plus
//! the set of excluded values, which is what makes macro states mergeable.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};

use crate::model::{AttrMap, Value};
use crate::query::{CAtom, CmpOp, Constraint, LinExpr, VarRef};
use crate::rat::Rat;

/// Rational plus a symbolic multiple of a positive infinitesimal.
/// Ordering is lexicographic; arithmetic is componentwise.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DeltaRat {
    pub std: Rat,
    pub eps: Rat,
}

impl DeltaRat {
    pub fn exact(std: Rat) -> Self {
        DeltaRat {
            std,
            eps: Rat::zero(),
        }
    }

    pub fn new(std: Rat, eps: i64) -> Self {
        DeltaRat {
            std,
            eps: crate::rat::rat_int(eps),
        }
    }

    pub fn zero() -> Self {
        DeltaRat::exact(Rat::zero())
    }

    pub fn scale(&self, factor: &Rat) -> Self {
        DeltaRat {
            std: &self.std * factor,
            eps: &self.eps * factor,
        }
    }

    /// Concrete value once epsilon is pinned to `eps0`.
    pub fn concretize(&self, eps0: &Rat) -> Rat {
        &self.std + &self.eps * eps0
    }
}

impl std::ops::Add<&DeltaRat> for DeltaRat {
    type Output = DeltaRat;
    fn add(self, rhs: &DeltaRat) -> DeltaRat {
        DeltaRat {
            std: self.std + &rhs.std,
            eps: self.eps + &rhs.eps,
        }
    }
}

impl std::ops::Sub<&DeltaRat> for DeltaRat {
    type Output = DeltaRat;
    fn sub(self, rhs: &DeltaRat) -> DeltaRat {
        DeltaRat {
            std: self.std - &rhs.std,
            eps: self.eps - &rhs.eps,
        }
    }
}

impl fmt::Display for DeltaRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.eps.is_zero() {
            write!(f, "{}", self.std)
        } else {
            write!(
                f,
                "{}{}{}e",
                self.std,
                if self.eps.is_negative() { "" } else { "+" },
                self.eps
            )
        }
    }
}

/// Canonical linear term over global parameters: no zero coefficients, and
/// the coefficient of the lexicographically first parameter is 1 (atoms are
/// rescaled on construction, flipping the comparison when negative).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinTerm(BTreeMap<String, Rat>);

impl LinTerm {
    pub fn param(name: &str) -> Self {
        LinTerm(BTreeMap::from([(name.to_string(), Rat::one())]))
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&str, &Rat)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn params(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn eval(&self, assignment: &Assignment) -> Option<Rat> {
        let mut acc = Rat::zero();
        for (p, c) in &self.0 {
            acc += c * assignment.get(p)?;
        }
        Some(acc)
    }
}

impl fmt::Display for LinTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (name, coef) in &self.0 {
            if !first {
                write!(f, "+")?;
            }
            write!(f, "{coef}*{name}")?;
            first = false;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoundOp {
    Le,
    Ge,
    Ne,
}

/// Normalized atom: `term <= bound`, `term >= bound`, or `term != bound`.
/// Disequalities never carry an epsilon component.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NormAtom {
    pub term: LinTerm,
    pub op: BoundOp,
    pub bound: DeltaRat,
}

impl NormAtom {
    /// Builds an atom from raw coefficients, rescaling so the leading
    /// coefficient is 1. Panics on an empty term; ground facts are decided
    /// before normalization.
    pub fn new(coeffs: BTreeMap<String, Rat>, op: BoundOp, bound: DeltaRat) -> Self {
        assert!(
            !coeffs.is_empty(),
            "ground atoms are decided, not normalized"
        );
        let lead = coeffs.values().next().expect("nonempty").clone();
        let scaled: BTreeMap<String, Rat> =
            coeffs.into_iter().map(|(k, v)| (k, v / &lead)).collect();
        let bound = bound.scale(&(Rat::one() / &lead));
        let op = if lead.is_negative() {
            match op {
                BoundOp::Le => BoundOp::Ge,
                BoundOp::Ge => BoundOp::Le,
                BoundOp::Ne => BoundOp::Ne,
            }
        } else {
            op
        };
        NormAtom {
            term: LinTerm(scaled),
            op,
            bound,
        }
    }

    pub fn satisfied_by(&self, assignment: &Assignment, eps0: &Rat) -> Option<bool> {
        let value = self.term.eval(assignment)?;
        let bound = self.bound.concretize(eps0);
        Some(match self.op {
            BoundOp::Le => value <= bound,
            BoundOp::Ge => value >= bound,
            BoundOp::Ne => value != bound,
        })
    }
}

impl fmt::Display for NormAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.op {
            BoundOp::Le => "<=",
            BoundOp::Ge => ">=",
            BoundOp::Ne => "!=",
        };
        write!(f, "{} {} {}", self.term, op, self.bound)
    }
}

/// Assignment of rational values to global parameters.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Assignment(pub BTreeMap<String, Rat>);

impl Assignment {
    pub fn get(&self, param: &str) -> Option<&Rat> {
        self.0.get(param)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Result of grounding a constraint against one element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ground {
    Atoms(Vec<NormAtom>),
    Reject,
}

/// Substitutes the element's attribute values into the constraint. String
/// equalities and ground comparisons are decided immediately; a false one,
/// a missing attribute, or arithmetic over a string value all reject the
/// transition. Surviving parameterized atoms come back normalized.
pub fn instantiate(constraint: &Constraint, attrs: &AttrMap) -> Ground {
    let mut atoms = Vec::new();
    for catom in &constraint.0 {
        match catom {
            CAtom::StrEq { attr, value } => match attrs.get(attr) {
                Some(Value::Str(actual)) if actual == value => {}
                _ => return Ground::Reject,
            },
            CAtom::Cmp { lhs, op, rhs } => {
                // diff = lhs - rhs, with attributes folded into the constant.
                let Some((coeffs, constant)) = ground_diff(lhs, rhs, attrs) else {
                    return Ground::Reject;
                };
                if coeffs.is_empty() {
                    let ok = match op {
                        CmpOp::Lt => constant.is_negative(),
                        CmpOp::Gt => constant.is_positive(),
                        CmpOp::Le => !constant.is_positive(),
                        CmpOp::Ge => !constant.is_negative(),
                        CmpOp::Eq => constant.is_zero(),
                        CmpOp::Ne => !constant.is_zero(),
                    };
                    if !ok {
                        return Ground::Reject;
                    }
                    continue;
                }
                let rhs_const = -constant;
                match op {
                    CmpOp::Le => atoms.push(NormAtom::new(
                        coeffs,
                        BoundOp::Le,
                        DeltaRat::exact(rhs_const),
                    )),
                    CmpOp::Lt => atoms.push(NormAtom::new(
                        coeffs,
                        BoundOp::Le,
                        DeltaRat::new(rhs_const, -1),
                    )),
                    CmpOp::Ge => atoms.push(NormAtom::new(
                        coeffs,
                        BoundOp::Ge,
                        DeltaRat::exact(rhs_const),
                    )),
                    CmpOp::Gt => atoms.push(NormAtom::new(
                        coeffs,
                        BoundOp::Ge,
                        DeltaRat::new(rhs_const, 1),
                    )),
                    CmpOp::Eq => {
                        let bound = DeltaRat::exact(rhs_const);
                        atoms.push(NormAtom::new(coeffs.clone(), BoundOp::Le, bound.clone()));
                        atoms.push(NormAtom::new(coeffs, BoundOp::Ge, bound));
                    }
                    CmpOp::Ne => atoms.push(NormAtom::new(
                        coeffs,
                        BoundOp::Ne,
                        DeltaRat::exact(rhs_const),
                    )),
                }
            }
        }
    }
    Ground::Atoms(atoms)
}

/// lhs - rhs as (parameter coefficients, constant); `None` when an attribute
/// is missing or string-valued.
fn ground_diff(
    lhs: &LinExpr,
    rhs: &LinExpr,
    attrs: &AttrMap,
) -> Option<(BTreeMap<String, Rat>, Rat)> {
    let mut coeffs: BTreeMap<String, Rat> = BTreeMap::new();
    let mut constant = &lhs.constant - &rhs.constant;
    let mut fold = |expr: &LinExpr, sign: Rat| -> Option<()> {
        for (var, coef) in &expr.terms {
            let contribution = coef * &sign;
            match var {
                VarRef::Param(p) => {
                    let entry = coeffs.entry(p.clone()).or_insert_with(Rat::zero);
                    *entry += contribution;
                }
                VarRef::Attr(a) => match attrs.get(a) {
                    Some(Value::Num(v)) => constant += contribution * v,
                    _ => return None,
                },
            }
        }
        Some(())
    };
    fold(lhs, Rat::one())?;
    fold(rhs, -Rat::one())?;
    coeffs.retain(|_, c| !c.is_zero());
    Some((coeffs, constant))
}

/// Tightest-bound store: per canonical term, at most one upper bound, one
/// lower bound, and a set of excluded values.
#[derive(Debug, Clone, PartialEq, Eq, Default, PartialOrd, Ord, Hash)]
pub struct BoundStore {
    upper: BTreeMap<LinTerm, DeltaRat>,
    lower: BTreeMap<LinTerm, DeltaRat>,
    excluded: BTreeMap<LinTerm, BTreeSet<Rat>>,
}

impl BoundStore {
    pub fn new() -> Self {
        BoundStore::default()
    }

    pub fn is_empty(&self) -> bool {
        self.upper.is_empty() && self.lower.is_empty() && self.excluded.is_empty()
    }

    pub fn upper_bounds(&self) -> impl Iterator<Item = (&LinTerm, &DeltaRat)> {
        self.upper.iter()
    }

    pub fn lower_bounds(&self) -> impl Iterator<Item = (&LinTerm, &DeltaRat)> {
        self.lower.iter()
    }

    pub fn exclusions(&self) -> impl Iterator<Item = (&LinTerm, &BTreeSet<Rat>)> {
        self.excluded.iter()
    }

    pub fn upper(&self, term: &LinTerm) -> Option<&DeltaRat> {
        self.upper.get(term)
    }

    pub fn lower(&self, term: &LinTerm) -> Option<&DeltaRat> {
        self.lower.get(term)
    }

    /// All parameters mentioned anywhere in the store.
    pub fn params(&self) -> BTreeSet<&str> {
        self.upper
            .keys()
            .chain(self.lower.keys())
            .chain(self.excluded.keys())
            .flat_map(|t| t.params())
            .collect()
    }

    /// Every atom the store denotes, in canonical order.
    pub fn atoms(&self) -> Vec<NormAtom> {
        let mut out = Vec::new();
        for (term, bound) in &self.upper {
            out.push(NormAtom {
                term: term.clone(),
                op: BoundOp::Le,
                bound: bound.clone(),
            });
        }
        for (term, bound) in &self.lower {
            out.push(NormAtom {
                term: term.clone(),
                op: BoundOp::Ge,
                bound: bound.clone(),
            });
        }
        for (term, values) in &self.excluded {
            for value in values {
                out.push(NormAtom {
                    term: term.clone(),
                    op: BoundOp::Ne,
                    bound: DeltaRat::exact(value.clone()),
                });
            }
        }
        out
    }

    /// Folds one atom in, keeping only the tighter bound. Returns whether
    /// anything changed.
    pub fn tighten_mut(&mut self, atom: &NormAtom) -> bool {
        match atom.op {
            BoundOp::Le => match self.upper.get(&atom.term) {
                Some(existing) if *existing <= atom.bound => false,
                _ => {
                    self.upper.insert(atom.term.clone(), atom.bound.clone());
                    true
                }
            },
            BoundOp::Ge => match self.lower.get(&atom.term) {
                Some(existing) if *existing >= atom.bound => false,
                _ => {
                    self.lower.insert(atom.term.clone(), atom.bound.clone());
                    true
                }
            },
            BoundOp::Ne => {
                debug_assert!(atom.bound.eps.is_zero());
                self.excluded
                    .entry(atom.term.clone())
                    .or_default()
                    .insert(atom.bound.std.clone())
            }
        }
    }

    /// Persistent tighten: the original store is unchanged.
    pub fn tighten(&self, atom: &NormAtom) -> (BoundStore, bool) {
        let mut next = self.clone();
        let changed = next.tighten_mut(atom);
        (next, changed)
    }

    /// Canonical digest: equal stores produce equal digests, independent of
    /// insertion order.
    pub fn digest(&self) -> String {
        let mut out = String::from("B");
        for (term, bound) in &self.upper {
            write!(out, "|U:{term}<={bound}").unwrap();
        }
        for (term, bound) in &self.lower {
            write!(out, "|L:{term}>={bound}").unwrap();
        }
        for (term, values) in &self.excluded {
            write!(out, "|N:{term}!=").unwrap();
            for v in values {
                write!(out, "{v},").unwrap();
            }
        }
        out
    }

    /// Exact satisfaction check of every stored atom under a concrete
    /// assignment and epsilon value.
    pub fn satisfied_by(&self, assignment: &Assignment, eps0: &Rat) -> bool {
        self.atoms()
            .iter()
            .all(|a| a.satisfied_by(assignment, eps0) == Some(true))
    }
}

/// Convenience: fold a batch of atoms into a fresh copy of `store`.
pub fn tighten_all(store: &BoundStore, atoms: &[NormAtom]) -> BoundStore {
    let mut next = store.clone();
    for atom in atoms {
        next.tighten_mut(atom);
    }
    next
}
