//! Exact simplex over delta-rationals.
//!
//! The solver works on the bounded-variable form: one variable per query
//! parameter, plus one slack variable per composite term, tied together by
//! the defining equation `slack = sum of coefficients times parameters`.
//! Bounds are delta-rationals, so strict inequalities need no extra
//! dimension. Phase 1 repairs bound violations of basic variables until all
//! hold (feasible) or a violated row proves a conflict (infeasible). Phase 2
//! maximizes or minimizes a linear objective over the feasible region, which
//! is how excluded-value hyperplane containment is decided.
//!
//! Pivot selection follows Bland's rule (least variable index first), so the
//! solver never cycles.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use crate::constraints::{BoundStore, DeltaRat, LinTerm};
use crate::rat::Rat;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pos {
    Basic(usize),
    Nonbasic(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Optimum {
    Bounded(DeltaRat),
    Unbounded,
}

pub struct Tableau {
    /// Parameter names; variable ids `0..names.len()` are parameters,
    /// the rest are slacks for composite terms.
    names: Vec<String>,
    lo: Vec<Option<DeltaRat>>,
    hi: Vec<Option<DeltaRat>>,
    /// rows[r][c]: coefficient of nonbasic column c in the row of basic r.
    rows: Vec<Vec<Rat>>,
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
    pos: Vec<Pos>,
    beta: Vec<DeltaRat>,
    pub pivots: u64,
}

impl Tableau {
    /// Sets up variables, rows, and bounds from the store. Returns `None`
    /// when some variable's bounds already clash (lower above upper).
    pub fn build(store: &BoundStore) -> Option<Tableau> {
        let names: Vec<String> = store.params().into_iter().map(str::to_string).collect();
        let param_id: BTreeMap<&str, usize> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();

        // Composite terms that carry a bound get a slack variable.
        let mut term_vars: BTreeMap<LinTerm, usize> = BTreeMap::new();
        let mut term_rows: Vec<LinTerm> = Vec::new();
        for (term, _) in store.upper_bounds().chain(store.lower_bounds()) {
            if term.len() > 1 && !term_vars.contains_key(term) {
                term_vars.insert(term.clone(), names.len() + term_rows.len());
                term_rows.push(term.clone());
            }
        }

        let n_vars = names.len() + term_rows.len();
        let mut lo: Vec<Option<DeltaRat>> = vec![None; n_vars];
        let mut hi: Vec<Option<DeltaRat>> = vec![None; n_vars];
        let var_of = |term: &LinTerm| -> usize {
            if term.len() == 1 {
                let (name, coef) = term.coeffs().next().expect("nonempty");
                debug_assert!(coef.is_one(), "canonical terms lead with 1");
                param_id[name]
            } else {
                term_vars[term]
            }
        };
        for (term, bound) in store.upper_bounds() {
            hi[var_of(term)] = Some(bound.clone());
        }
        for (term, bound) in store.lower_bounds() {
            lo[var_of(term)] = Some(bound.clone());
        }
        for v in 0..n_vars {
            if let (Some(l), Some(h)) = (&lo[v], &hi[v]) {
                if l > h {
                    return None;
                }
            }
        }

        // Parameters start nonbasic, clamped into their own bounds.
        let mut beta = vec![DeltaRat::zero(); n_vars];
        for (p, value) in beta.iter_mut().enumerate().take(names.len()) {
            if let Some(l) = &lo[p] {
                if *value < *l {
                    *value = l.clone();
                }
            }
            if let Some(h) = &hi[p] {
                if *value > *h {
                    *value = h.clone();
                }
            }
        }
        let mut rows = Vec::with_capacity(term_rows.len());
        let mut basic = Vec::with_capacity(term_rows.len());
        for (r, term) in term_rows.iter().enumerate() {
            let mut coeffs = vec![Rat::zero(); names.len()];
            for (name, coef) in term.coeffs() {
                coeffs[param_id[name]] = coef.clone();
            }
            let mut value = DeltaRat::zero();
            for (c, coef) in coeffs.iter().enumerate() {
                if !coef.is_zero() {
                    value = value + &beta[c].scale(coef);
                }
            }
            beta[names.len() + r] = value;
            rows.push(coeffs);
            basic.push(names.len() + r);
        }
        let nonbasic: Vec<usize> = (0..names.len()).collect();
        let mut pos = vec![Pos::Nonbasic(0); n_vars];
        for (c, &v) in nonbasic.iter().enumerate() {
            pos[v] = Pos::Nonbasic(c);
        }
        for (r, &v) in basic.iter().enumerate() {
            pos[v] = Pos::Basic(r);
        }
        Some(Tableau {
            names,
            lo,
            hi,
            rows,
            basic,
            nonbasic,
            pos,
            beta,
            pivots: 0,
        })
    }

    pub fn size(&self) -> (usize, usize) {
        (self.rows.len(), self.nonbasic.len())
    }

    fn below_lo(&self, v: usize) -> bool {
        matches!(&self.lo[v], Some(l) if self.beta[v] < *l)
    }

    fn above_hi(&self, v: usize) -> bool {
        matches!(&self.hi[v], Some(h) if self.beta[v] > *h)
    }

    /// Phase 1: true iff the bound system is satisfiable. On success the
    /// current assignment satisfies every bound.
    pub fn check(&mut self) -> bool {
        loop {
            // Bland: violated basic variable with the least id.
            let Some(&vb) = self
                .basic
                .iter()
                .filter(|&&v| self.below_lo(v) || self.above_hi(v))
                .min()
            else {
                return true;
            };
            let Pos::Basic(r) = self.pos[vb] else {
                unreachable!()
            };
            let need_increase = self.below_lo(vb);
            let target = if need_increase {
                self.lo[vb].clone()
            } else {
                self.hi[vb].clone()
            }
            .expect("violated bound exists");

            // Entering nonbasic with the least id that can move vb the right way.
            let mut entering: Option<(usize, usize)> = None; // (var, col)
            for (c, &vn) in self.nonbasic.iter().enumerate() {
                let a = &self.rows[r][c];
                if a.is_zero() {
                    continue;
                }
                let can_use = if need_increase == a.is_positive() {
                    // vn must be able to increase.
                    match &self.hi[vn] {
                        Some(h) => self.beta[vn] < *h,
                        None => true,
                    }
                } else {
                    match &self.lo[vn] {
                        Some(l) => self.beta[vn] > *l,
                        None => true,
                    }
                };
                if can_use && entering.is_none_or(|(best, _)| vn < best) {
                    entering = Some((vn, c));
                }
            }
            let Some((_, c)) = entering else { return false };
            self.pivot_and_update(r, c, target);
        }
    }

    /// Pivot row r against column c, then set the (previously basic) row
    /// variable to `target`.
    fn pivot_and_update(&mut self, r: usize, c: usize, target: DeltaRat) {
        let vb = self.basic[r];
        let a_rc = self.rows[r][c].clone();
        let theta = (target.clone() - &self.beta[vb]).scale(&(Rat::one() / &a_rc));
        let vn = self.nonbasic[c];
        self.beta[vn] = self.beta[vn].clone() + &theta;
        self.beta[vb] = target;
        for (rr, row) in self.rows.iter().enumerate() {
            if rr != r && !row[c].is_zero() {
                let vr = self.basic[rr];
                self.beta[vr] = self.beta[vr].clone() + &theta.scale(&row[c]);
            }
        }
        self.pivot(r, c);
    }

    fn pivot(&mut self, r: usize, c: usize) {
        self.pivots += 1;
        let a_rc = self.rows[r][c].clone();
        let inv = Rat::one() / &a_rc;
        // Row r now defines the old column variable.
        let mut new_row: Vec<Rat> = self.rows[r].iter().map(|a| -(a * &inv)).collect();
        new_row[c] = inv;
        for (rr, row) in self.rows.iter_mut().enumerate() {
            if rr == r {
                continue;
            }
            let factor = std::mem::replace(&mut row[c], Rat::zero());
            if factor.is_zero() {
                continue;
            }
            for (k, val) in row.iter_mut().enumerate() {
                *val += &new_row[k] * &factor;
            }
        }
        self.rows[r] = new_row;
        let vb = self.basic[r];
        let vn = self.nonbasic[c];
        self.basic[r] = vn;
        self.nonbasic[c] = vb;
        self.pos[vn] = Pos::Basic(r);
        self.pos[vb] = Pos::Nonbasic(c);
    }

    /// Current value of a linear term over parameters.
    pub fn value_of(&self, term: &LinTerm) -> DeltaRat {
        let mut acc = DeltaRat::zero();
        for (name, coef) in term.coeffs() {
            let v = self
                .names
                .iter()
                .position(|n| n == name)
                .expect("known parameter");
            acc = acc + &self.beta[v].scale(coef);
        }
        acc
    }

    /// Parameter assignment as delta-rationals.
    pub fn assignment(&self) -> BTreeMap<String, DeltaRat> {
        self.names
            .iter()
            .cloned()
            .zip(self.beta.iter().cloned())
            .collect()
    }

    /// All (value, lower, upper) triples, for epsilon concretization.
    pub fn bound_triples(
        &self,
    ) -> impl Iterator<Item = (&DeltaRat, Option<&DeltaRat>, Option<&DeltaRat>)> {
        (0..self.beta.len()).map(move |v| (&self.beta[v], self.lo[v].as_ref(), self.hi[v].as_ref()))
    }

    /// Phase 2: optimize `term` over the feasible region. Requires a prior
    /// successful `check`; keeps the assignment feasible throughout.
    pub fn optimize(&mut self, term: &LinTerm, maximize: bool) -> Optimum {
        let mut direct = vec![Rat::zero(); self.beta.len()];
        for (name, coef) in term.coeffs() {
            let v = self
                .names
                .iter()
                .position(|n| n == name)
                .expect("known parameter");
            direct[v] = if maximize {
                coef.clone()
            } else {
                -coef.clone()
            };
        }
        loop {
            // Reduced costs of nonbasic columns.
            let mut entering: Option<(usize, usize, bool)> = None; // (var, col, increase)
            for (c, &vn) in self.nonbasic.iter().enumerate() {
                let mut reduced = direct[vn].clone();
                for (r, row) in self.rows.iter().enumerate() {
                    let vb = self.basic[r];
                    if !direct[vb].is_zero() && !row[c].is_zero() {
                        reduced += &direct[vb] * &row[c];
                    }
                }
                let (improves, increase) = if reduced.is_positive() {
                    (
                        self.hi[vn].is_none() || self.beta[vn] < *self.hi[vn].as_ref().unwrap(),
                        true,
                    )
                } else if reduced.is_negative() {
                    (
                        self.lo[vn].is_none() || self.beta[vn] > *self.lo[vn].as_ref().unwrap(),
                        false,
                    )
                } else {
                    (false, true)
                };
                if improves && entering.is_none_or(|(best, _, _)| vn < best) {
                    entering = Some((vn, c, increase));
                }
            }
            let Some((vn, c, increase)) = entering else {
                let mut value = DeltaRat::zero();
                for (name, coef) in term.coeffs() {
                    let v = self.names.iter().position(|n| n == name).unwrap();
                    value = value + &self.beta[v].scale(coef);
                }
                return Optimum::Bounded(value);
            };

            // Ratio test: largest step theta >= 0 keeping everything in bounds.
            let dir = if increase { Rat::one() } else { -Rat::one() };
            let mut limit: Option<(DeltaRat, usize)> = None; // (theta, blocking var)
            let own = if increase {
                self.hi[vn].as_ref()
            } else {
                self.lo[vn].as_ref()
            };
            if let Some(b) = own {
                let theta = (b.clone() - &self.beta[vn]).scale(&dir);
                limit = Some((theta, vn));
            }
            for (r, row) in self.rows.iter().enumerate() {
                let delta = &row[c] * &dir;
                if delta.is_zero() {
                    continue;
                }
                let vb = self.basic[r];
                let bound = if delta.is_positive() {
                    self.hi[vb].as_ref()
                } else {
                    self.lo[vb].as_ref()
                };
                if let Some(b) = bound {
                    let theta = (b.clone() - &self.beta[vb]).scale(&(Rat::one() / &delta));
                    let tighter = match &limit {
                        None => true,
                        Some((t, blocker)) => theta < *t || (theta == *t && vb < *blocker),
                    };
                    if tighter {
                        limit = Some((theta, vb));
                    }
                }
            }
            match limit {
                None => return Optimum::Unbounded,
                Some((theta, blocker)) => {
                    debug_assert!(theta >= DeltaRat::zero());
                    let step = theta.scale(&dir);
                    // Move the entering variable and every basic with it.
                    self.beta[vn] = self.beta[vn].clone() + &step;
                    for (r, row) in self.rows.iter().enumerate() {
                        if !row[c].is_zero() {
                            let vb = self.basic[r];
                            self.beta[vb] = self.beta[vb].clone() + &step.scale(&row[c]);
                        }
                    }
                    if blocker != vn {
                        let Pos::Basic(r) = self.pos[blocker] else {
                            unreachable!()
                        };
                        self.pivot(r, c);
                    } else {
                        // Slid to its own opposite bound; no basis change, but
                        // count the step against the anti-cycling budget.
                        self.pivots += 1;
                    }
                }
            }
        }
    }
}
