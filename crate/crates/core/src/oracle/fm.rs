//! Fourier-Motzkin elimination, used as an independent feasibility oracle
//! in tests and by the brute-force evaluator. Deliberately shares nothing
//! with the simplex besides the atom types.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::constraints::{BoundOp, DeltaRat, NormAtom};
use crate::rat::Rat;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FmError {
    #[error("system too large for elimination: {0}")]
    TooLarge(String),
}

const MAX_PARAMS: usize = 6;
const MAX_DISEQ: usize = 8;

/// One inequality `sum of coeffs <= rhs`.
type Ineq = (BTreeMap<String, Rat>, DeltaRat);

/// Decides satisfiability of a conjunction of normalized atoms by variable
/// elimination. Disequalities are case-split into strict less/greater
/// alternatives, so the cost is exponential in their number; the guards keep
/// this a test-sized tool.
pub fn fm_feasible(atoms: &[NormAtom]) -> Result<bool, FmError> {
    let mut params = std::collections::BTreeSet::new();
    for atom in atoms {
        params.extend(atom.term.params().map(str::to_string));
    }
    if params.len() > MAX_PARAMS {
        return Err(FmError::TooLarge(format!("{} parameters", params.len())));
    }
    let mut base: Vec<Ineq> = Vec::new();
    let mut diseqs: Vec<(BTreeMap<String, Rat>, Rat)> = Vec::new();
    for atom in atoms {
        let coeffs: BTreeMap<String, Rat> = atom
            .term
            .coeffs()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect();
        match atom.op {
            BoundOp::Le => base.push((coeffs, atom.bound.clone())),
            BoundOp::Ge => base.push((negate(&coeffs), atom.bound.scale(&-Rat::one()))),
            BoundOp::Ne => diseqs.push((coeffs, atom.bound.std.clone())),
        }
    }
    if diseqs.len() > MAX_DISEQ {
        return Err(FmError::TooLarge(format!("{} disequalities", diseqs.len())));
    }
    // Every subset choice of (less | greater) per disequality.
    for mask in 0..(1u32 << diseqs.len()) {
        let mut system = base.clone();
        for (i, (coeffs, value)) in diseqs.iter().enumerate() {
            if mask & (1 << i) == 0 {
                // term < value
                system.push((coeffs.clone(), DeltaRat::new(value.clone(), -1)));
            } else {
                // term > value
                system.push((negate(coeffs), DeltaRat::new(-value.clone(), -1)));
            }
        }
        if eliminate(system) {
            return Ok(true);
        }
    }
    Ok(false)
}

fn negate(coeffs: &BTreeMap<String, Rat>) -> BTreeMap<String, Rat> {
    coeffs
        .iter()
        .map(|(k, v)| (k.clone(), -v.clone()))
        .collect()
}

fn eliminate(mut system: Vec<Ineq>) -> bool {
    loop {
        let Some(var) = system.iter().flat_map(|(c, _)| c.keys()).min().cloned() else {
            return system.iter().all(|(_, rhs)| *rhs >= DeltaRat::zero());
        };
        let mut uppers: Vec<Ineq> = Vec::new();
        let mut lowers: Vec<Ineq> = Vec::new();
        let mut rest: Vec<Ineq> = Vec::new();
        for (mut coeffs, rhs) in system {
            match coeffs.remove(&var) {
                None => rest.push((coeffs, rhs)),
                Some(a) if a.is_positive() => {
                    uppers.push((scaled(coeffs, &a), rhs.scale(&(Rat::one() / &a))))
                }
                Some(a) => lowers.push((scaled(coeffs, &a), rhs.scale(&(Rat::one() / &a)))),
            }
        }
        // uppers: var <= ur - uc·x ; lowers: var >= lr - lc·x. Each pair
        // combines to (uc - lc)·x <= ur - lr.
        for (uc, ur) in &uppers {
            for (lc, lr) in &lowers {
                let mut coeffs = uc.clone();
                for (k, v) in lc {
                    let e = coeffs.entry(k.clone()).or_insert_with(Rat::zero);
                    *e -= v;
                }
                coeffs.retain(|_, v| !v.is_zero());
                rest.push((coeffs, ur.clone() - lr));
            }
        }
        system = rest;
    }
}

fn scaled(coeffs: BTreeMap<String, Rat>, by: &Rat) -> BTreeMap<String, Rat> {
    coeffs.into_iter().map(|(k, v)| (k, v / by)).collect()
}
