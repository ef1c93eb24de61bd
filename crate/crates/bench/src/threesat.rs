//! Reduction from CNF satisfiability to path queries: clause i becomes node
//! i of a chain, and each clause contributes an alternation of node atoms
//! whose constraints force the global parameter of one literal (`?x != 0`
//! for a positive literal, `?x = 0` for a negative one). The chain replaces
//! a single self-loop vertex so the produced instance also works under
//! simple-path semantics.

use std::fmt::Write as _;

use parapath::model::{AttrMap, PropertyGraph, Value};
use parapath::rat::rat_int;
use thiserror::Error;

/// Clauses over variables 1..=n; positive literal k, negative literal -k.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cnf {
    pub clauses: Vec<Vec<i32>>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CnfError {
    #[error("formula needs at least one clause")]
    NoClauses,
    #[error("clause {0} is empty")]
    EmptyClause(usize),
    #[error("clause {index} has {size} literals; at most 3 are supported")]
    ClauseTooWide { index: usize, size: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Cnf {
    pub fn validate(&self) -> Result<(), CnfError> {
        if self.clauses.is_empty() {
            return Err(CnfError::NoClauses);
        }
        for (i, clause) in self.clauses.iter().enumerate() {
            if clause.is_empty() {
                return Err(CnfError::EmptyClause(i));
            }
            if clause.len() > 3 {
                return Err(CnfError::ClauseTooWide {
                    index: i,
                    size: clause.len(),
                });
            }
            if clause.contains(&0) {
                return Err(CnfError::Parse {
                    line: 0,
                    msg: "literal 0 inside clause".into(),
                });
            }
        }
        Ok(())
    }

    pub fn var_count(&self) -> usize {
        self.clauses
            .iter()
            .flat_map(|c| c.iter())
            .map(|l| l.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Exhaustive satisfiability for small formulas; the reference the
    /// reduction is checked against.
    pub fn brute_sat(&self) -> bool {
        let n = self.var_count();
        assert!(n <= 20, "brute force limited to 20 variables");
        (0u32..(1 << n)).any(|mask| {
            self.clauses.iter().all(|clause| {
                clause.iter().any(|&lit| {
                    let bit = mask >> (lit.unsigned_abs() - 1) & 1;
                    if lit > 0 {
                        bit == 1
                    } else {
                        bit == 0
                    }
                })
            })
        })
    }
}

/// DIMACS CNF: `c` comments, a `p cnf <vars> <clauses>` header, then
/// zero-terminated clauses.
pub fn parse_dimacs(text: &str) -> Result<Cnf, CnfError> {
    let mut clauses = Vec::new();
    let mut current: Vec<i32> = Vec::new();
    let mut seen_header = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') {
            continue;
        }
        if trimmed == "%" {
            // Some distributed benchmark files end with `%` then a stray 0.
            break;
        }
        if trimmed.starts_with('p') {
            if seen_header {
                return Err(CnfError::Parse {
                    line,
                    msg: "duplicate header".into(),
                });
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            if fields.len() != 4 || fields[1] != "cnf" {
                return Err(CnfError::Parse {
                    line,
                    msg: "expected `p cnf <vars> <clauses>`".into(),
                });
            }
            seen_header = true;
            continue;
        }
        for token in trimmed.split_whitespace() {
            let lit: i32 = token.parse().map_err(|_| CnfError::Parse {
                line,
                msg: format!("bad literal `{token}`"),
            })?;
            if lit == 0 {
                clauses.push(std::mem::take(&mut current));
            } else {
                current.push(lit);
            }
        }
    }
    if !current.is_empty() {
        clauses.push(current);
    }
    let cnf = Cnf { clauses };
    cnf.validate()?;
    Ok(cnf)
}

/// Produces the chain graph and query text for a formula. The query is
/// satisfied over the graph exactly when the formula is satisfiable.
pub fn gen_3sat(cnf: &Cnf) -> Result<(PropertyGraph, String), CnfError> {
    cnf.validate()?;
    let m = cnf.clauses.len();
    let mut g = PropertyGraph::default();
    for i in 0..m {
        let attrs = AttrMap::from([("a".to_string(), Value::Num(rat_int(1)))]);
        g.add_node(&format!("c{i}"), "v", attrs).expect("fresh");
    }
    for i in 0..m.saturating_sub(1) {
        g.add_edge(
            &format!("g{i}"),
            &format!("c{i}"),
            &format!("c{}", i + 1),
            "e",
            AttrMap::new(),
        )
        .expect("endpoints");
    }

    let lit_atom = |lit: i32| {
        let var = lit.unsigned_abs();
        if lit > 0 {
            format!("[v, ?x{var} != 0]")
        } else {
            format!("[v, ?x{var} = 0]")
        }
    };
    let mut pattern = String::new();
    for (i, clause) in cnf.clauses.iter().enumerate() {
        if i == 0 {
            let alts: Vec<String> = clause.iter().map(|&l| lit_atom(l)).collect();
            write!(pattern, "({})", alts.join("|")).unwrap();
        } else {
            let alts: Vec<String> = clause
                .iter()
                .map(|&l| format!("[e]/{}", lit_atom(l)))
                .collect();
            write!(pattern, "/({})", alts.join("|")).unwrap();
        }
    }
    Ok((g, format!("FROM c0 MATCH {pattern}")))
}
