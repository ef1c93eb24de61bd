//! Engine for regular path queries with data constraints over property
//! graphs.
//!
//! The pipeline: load a graph ([`model`]), parse a query ([`query`]),
//! compile it to a constraint automaton ([`automaton`]), then search the
//! product of graph and automaton ([`eval`]) while deciding constraint
//! feasibility with an exact linear-arithmetic oracle ([`oracle`]).

pub mod automaton;
pub mod constraints;
pub mod eval;
pub mod model;
pub mod oracle;
pub mod query;
pub mod rat;
