//! Benchmark harness for the path query engine: seeded synthetic graphs,
//! query templates over twelve regular shapes and five data constraints,
//! a CNF-satisfiability reduction for adversarial instances, and a CSV
//! runner.

pub mod gen;
pub mod runner;
pub mod template;
pub mod threesat;
