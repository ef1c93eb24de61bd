//! Seeded synthetic graph generation. Same spec, same bytes: the generator
//! is a pure function of its inputs, built on a fixed-algorithm stream
//! cipher RNG so outputs are stable across platforms and releases.

use parapath::model::{AttrMap, PropertyGraph, Value};
use parapath::rat::{parse_rat, rat_int};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct NumAttrSpec {
    pub name: String,
    pub lo: i64,
    pub hi: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct StrAttrSpec {
    pub name: String,
    pub pool: Vec<String>,
}

/// Shape of a synthetic graph. `avg_out_degree` is an exact decimal or
/// fraction literal (for example `"4.17"`), so edge counts are reproducible
/// arithmetic, not floating point.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct GraphGenSpec {
    pub nodes: usize,
    pub avg_out_degree: String,
    #[serde(default = "default_labels")]
    pub node_labels: usize,
    #[serde(default = "default_labels")]
    pub edge_labels: usize,
    #[serde(default = "default_num_attrs")]
    pub num_attrs: Vec<NumAttrSpec>,
    #[serde(default)]
    pub str_attrs: Vec<StrAttrSpec>,
    pub seed: u64,
}

fn default_labels() -> usize {
    4
}

fn default_num_attrs() -> Vec<NumAttrSpec> {
    vec![
        NumAttrSpec {
            name: "x".into(),
            lo: 0,
            hi: 100,
        },
        NumAttrSpec {
            name: "y".into(),
            lo: 0,
            hi: 100,
        },
    ]
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("node count must be at least 1")]
    NoNodes,
    #[error("label alphabet sizes must be at least 1")]
    NoLabels,
    #[error("bad degree literal `{0}`")]
    BadDegree(String),
    #[error("attribute `{name}` has an empty range or pool")]
    BadAttr { name: String },
}

impl GraphGenSpec {
    pub fn validate(&self) -> Result<(), GenError> {
        if self.nodes == 0 {
            return Err(GenError::NoNodes);
        }
        if self.node_labels == 0 || self.edge_labels == 0 {
            return Err(GenError::NoLabels);
        }
        let degree = parse_rat(&self.avg_out_degree)
            .ok_or_else(|| GenError::BadDegree(self.avg_out_degree.clone()))?;
        if degree < rat_int(0) {
            return Err(GenError::BadDegree(self.avg_out_degree.clone()));
        }
        for a in &self.num_attrs {
            if a.lo > a.hi {
                return Err(GenError::BadAttr {
                    name: a.name.clone(),
                });
            }
        }
        for a in &self.str_attrs {
            if a.pool.is_empty() {
                return Err(GenError::BadAttr {
                    name: a.name.clone(),
                });
            }
        }
        Ok(())
    }

    /// Target edge count: nodes x degree, rounded to nearest.
    pub fn edge_target(&self) -> usize {
        use num_bigint::BigInt;
        use num_traits::ToPrimitive;
        let degree = parse_rat(&self.avg_out_degree).expect("validated");
        let total = degree * rat_int(self.nodes as i64);
        let rounded: BigInt = (total.numer() * 2 + total.denom()) / (total.denom() * 2);
        rounded.to_usize().unwrap_or(0)
    }
}

pub fn gen_graph(spec: &GraphGenSpec) -> Result<PropertyGraph, GenError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut g = PropertyGraph::default();
    for i in 0..spec.nodes {
        let label = format!("L{}", rng.gen_range(0..spec.node_labels));
        let mut attrs = AttrMap::new();
        for a in &spec.num_attrs {
            attrs.insert(
                a.name.clone(),
                Value::Num(rat_int(rng.gen_range(a.lo..=a.hi))),
            );
        }
        for a in &spec.str_attrs {
            let pick = a.pool[rng.gen_range(0..a.pool.len())].clone();
            attrs.insert(a.name.clone(), Value::Str(pick));
        }
        g.add_node(&format!("n{i}"), &label, attrs)
            .expect("fresh id");
    }
    let edges = spec.edge_target();
    for e in 0..edges {
        let src = rng.gen_range(0..spec.nodes);
        let dst = rng.gen_range(0..spec.nodes);
        let label = format!("r{}", rng.gen_range(0..spec.edge_labels));
        g.add_edge(
            &format!("e{e}"),
            &format!("n{src}"),
            &format!("n{dst}"),
            &label,
            AttrMap::new(),
        )
        .expect("endpoints exist");
    }
    Ok(g)
}
