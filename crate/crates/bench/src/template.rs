//! Query templates: twelve regular path shapes crossed with five data
//! constraints. A template instance fills label placeholders with the
//! graph's most frequent edge labels, weaves the data constraint into every
//! node atom, draws thresholds from the attribute's interquartile span, and
//! picks a start node, all from one seed.

use std::collections::BTreeMap;
use std::fmt;

use parapath::model::{PropertyGraph, Value};
use parapath::rat::{render_rat, Rat};
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const K: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub enum QTemplate {
    Q1,
    Q2,
    Q3,
    Q4,
    Q5,
    Q6,
    Q7,
    Q8,
    Q9,
    Q10,
    Q11,
    Q12,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub enum DTemplate {
    D1,
    D2,
    D3,
    D4,
    D5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub struct TemplateId {
    pub q: QTemplate,
    pub d: DTemplate,
}

/// How often the regular shape occurs in real query logs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Frequent,
    Occasional,
    Rare,
}

impl QTemplate {
    pub const ALL: [QTemplate; 12] = [
        QTemplate::Q1,
        QTemplate::Q2,
        QTemplate::Q3,
        QTemplate::Q4,
        QTemplate::Q5,
        QTemplate::Q6,
        QTemplate::Q7,
        QTemplate::Q8,
        QTemplate::Q9,
        QTemplate::Q10,
        QTemplate::Q11,
        QTemplate::Q12,
    ];

    pub fn category(self) -> Category {
        use QTemplate::*;
        match self {
            Q1 | Q2 | Q3 | Q4 => Category::Frequent,
            Q5 | Q6 | Q7 => Category::Occasional,
            _ => Category::Rare,
        }
    }

    /// Distinct edge-label placeholders the shape needs.
    pub fn labels_needed(self) -> usize {
        use QTemplate::*;
        match self {
            Q2 | Q6 => 1,
            Q4 | Q11 => 2,
            Q1 | Q3 | Q5 | Q7 | Q9 | Q10 | Q12 => K,
            Q8 => K + 1,
        }
    }
}

impl DTemplate {
    pub const ALL: [DTemplate; 5] = [
        DTemplate::D1,
        DTemplate::D2,
        DTemplate::D3,
        DTemplate::D4,
        DTemplate::D5,
    ];

    /// D4 and D5 relate two attributes; the rest use one.
    pub fn attrs_needed(self) -> usize {
        match self {
            DTemplate::D4 | DTemplate::D5 => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for QTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl fmt::Display for DTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("template needs {needed} distinct edge labels, graph has {available}")]
    InsufficientLabels { needed: usize, available: usize },
    #[error("template needs {needed} numeric attributes, graph has {available}")]
    InsufficientAttributes { needed: usize, available: usize },
    #[error("graph has no nodes")]
    EmptyGraph,
}

/// Labels ranked by frequency (descending), ties by name.
fn ranked_edge_labels(g: &PropertyGraph) -> Vec<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, e) in g.edges() {
        *counts.entry(g.label_name(e.label)).or_default() += 1;
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    ranked.into_iter().map(|(l, _)| l.to_string()).collect()
}

fn most_frequent_node_label(g: &PropertyGraph) -> Option<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, n) in g.nodes() {
        *counts.entry(g.label_name(n.label)).or_default() += 1;
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(a.0)))
        .map(|(l, _)| l.to_string())
}

/// Numeric attribute names ranked by how many nodes carry them.
fn ranked_numeric_attrs(g: &PropertyGraph) -> Vec<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, n) in g.nodes() {
        for (k, v) in &n.attrs {
            if matches!(v, Value::Num(_)) {
                *counts.entry(k).or_default() += 1;
            }
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    ranked.into_iter().map(|(l, _)| l.to_string()).collect()
}

/// A value from the interquartile span of the attribute across all nodes.
fn iqr_draw(g: &PropertyGraph, attr: &str, rng: &mut ChaCha8Rng) -> Rat {
    let mut values: Vec<Rat> = g
        .nodes()
        .filter_map(|(_, n)| match n.attrs.get(attr) {
            Some(Value::Num(v)) => Some(v.clone()),
            _ => None,
        })
        .collect();
    if values.is_empty() {
        return Rat::from_integer(1.into());
    }
    values.sort();
    let lo = values.len() / 4;
    let hi = (values.len() * 3 / 4).max(lo);
    let idx = rng.gen_range(lo..=hi.min(values.len() - 1));
    values[idx].clone()
}

struct DParts {
    head: String,
    body: String,
}

fn d_parts(d: DTemplate, attrs: &[String], g: &PropertyGraph, rng: &mut ChaCha8Rng) -> DParts {
    let a1 = &attrs[0];
    match d {
        DTemplate::D1 => {
            let c = render_rat(&iqr_draw(g, a1, rng));
            let s = format!("?p - {a1} <= {c} && {a1} - ?p <= {c}");
            DParts {
                head: s.clone(),
                body: s,
            }
        }
        DTemplate::D2 => {
            let s = format!("?p <= {a1} && ?q >= {a1}");
            DParts {
                head: s.clone(),
                body: s,
            }
        }
        DTemplate::D3 => {
            let c = render_rat(&iqr_draw(g, a1, rng));
            let s = format!("?p <= {a1} && ?q >= {a1} && ?q - ?p <= {c}");
            DParts {
                head: s.clone(),
                body: s,
            }
        }
        DTemplate::D4 => {
            let a2 = &attrs[1];
            let c1 = render_rat(&iqr_draw(g, a1, rng));
            let c2 = render_rat(&iqr_draw(g, a2, rng));
            DParts {
                head: format!("?p = {a1} && ?q = {a2}"),
                body: format!("0.5*?p + {c1} <= {a1} && ?q - {a2} <= {c2} && {a2} - ?q <= {c2}"),
            }
        }
        DTemplate::D5 => {
            let a2 = &attrs[1];
            let c = render_rat(&iqr_draw(g, a1, rng));
            DParts {
                head: format!("?p = {a1} && ?q = {a2}"),
                body: format!(
                    "?p - {a1} + ?q - {a2} <= {c} && {a1} - ?q + ?p - {a2} <= {c} \
                     && {a1} - ?q + {a2} - ?p <= {c} && ?q - {a1} + {a2} - ?p <= {c}"
                ),
            }
        }
    }
}

/// Builds the full query text for one template instance.
pub fn instantiate_template(
    t: TemplateId,
    g: &PropertyGraph,
    seed: u64,
) -> Result<String, TemplateError> {
    if g.node_count() == 0 {
        return Err(TemplateError::EmptyGraph);
    }
    let labels = ranked_edge_labels(g);
    let needed = t.q.labels_needed();
    if labels.len() < needed {
        return Err(TemplateError::InsufficientLabels {
            needed,
            available: labels.len(),
        });
    }
    let attrs = ranked_numeric_attrs(g);
    if attrs.len() < t.d.attrs_needed() {
        return Err(TemplateError::InsufficientAttributes {
            needed: t.d.attrs_needed(),
            available: attrs.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let node_label = most_frequent_node_label(g).ok_or(TemplateError::EmptyGraph)?;
    let parts = d_parts(t.d, &attrs, g, &mut rng);
    let start_pick = rng.gen_range(0..g.node_count());
    let start = g
        .nodes()
        .nth(start_pick)
        .map(|(_, n)| n.id.clone())
        .expect("index in range");

    // Node atoms: the head constraint opens the query, the body constraint
    // guards every subsequent node; edge atoms stay unconstrained.
    let head = format!("[{node_label}, {}]", parts.head);
    let nb = format!("[{node_label}, {}]", parts.body);
    let step = |label: &str| format!("[{label}]/{nb}");
    let l = &labels;
    use QTemplate::*;
    let tail = match t.q {
        Q1 => format!("({}|{}|{})*", step(&l[0]), step(&l[1]), step(&l[2])),
        Q2 => format!("({})*", step(&l[0])),
        Q3 => format!("{}/{}/{}", step(&l[0]), step(&l[1]), step(&l[2])),
        Q4 => format!("({})*/{}", step(&l[0]), step(&l[1])),
        Q5 => format!("({}|{}|{})", step(&l[0]), step(&l[1]), step(&l[2])),
        Q6 => format!("({})+", step(&l[0])),
        Q7 => format!("({})?/({})?/({})?", step(&l[0]), step(&l[1]), step(&l[2])),
        Q8 => format!(
            "{}/({}|{}|{})",
            step(&l[0]),
            step(&l[1]),
            step(&l[2]),
            step(&l[3])
        ),
        Q9 => format!("{}/({})?/({})?", step(&l[0]), step(&l[1]), step(&l[2])),
        Q10 => format!("(({}/({})*)|({}))", step(&l[0]), step(&l[1]), step(&l[2])),
        Q11 => format!("({})*/({})?", step(&l[0]), step(&l[1])),
        Q12 => format!("{}/{}/({})*", step(&l[0]), step(&l[1]), step(&l[2])),
    };
    Ok(format!("FROM {start} MATCH {head}/{tail}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{gen_graph, GraphGenSpec, NumAttrSpec};
    use parapath::query::parse_query;

    fn graph() -> PropertyGraph {
        gen_graph(&GraphGenSpec {
            nodes: 120,
            avg_out_degree: "3".into(),
            node_labels: 2,
            edge_labels: 5,
            num_attrs: vec![
                NumAttrSpec {
                    name: "x".into(),
                    lo: 0,
                    hi: 50,
                },
                NumAttrSpec {
                    name: "y".into(),
                    lo: 0,
                    hi: 50,
                },
            ],
            str_attrs: vec![],
            seed: 11,
        })
        .unwrap()
    }

    #[test]
    fn every_template_parses() {
        let g = graph();
        for q in QTemplate::ALL {
            for d in DTemplate::ALL {
                let text = instantiate_template(TemplateId { q, d }, &g, 5)
                    .unwrap_or_else(|e| panic!("{q} {d}: {e}"));
                parse_query(&text).unwrap_or_else(|e| panic!("{q} {d}: {e}\n{text}"));
            }
        }
    }

    #[test]
    fn instantiation_is_deterministic() {
        let g = graph();
        let t = TemplateId {
            q: QTemplate::Q3,
            d: DTemplate::D3,
        };
        assert_eq!(
            instantiate_template(t, &g, 9).unwrap(),
            instantiate_template(t, &g, 9).unwrap()
        );
        assert_ne!(
            instantiate_template(t, &g, 9).unwrap(),
            instantiate_template(t, &g, 10).unwrap()
        );
    }

    #[test]
    fn q2_d2_has_the_expected_shape() {
        let g = graph();
        let text = instantiate_template(
            TemplateId {
                q: QTemplate::Q2,
                d: DTemplate::D2,
            },
            &g,
            3,
        )
        .unwrap();
        // head node atom, then a starred (edge/node) group.
        assert!(text.contains("?p <= "), "{text}");
        assert!(text.contains("?q >= "), "{text}");
        assert!(text.contains(")*"), "{text}");
        let q = parse_query(&text).unwrap();
        // Star of concat(edge-atom, node-atom) after the head.
        let parapath::query::Pregex::Concat(_, rest) = &q.pattern else {
            panic!("{text}")
        };
        assert!(matches!(**rest, parapath::query::Pregex::Star(_)), "{text}");
    }

    #[test]
    fn q3_d1_weaves_constraint_at_every_node_atom() {
        let g = graph();
        let text = instantiate_template(
            TemplateId {
                q: QTemplate::Q3,
                d: DTemplate::D1,
            },
            &g,
            3,
        )
        .unwrap();
        // Four node atoms (head + three steps), each carrying the D1 pair.
        assert_eq!(
            text.matches("?p - x <= ").count() + text.matches("?p - y <= ").count(),
            4,
            "{text}"
        );
    }

    #[test]
    fn d4_and_d5_pin_parameters_at_the_head() {
        let g = graph();
        for d in [DTemplate::D4, DTemplate::D5] {
            let text = instantiate_template(
                TemplateId {
                    q: QTemplate::Q2,
                    d,
                },
                &g,
                3,
            )
            .unwrap();
            assert!(text.contains("?p = "), "{text}");
            assert!(text.contains("?q = "), "{text}");
        }
    }

    #[test]
    fn too_few_labels_is_an_error() {
        let g = gen_graph(&GraphGenSpec {
            nodes: 30,
            avg_out_degree: "2".into(),
            node_labels: 1,
            edge_labels: 2,
            num_attrs: vec![NumAttrSpec {
                name: "x".into(),
                lo: 0,
                hi: 9,
            }],
            str_attrs: vec![],
            seed: 4,
        })
        .unwrap();
        let err = instantiate_template(
            TemplateId {
                q: QTemplate::Q8,
                d: DTemplate::D2,
            },
            &g,
            1,
        )
        .unwrap_err();
        assert!(matches!(
            err,
            TemplateError::InsufficientLabels { needed: 4, .. }
        ));
        let err = instantiate_template(
            TemplateId {
                q: QTemplate::Q2,
                d: DTemplate::D4,
            },
            &g,
            1,
        )
        .unwrap_err();
        assert!(matches!(
            err,
            TemplateError::InsufficientAttributes { needed: 2, .. }
        ));
    }
}
