//! Benchmark runner: instantiates query templates over datasets, evaluates
//! each instance with the requested algorithms, and streams one CSV row per
//! (instance, algorithm). Wall-clock is measured around the evaluator call
//! only (pattern compilation included, graph loading not). A summary footer
//! reports the correlation between running time and oracle calls.

use std::collections::VecDeque;
use std::io::Write;
use std::sync::Mutex;

use parapath::eval::{
    evaluate, Algorithm, Answer, EvalOptions, PathSemantics, QueryResult, VisitedKey,
};
use parapath::model::{load_graph, PropertyGraph};
use parapath::query::parse_query;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gen::{gen_graph, GraphGenSpec};
use crate::template::{instantiate_template, Category, DTemplate, QTemplate, TemplateId};

pub const CSV_HEADER: &str =
    "dataset,qtemplate,dtemplate,category,algo,answer,time_ms,oracle_calls,states_expanded,timed_out,error";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    #[serde(default)]
    pub graph_file: Option<String>,
    #[serde(default)]
    pub generate: Option<GraphGenSpec>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum AlgoChoice {
    Naive,
    Optimized,
    BruteForce,
}

impl From<AlgoChoice> for Algorithm {
    fn from(a: AlgoChoice) -> Algorithm {
        match a {
            AlgoChoice::Naive => Algorithm::Naive,
            AlgoChoice::Optimized => Algorithm::Optimized,
            AlgoChoice::BruteForce => Algorithm::BruteForce,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteSpec {
    pub datasets: Vec<DatasetSpec>,
    /// Template pairs like `"Q1:D2"`; all 60 when omitted.
    #[serde(default)]
    pub templates: Vec<String>,
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    pub algorithms: Vec<AlgoChoice>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
}

fn default_instances() -> usize {
    100
}

fn default_repetitions() -> usize {
    1
}

fn default_timeout_ms() -> u64 {
    10_000
}

fn default_jobs() -> usize {
    1
}

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("dataset `{0}` must set exactly one of graph_file or generate")]
    AmbiguousDataset(String),
    #[error("reading `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("loading `{path}`: {source}")]
    Load {
        path: String,
        #[source]
        source: parapath::model::LoadError,
    },
    #[error("generating `{name}`: {source}")]
    Gen {
        name: String,
        #[source]
        source: crate::gen::GenError,
    },
    #[error("bad template id `{0}` (expected like `Q3:D2`)")]
    BadTemplate(String),
    #[error("suite has no algorithms")]
    NoAlgorithms,
    #[error(transparent)]
    Write(#[from] std::io::Error),
}

fn parse_template(text: &str) -> Result<TemplateId, SuiteError> {
    let (q, d) = text
        .split_once(':')
        .ok_or_else(|| SuiteError::BadTemplate(text.into()))?;
    let q = QTemplate::ALL
        .into_iter()
        .find(|t| format!("{t}") == q)
        .ok_or_else(|| SuiteError::BadTemplate(text.into()))?;
    let d = DTemplate::ALL
        .into_iter()
        .find(|t| format!("{t}") == d)
        .ok_or_else(|| SuiteError::BadTemplate(text.into()))?;
    Ok(TemplateId { q, d })
}

fn all_templates() -> Vec<TemplateId> {
    let mut out = Vec::new();
    for q in QTemplate::ALL {
        for d in DTemplate::ALL {
            out.push(TemplateId { q, d });
        }
    }
    out
}

/// One evaluation to perform.
struct Job {
    order: usize,
    dataset: usize,
    template: TemplateId,
    seed: u64,
    algorithm: AlgoChoice,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub dataset: String,
    pub template: TemplateId,
    pub algorithm: AlgoChoice,
    pub outcome: Result<RowStats, String>,
}

#[derive(Debug, Clone)]
pub struct RowStats {
    pub answer: Answer,
    pub time_ms: f64,
    pub oracle_calls: u64,
    pub states_expanded: u64,
    pub timed_out: bool,
}

fn category_name(c: Category) -> &'static str {
    match c {
        Category::Frequent => "frequent",
        Category::Occasional => "occasional",
        Category::Rare => "rare",
    }
}

fn csv_row(row: &Row) -> String {
    let base = format!(
        "{},{},{},{},{}",
        row.dataset,
        row.template.q,
        row.template.d,
        category_name(row.template.q.category()),
        match row.algorithm {
            AlgoChoice::Naive => "naive",
            AlgoChoice::Optimized => "optimized",
            AlgoChoice::BruteForce => "bruteforce",
        }
    );
    match &row.outcome {
        Ok(s) => format!(
            "{base},{},{:.3},{},{},{},",
            match s.answer {
                Answer::Yes => "true",
                Answer::No => "false",
                Answer::Timeout => "",
            },
            s.time_ms,
            s.oracle_calls,
            s.states_expanded,
            s.timed_out,
        ),
        Err(e) => format!("{base},,,,,,{}", e.replace(',', ";")),
    }
}

fn splitmix(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn run_one(graph: &PropertyGraph, job: &Job, timeout_ms: u64) -> Result<RowStats, String> {
    let text = instantiate_template(job.template, graph, job.seed).map_err(|e| e.to_string())?;
    let query = parse_query(&text).map_err(|e| e.to_string())?;
    let opts = EvalOptions {
        algorithm: job.algorithm.into(),
        semantics: PathSemantics::Walk,
        visited: VisitedKey::StoreDigest,
        timeout: std::time::Duration::from_millis(timeout_ms),
        walk_cap: None,
    };
    let result: QueryResult = evaluate(graph, &query, &opts).map_err(|e| e.to_string())?;
    Ok(RowStats {
        answer: result.answer,
        time_ms: result.stats.elapsed.as_secs_f64() * 1e3,
        oracle_calls: result.stats.oracle_calls,
        states_expanded: result.stats.states_expanded,
        timed_out: result.stats.timed_out,
    })
}

/// Runs the whole suite, streaming CSV to `out` in deterministic job order.
/// Returns the rows for further analysis.
pub fn run_bench(spec: &SuiteSpec, out: &mut dyn Write) -> Result<Vec<Row>, SuiteError> {
    if spec.algorithms.is_empty() {
        return Err(SuiteError::NoAlgorithms);
    }
    let templates = if spec.templates.is_empty() {
        all_templates()
    } else {
        spec.templates
            .iter()
            .map(|t| parse_template(t))
            .collect::<Result<Vec<_>, _>>()?
    };

    let mut graphs: Vec<(String, PropertyGraph)> = Vec::new();
    for ds in &spec.datasets {
        let graph = match (&ds.graph_file, &ds.generate) {
            (Some(path), None) => {
                let text = std::fs::read_to_string(path).map_err(|source| SuiteError::Io {
                    path: path.clone(),
                    source,
                })?;
                load_graph(&text).map_err(|source| SuiteError::Load {
                    path: path.clone(),
                    source,
                })?
            }
            (None, Some(gen_spec)) => gen_graph(gen_spec).map_err(|source| SuiteError::Gen {
                name: ds.name.clone(),
                source,
            })?,
            _ => return Err(SuiteError::AmbiguousDataset(ds.name.clone())),
        };
        graphs.push((ds.name.clone(), graph));
    }

    let mut jobs: VecDeque<Job> = VecDeque::new();
    let mut order = 0;
    for (dataset, _) in graphs.iter().enumerate() {
        for (tpos, template) in templates.iter().enumerate() {
            for instance in 0..spec.instances {
                for rep in 0..spec.repetitions {
                    // Independent, reproducible stream per job coordinate.
                    let mut seed = splitmix(spec.seed ^ 0xa076_1d64_78bd_642f);
                    for part in [dataset as u64, tpos as u64, instance as u64, rep as u64] {
                        seed = splitmix(seed ^ part);
                    }
                    for &algorithm in &spec.algorithms {
                        jobs.push_back(Job {
                            order,
                            dataset,
                            template: *template,
                            seed,
                            algorithm,
                        });
                        order += 1;
                    }
                }
            }
        }
    }
    let total = jobs.len();

    writeln!(out, "{CSV_HEADER}")?;
    let results: Vec<Option<Row>> = if spec.jobs <= 1 {
        let mut rows = Vec::with_capacity(total);
        for job in jobs {
            let (name, graph) = &graphs[job.dataset];
            let outcome = run_one(graph, &job, spec.timeout_ms);
            let row = Row {
                dataset: name.clone(),
                template: job.template,
                algorithm: job.algorithm,
                outcome,
            };
            writeln!(out, "{}", csv_row(&row))?;
            rows.push(Some(row));
        }
        rows
    } else {
        let queue = Mutex::new(jobs);
        let slots: Mutex<Vec<Option<Row>>> = Mutex::new(vec![None; total]);
        std::thread::scope(|scope| {
            for _ in 0..spec.jobs {
                scope.spawn(|| loop {
                    let job = { queue.lock().unwrap().pop_front() };
                    let Some(job) = job else { break };
                    let (name, graph) = &graphs[job.dataset];
                    let outcome = run_one(graph, &job, spec.timeout_ms);
                    let row = Row {
                        dataset: name.clone(),
                        template: job.template,
                        algorithm: job.algorithm,
                        outcome,
                    };
                    slots.lock().unwrap()[job.order] = Some(row);
                });
            }
        });
        let rows = slots.into_inner().unwrap();
        for row in rows.iter().flatten() {
            writeln!(out, "{}", csv_row(row))?;
        }
        rows
    };

    let rows: Vec<Row> = results.into_iter().flatten().collect();
    let finished: Vec<&Row> = rows
        .iter()
        .filter(|r| matches!(&r.outcome, Ok(s) if !s.timed_out))
        .collect();
    let correlation = pearson(
        finished.iter().map(|r| r.outcome.as_ref().unwrap().time_ms),
        finished
            .iter()
            .map(|r| r.outcome.as_ref().unwrap().oracle_calls as f64),
    );
    writeln!(out, "#summary,rows,{}", rows.len())?;
    writeln!(out, "#summary,completed,{}", finished.len())?;
    match correlation {
        Some(r) => writeln!(out, "#summary,pearson_time_vs_oracle_calls,{r:.4}")?,
        None => writeln!(out, "#summary,pearson_time_vs_oracle_calls,n/a")?,
    }
    Ok(rows)
}

/// Sample correlation coefficient; `None` when degenerate. Reporting only.
pub fn pearson(
    xs: impl Iterator<Item = f64> + Clone,
    ys: impl Iterator<Item = f64> + Clone,
) -> Option<f64> {
    let n = xs.clone().count();
    if n < 2 || n != ys.clone().count() {
        return None;
    }
    let nf = n as f64;
    let mx = xs.clone().sum::<f64>() / nf;
    let my = ys.clone().sum::<f64>() / nf;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some(cov / (vx * vy).sqrt())
}
