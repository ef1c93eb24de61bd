//! Command-line front end: evaluate queries over graph files, generate
//! synthetic graphs and CNF-reduction instances, and run benchmark suites.
//!
//! Exit codes for `query`: 0 when the answer is true, 1 when false, 2 on
//! timeout, 3 on any error.

use std::io::Write;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use parapath::eval::{
    evaluate_with_oracle, Algorithm, Answer, EvalOptions, PathSemantics, VisitedKey,
};
use parapath::model::load_graph;
use parapath::oracle::{BuiltinOracle, FeasibilityOracle, SmtOracle};
use parapath::query::parse_query;
use parapath_bench::gen::{gen_graph, GraphGenSpec, NumAttrSpec, StrAttrSpec};
use parapath_bench::runner::{run_bench, SuiteSpec};
use parapath_bench::threesat::{gen_3sat, parse_dimacs};

#[derive(Parser)]
#[command(
    name = "parapath",
    version,
    about = "Path queries with data constraints over property graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a query against a graph file and print the JSON result.
    Query(QueryArgs),
    /// Run a benchmark suite file and stream CSV to stdout.
    Bench(BenchArgs),
    /// Generate a synthetic graph file.
    GenGraph(GenGraphArgs),
    /// Turn a DIMACS CNF file into a graph/query instance pair.
    #[command(name = "gen-3sat")]
    Gen3sat(Gen3satArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Naive,
    Optimized,
    Bruteforce,
}

#[derive(Clone, Copy, ValueEnum)]
enum SemanticsArg {
    Walk,
    Simple,
}

#[derive(Clone, Copy, ValueEnum)]
enum VisitedArg {
    Paper,
    Store,
}

#[derive(Args)]
struct QueryArgs {
    /// Graph file in the PG text format.
    graph: String,
    /// Query text, e.g. 'FROM n0 MATCH [Person]/[follow]/[Person]'.
    #[arg(long, conflicts_with = "query_file")]
    query: Option<String>,
    /// File containing the query text.
    #[arg(long)]
    query_file: Option<String>,
    #[arg(long, value_enum, default_value = "optimized")]
    algo: AlgoArg,
    #[arg(long, value_enum, default_value = "walk")]
    semantics: SemanticsArg,
    #[arg(long, value_enum, default_value = "store")]
    visited: VisitedArg,
    /// Timeout in milliseconds.
    #[arg(long, default_value_t = 10_000)]
    timeout: u64,
    /// Walk-length cap for the brute-force algorithm.
    #[arg(long)]
    walk_cap: Option<usize>,
    /// Feasibility backend: `builtin` or `smtlib:<command line>`.
    #[arg(long, default_value = "builtin")]
    oracle: String,
}

#[derive(Args)]
struct BenchArgs {
    /// Suite description (JSON).
    suite: String,
    /// Worker threads for independent query instances.
    #[arg(long)]
    jobs: Option<usize>,
    /// Override the suite's base seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct GenGraphArgs {
    #[arg(long)]
    nodes: usize,
    /// Average out-degree as an exact decimal, e.g. 4.17.
    #[arg(long, default_value = "4")]
    degree: String,
    #[arg(long, default_value_t = 4)]
    node_labels: usize,
    #[arg(long, default_value_t = 4)]
    edge_labels: usize,
    /// Numeric attribute as name:lo:hi; repeatable.
    #[arg(long = "num-attr")]
    num_attrs: Vec<String>,
    /// String attribute as name:v1,v2,...; repeatable.
    #[arg(long = "str-attr")]
    str_attrs: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long, short)]
    out: Option<String>,
}

#[derive(Args)]
struct Gen3satArgs {
    /// DIMACS CNF input file.
    #[arg(long)]
    cnf: String,
    /// Writes <prefix>.pg and <prefix>.query.
    #[arg(long)]
    out_prefix: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are not failures.
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(3),
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Query(args) => cmd_query(args),
        Command::Bench(args) => cmd_bench(args),
        Command::GenGraph(args) => cmd_gen_graph(args),
        Command::Gen3sat(args) => cmd_gen_3sat(args),
    }
}

fn cmd_query(args: QueryArgs) -> Result<ExitCode> {
    let graph_text = std::fs::read_to_string(&args.graph)
        .with_context(|| format!("reading graph `{}`", args.graph))?;
    let graph = load_graph(&graph_text).context("loading graph")?;
    let query_text = match (&args.query, &args.query_file) {
        (Some(text), None) => text.clone(),
        (None, Some(path)) => {
            std::fs::read_to_string(path).with_context(|| format!("reading query `{path}`"))?
        }
        _ => bail!("provide exactly one of --query or --query-file"),
    };
    let query = parse_query(query_text.trim()).context("parsing query")?;
    let opts = EvalOptions {
        algorithm: match args.algo {
            AlgoArg::Naive => Algorithm::Naive,
            AlgoArg::Optimized => Algorithm::Optimized,
            AlgoArg::Bruteforce => Algorithm::BruteForce,
        },
        semantics: match args.semantics {
            SemanticsArg::Walk => PathSemantics::Walk,
            SemanticsArg::Simple => PathSemantics::Simple,
        },
        visited: match args.visited {
            VisitedArg::Paper => VisitedKey::Coarse,
            VisitedArg::Store => VisitedKey::StoreDigest,
        },
        timeout: Duration::from_millis(args.timeout),
        walk_cap: args.walk_cap,
    };

    let mut builtin = BuiltinOracle;
    let mut smt;
    let oracle: &mut dyn FeasibilityOracle = if args.oracle == "builtin" {
        &mut builtin
    } else if let Some(command) = args.oracle.strip_prefix("smtlib:") {
        smt = SmtOracle::launch(command)?;
        &mut smt
    } else {
        bail!(
            "unknown oracle `{}` (use builtin or smtlib:<cmd>)",
            args.oracle
        );
    };

    let result = evaluate_with_oracle(&graph, &query, &opts, oracle)?;
    println!("{}", serde_json::to_string_pretty(&result.to_json(&graph))?);
    Ok(match result.answer {
        Answer::Yes => ExitCode::SUCCESS,
        Answer::No => ExitCode::from(1),
        Answer::Timeout => ExitCode::from(2),
    })
}

fn cmd_bench(args: BenchArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&args.suite)
        .with_context(|| format!("reading suite `{}`", args.suite))?;
    let mut spec: SuiteSpec = serde_json::from_str(&text).context("parsing suite")?;
    if let Some(jobs) = args.jobs {
        spec.jobs = jobs.max(1);
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    run_bench(&spec, &mut out)?;
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn parse_num_attr(text: &str) -> Result<NumAttrSpec> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        bail!("numeric attribute must be name:lo:hi, got `{text}`");
    }
    Ok(NumAttrSpec {
        name: parts[0].to_string(),
        lo: parts[1]
            .parse()
            .map_err(|_| anyhow!("bad bound in `{text}`"))?,
        hi: parts[2]
            .parse()
            .map_err(|_| anyhow!("bad bound in `{text}`"))?,
    })
}

fn parse_str_attr(text: &str) -> Result<StrAttrSpec> {
    let (name, pool) = text
        .split_once(':')
        .ok_or_else(|| anyhow!("string attribute must be name:v1,v2"))?;
    Ok(StrAttrSpec {
        name: name.to_string(),
        pool: pool.split(',').map(str::to_string).collect(),
    })
}

fn cmd_gen_graph(args: GenGraphArgs) -> Result<ExitCode> {
    let num_attrs = if args.num_attrs.is_empty() {
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
    } else {
        args.num_attrs
            .iter()
            .map(|t| parse_num_attr(t))
            .collect::<Result<_>>()?
    };
    let spec = GraphGenSpec {
        nodes: args.nodes,
        avg_out_degree: args.degree.clone(),
        node_labels: args.node_labels,
        edge_labels: args.edge_labels,
        num_attrs,
        str_attrs: args
            .str_attrs
            .iter()
            .map(|t| parse_str_attr(t))
            .collect::<Result<_>>()?,
        seed: args.seed,
    };
    let graph = gen_graph(&spec)?;
    let text = graph.to_text();
    match &args.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing `{path}`"))?,
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_gen_3sat(args: Gen3satArgs) -> Result<ExitCode> {
    let text =
        std::fs::read_to_string(&args.cnf).with_context(|| format!("reading `{}`", args.cnf))?;
    let cnf = parse_dimacs(&text)?;
    let (graph, query) = gen_3sat(&cnf)?;
    let graph_path = format!("{}.pg", args.out_prefix);
    let query_path = format!("{}.query", args.out_prefix);
    std::fs::write(&graph_path, graph.to_text())
        .with_context(|| format!("writing `{graph_path}`"))?;
    std::fs::write(&query_path, format!("{query}\n"))
        .with_context(|| format!("writing `{query_path}`"))?;
    eprintln!("wrote {graph_path} and {query_path}");
    Ok(ExitCode::SUCCESS)
}
