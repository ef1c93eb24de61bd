//! End-to-end checks of the binary: exit codes, JSON output, generator
//! determinism, and CSV streaming.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_parapath"))
}

fn social_fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/testdata/social.pg")
}

fn tempdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("parapath-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

const RF: &str = "FROM alice MATCH ([Person, ?p <= age && ?q >= age && ?q - ?p <= 7]/[follow, since > 2019])*/[Person, ?p <= age && ?q >= age && ?q - ?p <= 7]";

#[test]
fn query_true_exits_zero_with_json() {
    let out = run(bin()
        .arg("query")
        .arg(social_fixture())
        .arg("--query")
        .arg(RF));
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["answer"], serde_json::json!(true));
    assert!(json["model"].is_object());
    assert!(json["stats"]["oracle_calls"].is_u64());
}

#[test]
fn query_false_exits_one() {
    let q = "FROM alice MATCH [Person, ?q - ?p <= -1 && ?p <= age && ?q >= age]";
    let out = run(bin()
        .arg("query")
        .arg(social_fixture())
        .arg("--query")
        .arg(q));
    assert_eq!(out.status.code(), Some(1));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["answer"], serde_json::json!(false));
}

#[test]
fn timeout_exits_two() {
    let dir = tempdir("timeout");
    let graph = dir.join("dense.pg");
    let status = bin()
        .args([
            "gen-graph",
            "--nodes",
            "400",
            "--degree",
            "6",
            "--node-labels",
            "1",
        ])
        .args(["--edge-labels", "1", "--num-attr", "x:0:50", "--seed", "3"])
        .arg("-o")
        .arg(&graph)
        .status()
        .unwrap();
    assert!(status.success());
    let q = "FROM n0 MATCH [L0, ?p <= x && ?q >= x]/([r0]/[L0, ?p <= x && ?q >= x])*/[r0]/[Nope]";
    let out = run(bin()
        .arg("query")
        .arg(&graph)
        .args(["--query", q, "--timeout", "1"]));
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["answer"], serde_json::json!("timeout"));
    assert_eq!(json["stats"]["timed_out"], serde_json::json!(true));
}

#[test]
fn errors_exit_above_two() {
    let out = run(bin()
        .arg("query")
        .arg("/no/such/file.pg")
        .args(["--query", "FROM a MATCH [x]"]));
    assert_eq!(out.status.code(), Some(3));
    let out = run(bin()
        .arg("query")
        .arg(social_fixture())
        .args(["--query", "FROM MATCH"]));
    assert_eq!(out.status.code(), Some(3));
    let out = run(bin().arg("nonsense"));
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn algorithms_agree_via_cli() {
    for algo in ["naive", "optimized", "bruteforce"] {
        let out = run(bin()
            .arg("query")
            .arg(social_fixture())
            .args(["--query", RF, "--algo", algo]));
        assert_eq!(out.status.code(), Some(0), "{algo}");
    }
}

#[test]
fn gen_graph_is_deterministic_and_loadable() {
    let dir = tempdir("gen");
    let (a, b) = (dir.join("a.pg"), dir.join("b.pg"));
    for path in [&a, &b] {
        let status = bin()
            .args([
                "gen-graph",
                "--nodes",
                "50",
                "--degree",
                "2.5",
                "--seed",
                "9",
            ])
            .arg("-o")
            .arg(path)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let ta = std::fs::read_to_string(&a).unwrap();
    assert_eq!(ta, std::fs::read_to_string(&b).unwrap());
    // Degree zero means an edge-free file.
    let c = dir.join("c.pg");
    bin()
        .args(["gen-graph", "--nodes", "10", "--degree", "0", "--seed", "1"])
        .arg("-o")
        .arg(&c)
        .status()
        .unwrap();
    let text = std::fs::read_to_string(&c).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("E ")).count(), 0);
    assert_eq!(text.lines().filter(|l| l.starts_with("N ")).count(), 10);
}

#[test]
fn gen_3sat_round_trips_through_query() {
    let dir = tempdir("sat");
    let cnf = dir.join("f.cnf");
    std::fs::write(&cnf, "p cnf 2 2\n1 2 0\n-1 0\n").unwrap();
    let prefix = dir.join("inst");
    let status = bin()
        .args(["gen-3sat", "--cnf"])
        .arg(&cnf)
        .arg("--out-prefix")
        .arg(&prefix)
        .status()
        .unwrap();
    assert!(status.success());
    let graph = prefix.with_extension("pg");
    let query = prefix.with_extension("query");
    let out = run(bin()
        .arg("query")
        .arg(&graph)
        .arg("--query-file")
        .arg(&query));
    assert_eq!(
        out.status.code(),
        Some(0),
        "satisfiable formula answers true"
    );
    // An unsatisfiable formula exits 1.
    std::fs::write(&cnf, "p cnf 1 2\n1 0\n-1 0\n").unwrap();
    bin()
        .args(["gen-3sat", "--cnf"])
        .arg(&cnf)
        .arg("--out-prefix")
        .arg(&prefix)
        .status()
        .unwrap();
    let out = run(bin()
        .arg("query")
        .arg(&graph)
        .arg("--query-file")
        .arg(&query));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bench_streams_csv_with_summary() {
    let dir = tempdir("bench");
    let graph = dir.join("g.pg");
    bin()
        .args(["gen-graph", "--nodes", "60", "--degree", "2", "--seed", "4"])
        .arg("-o")
        .arg(&graph)
        .status()
        .unwrap();
    let suite = dir.join("suite.json");
    std::fs::write(
        &suite,
        format!(
            r#"{{
  "datasets": [{{"name": "demo", "graph_file": {:?}}}],
  "templates": ["Q2:D2", "Q5:D1", "Q10:D3"],
  "instances": 2,
  "algorithms": ["naive", "optimized"],
  "timeout_ms": 3000,
  "seed": 5
}}"#,
            graph.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = run(bin().arg("bench").arg(&suite).args(["--jobs", "2"]));
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("dataset,qtemplate,dtemplate,category,algo,answer"));
    let data_rows = lines.iter().filter(|l| l.starts_with("demo,")).count();
    assert_eq!(data_rows, 12, "3 templates x 2 instances x 2 algorithms");
    assert!(lines
        .iter()
        .any(|l| l.starts_with("#summary,pearson_time_vs_oracle_calls,")));
    assert!(text.contains(",occasional,"));
    assert!(text.contains(",rare,"));
}
