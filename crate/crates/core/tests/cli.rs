//! The `semgraph` binary end to end: files, exit codes, reports and parity
//! with direct library calls.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use semgraph::algorithms::*;
use semgraph::cli::{render_lines, BENCH_HEADER};
use semgraph::io_engine::IoStatsSnapshot;
use semgraph::{Engine, IoConfig, RunConfig};
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_semgraph"));
    c.env_remove("SEMGRAPH_CACHE_BYTES").env_remove("SEMGRAPH_WORKERS");
    c
}

fn run_ok(c: &mut Command) -> Output {
    let out = c.output().unwrap();
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

struct Dir(tempfile::TempDir);

impl Dir {
    fn new() -> Dir {
        Dir(tempfile::tempdir().unwrap())
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.path().join(name)
    }

    /// Writes `text` as an edge list and ingests it; returns the graph path.
    fn graph(&self, name: &str, text: &str, directed: bool) -> PathBuf {
        let list = self.path(&format!("{name}.txt"));
        std::fs::write(&list, text).unwrap();
        self.ingest(&list, name, directed);
        self.path(name)
    }

    fn ingest(&self, list: &Path, name: &str, directed: bool) -> Value {
        let mut c = bin();
        c.arg("ingest").arg(list).arg("-o").arg(self.path(name));
        if directed {
            c.arg("--directed");
        }
        json(&run_ok(&mut c))
    }

    fn generated(&self, name: &str, args: &[&str], directed: bool) -> PathBuf {
        let list = self.path(&format!("{name}.txt"));
        run_ok(bin().arg("generate").args(args).arg("-o").arg(&list));
        self.ingest(&list, name, directed);
        self.path(name)
    }
}

fn lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path).unwrap().lines().map(str::to_owned).collect()
}

const K3: &str = "0 1\n1 2\n2 0\n";
const K4: &str = "0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n";

#[test]
fn ingest_writes_graph_files_and_counts() {
    let d = Dir::new();
    let list = d.path("k3.txt");
    std::fs::write(&list, K3).unwrap();
    let report = d.ingest(&list, "k3", false);
    assert_eq!(report["vertices"], 3);
    assert_eq!(report["edges"], 3);
    assert_eq!(report["directed"], false);
    for ext in ["gyh", "gyi", "adj", "ids"] {
        assert!(d.path(&format!("k3.{ext}")).exists(), "{ext} missing");
    }

    let empty = d.path("empty.txt");
    std::fs::write(&empty, "").unwrap();
    let report = d.ingest(&empty, "empty", false);
    assert_eq!((report["vertices"].as_u64(), report["edges"].as_u64()), (Some(0), Some(0)));
    let e = Engine::open(d.path("empty"), IoConfig::default()).unwrap();
    assert_eq!(e.graph().num_vertices(), 0);
}

#[test]
fn ingest_counts_match_a_recount_of_a_million_edge_file() {
    let d = Dir::new();
    let list = d.path("ba.txt");
    run_ok(bin().args(["generate", "ba", "--n", "200000", "--k", "5", "--seed", "3", "-o"]).arg(&list));
    let text = std::fs::read_to_string(&list).unwrap();
    let mut ids = HashSet::new();
    let mut pairs = HashSet::new();
    let mut lines = 0;
    for l in text.lines() {
        let mut f = l.split_whitespace().map(|x| x.parse::<u64>().unwrap());
        let (a, b) = (f.next().unwrap(), f.next().unwrap());
        lines += 1;
        ids.insert(a);
        ids.insert(b);
        if a != b {
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    assert!(lines >= 999_000, "{lines} lines");
    let report = d.ingest(&list, "ba", false);
    assert_eq!(report["vertices"].as_u64().unwrap(), ids.len() as u64);
    assert_eq!(report["edges"].as_u64().unwrap(), pairs.len() as u64);
}

#[test]
fn run_writes_one_value_per_vertex() {
    let d = Dir::new();
    let k3 = d.graph("k3", K3, false);
    let out = d.path("tri.txt");
    let report = json(&run_ok(bin().arg("run").arg(&k3).args(["--algo", "triangles", "--out"]).arg(&out)));
    assert_eq!(report["digest"]["total"], 1);
    assert_eq!(lines(&out), ["1", "1", "1"]);

    let k4 = d.graph("k4", K4, false);
    let out = d.path("core.txt");
    run_ok(bin().arg("run").arg(&k4).args(["--algo", "coreness", "--out"]).arg(&out));
    assert_eq!(lines(&out), ["3", "3", "3", "3"]);
}

#[test]
fn exit_codes_distinguish_usage_domain_and_runtime_errors() {
    let d = Dir::new();
    let k4 = d.graph("k4", K4, false);
    let code = |args: &[&str]| bin().arg("run").arg(&k4).args(args).output().unwrap().status.code();
    assert_eq!(code(&["--algo", "nosuch"]), Some(2));
    assert_eq!(code(&["--algo", "coreness", "--variant", "nosuch"]), Some(2));
    assert_eq!(code(&["--algo", "coreness", "--workers", "0"]), Some(2));
    let domain = bin().arg("run").arg(&k4).args(["--algo", "pagerank"]).output().unwrap();
    assert_eq!(domain.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&domain.stderr).contains("directed"));
    let missing = bin().args(["run", "/nonexistent/graph", "--algo", "coreness"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(1));
    assert_eq!(bin().arg("bogus").output().unwrap().status.code(), Some(2));
}

#[test]
fn stats_out_holds_every_counter_of_the_run() {
    let d = Dir::new();
    let g = d.generated("er", &["er", "--n", "100", "--p", "0.05", "--seed", "1"], true);
    let stats = d.path("stats.json");
    let report = json(&run_ok(
        bin().arg("run").arg(&g).args(["--algo", "pagerank", "--stats-out"]).arg(&stats),
    ));
    let parsed: Value = serde_json::from_str(&std::fs::read_to_string(&stats).unwrap()).unwrap();
    for field in IoStatsSnapshot::FIELDS {
        assert!(parsed[field].is_u64(), "{field} missing from stats-out");
        assert_eq!(parsed[field], report["stats"][field], "{field}");
    }
    assert!(parsed["bytes_read_from_disk"].as_u64().unwrap() > 0);
    for key in ["algorithm", "variant", "config", "wall_time_ms", "digest"] {
        assert!(!report[key].is_null(), "{key} missing from report");
    }
    assert_eq!(report["algorithm"], "pagerank");
    assert_eq!(report["variant"], "push");
}

#[test]
fn push_and_pull_agree_within_ten_thresholds() {
    let d = Dir::new();
    let g = d.generated("er", &["er", "--n", "100", "--p", "0.05", "--seed", "2", "--directed"], true);
    let (push, pull) = (d.path("push.txt"), d.path("pull.txt"));
    for (variant, out) in [("push", &push), ("pull", &pull)] {
        run_ok(bin().arg("run").arg(&g).args(["--algo", "pagerank", "--variant", variant, "--out"]).arg(out));
    }
    let n = lines(&push).len();
    assert_eq!(n, 100);
    let tol = 10.0 * PageRankConfig::default().absolute_threshold(n as u64);
    let cmp = |tol: f64| {
        bin().arg("compare").arg(&push).arg(&pull).args(["--tol", &tol.to_string()]).output().unwrap().status.code()
    };
    assert_eq!(cmp(tol), Some(0));
    assert_eq!(cmp(0.0), Some(1));
}

#[test]
fn bench_rows_share_one_digest_per_suite() {
    let d = Dir::new();
    let und = d.generated("ba", &["ba", "--n", "300", "--k", "3", "--seed", "4"], false);
    let dir = d.generated("sf", &["scale-free", "--n", "300", "--k", "3", "--seed", "4"], true);
    for (suite, graph, rows) in [
        ("pagerank", &dir, 2),
        ("bfs", &und, 2),
        ("bc", &und, 3),
        ("coreness", &und, 4),
        ("triangles", &und, 4),
    ] {
        let mut c = bin();
        c.arg("bench").arg(graph).args(["--suite", suite, "--cache-bytes", "16384"]);
        if suite == "bc" {
            c.args(["--sources", "0,1,2,3,4,5,6,7"]);
        }
        let out = run_ok(&mut c);
        let text = String::from_utf8(out.stdout).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(BENCH_HEADER));
        let digests: Vec<&str> = lines.map(|l| l.split_once(",\"").expect("quoted digest").1).collect();
        assert_eq!(digests.len(), rows, "{suite}");
        assert!(digests.iter().all(|x| *x == digests[0]), "{suite}: {digests:?}");
    }
}

#[test]
fn results_are_byte_identical_to_library_calls() {
    let d = Dir::new();
    let und = d.generated("ba", &["ba", "--n", "200", "--k", "3", "--seed", "5"], false);
    let dir = d.generated("sf", &["scale-free", "--n", "200", "--k", "3", "--seed", "5"], true);
    let run = RunConfig::default();
    let cli = |graph: &Path, args: &[&str]| {
        let out = d.path("r.txt");
        run_ok(bin().arg("run").arg(graph).args(args).args(["--workers", "1", "--out"]).arg(&out));
        std::fs::read_to_string(&out).unwrap()
    };
    let text = |values: Vec<String>| render_lines(&values);

    let e = Engine::open(&dir, IoConfig::default()).unwrap();
    let ranks = pagerank(&e, &PageRankConfig::default(), PageRankVariant::Pull, &run).unwrap().ranks;
    assert_eq!(cli(&dir, &["--algo", "pagerank", "--variant", "pull"]), text(ranks.iter().map(f64::to_string).collect()));

    let e = Engine::open(&und, IoConfig::default()).unwrap();
    let cores = coreness(&e, &CorenessConfig::default(), &run).unwrap().cores;
    assert_eq!(cli(&und, &["--algo", "coreness"]), text(cores.iter().map(u32::to_string).collect()));
    let tri = triangle_count(&e, &TriangleConfig::default(), &run).unwrap().per_vertex;
    assert_eq!(cli(&und, &["--algo", "triangles"]), text(tri.iter().map(u64::to_string).collect()));
    let sources = [0, 5, 9];
    let bc = betweenness(&e, &sources, BcVariant::MultiAsync, &run).unwrap().centrality;
    assert_eq!(
        cli(&und, &["--algo", "betweenness", "--sources", "0,5,9"]),
        text(bc.iter().map(f64::to_string).collect())
    );
    let lv = louvain(&e, &LouvainConfig::default(), &run).unwrap();
    let mut want: Vec<String> = lv.q_per_level.iter().enumerate().map(|(i, q)| format!("level {i} {q}")).collect();
    want.extend(lv.communities.iter().map(u64::to_string));
    assert_eq!(cli(&und, &["--algo", "louvain"]), text(want));
}

#[test]
fn environment_supplies_cache_size_and_workers() {
    let d = Dir::new();
    let k4 = d.graph("k4", K4, false);
    let report = json(&run_ok(
        bin()
            .arg("run")
            .arg(&k4)
            .args(["--algo", "coreness"])
            .env("SEMGRAPH_CACHE_BYTES", "8192")
            .env("SEMGRAPH_WORKERS", "3"),
    ));
    assert_eq!(report["config"]["cache_bytes"], 8192);
    assert_eq!(report["config"]["workers"], 3);
    let flags = json(&run_ok(
        bin()
            .arg("run")
            .arg(&k4)
            .args(["--algo", "coreness", "--cache-bytes", "4096", "--workers", "2"])
            .env("SEMGRAPH_CACHE_BYTES", "8192"),
    ));
    assert_eq!(flags["config"]["cache_bytes"], 4096);
    assert_eq!(flags["config"]["workers"], 2);
}
