//! Command-line entry point. Exit codes: 0 success, 1 runtime failure,
//! 2 usage error, 3 algorithm not applicable to the graph.

pub mod exec;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value as Json;

use crate::engine::{Engine, Mode, RunConfig, WORKERS_ENV};
use crate::error::{Error, Result};
use crate::generators;
use crate::graph_store::{ingest_edge_list_file, IngestOptions, VertexId};
use crate::io_engine::{IoConfig, IoStatsSnapshot, CACHE_BYTES_ENV, DEFAULT_CACHE_BYTES};
pub use exec::{execute, Algo, Outcome, Params, Variant};

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "semgraph", version, about = "Semi-external-memory graph analytics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert a whitespace-separated edge list into graph files.
    Ingest {
        edgelist: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        directed: bool,
    },
    /// Run one algorithm and print a JSON run report.
    Run(RunArgs),
    /// Compare two numeric result files line by line.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        tol: f64,
    },
    /// Run every variant of an algorithm and print a CSV row for each.
    Bench(BenchArgs),
    /// Write a seeded synthetic edge list.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
struct EngineArgs {
    #[arg(long, env = CACHE_BYTES_ENV, default_value_t = DEFAULT_CACHE_BYTES)]
    cache_bytes: usize,
    #[arg(long, env = WORKERS_ENV, default_value_t = 1)]
    workers: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Sync)]
    mode: ModeArg,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum ModeArg {
    Sync,
    Async,
}

#[derive(Debug, Args)]
struct ParamArgs {
    /// PageRank damping factor.
    #[arg(long)]
    damping: Option<f64>,
    /// PageRank convergence threshold as a fraction of the uniform rank.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Diameter search rounds.
    #[arg(long)]
    num_bfs: Option<usize>,
    /// Sources per multi-source round (at most 64).
    #[arg(long)]
    batch: Option<usize>,
    /// Betweenness sources as comma-separated vertex ids; all vertices if omitted.
    #[arg(long, value_delimiter = ',')]
    sources: Option<Vec<VertexId>>,
    #[arg(long)]
    hybrid_fraction: Option<f64>,
    #[arg(long)]
    hash_threshold: Option<usize>,
    #[arg(long)]
    min_gain: Option<f64>,
    #[arg(long)]
    max_levels: Option<usize>,
}

#[derive(Debug, Args)]
struct RunArgs {
    graph: PathBuf,
    #[arg(long, value_enum)]
    algo: Algo,
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    stats_out: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Debug, Args)]
struct BenchArgs {
    graph: PathBuf,
    #[arg(long)]
    suite: String,
    /// CSV destination; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum Model {
    Er,
    Ba,
    ScaleFree,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(value_enum)]
    model: Model,
    #[arg(long)]
    n: u64,
    /// Edge probability (er).
    #[arg(long, default_value_t = 0.05)]
    p: f64,
    /// Edges per new vertex (ba, scale-free).
    #[arg(long, default_value_t = 4)]
    k: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    directed: bool,
    #[arg(short, long)]
    out: PathBuf,
}

/// Measurement record printed by `run`.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub algorithm: &'static str,
    pub variant: &'static str,
    pub config: Json,
    pub wall_time_ms: f64,
    pub stats: IoStatsSnapshot,
    pub supersteps: usize,
    pub digest: Json,
    pub result_path: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            if e.is_domain() {
                EXIT_DOMAIN
            } else {
                EXIT_FAILURE
            }
        }
    }
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::Run(Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn dispatch(cmd: Command) -> std::result::Result<i32, Failure> {
    match cmd {
        Command::Ingest { edgelist, out, directed } => {
            let g = ingest_edge_list_file(&edgelist, &out, IngestOptions { directed })?;
            println!(
                "{}",
                serde_json::json!({
                    "graph": out,
                    "vertices": g.num_vertices(),
                    "edges": g.num_edges(),
                    "directed": g.is_directed(),
                })
            );
            Ok(0)
        }
        Command::Run(args) => run_command(args),
        Command::Compare { a, b, tol } => compare(&a, &b, tol),
        Command::Bench(args) => bench(args),
        Command::Generate(args) => {
            let edges = match args.model {
                Model::Er => generators::erdos_renyi(args.n, args.p, args.directed, args.seed),
                Model::Ba => generators::barabasi_albert(args.n, args.k, args.seed),
                Model::ScaleFree => generators::directed_scale_free(args.n, args.k, 0.1, args.seed),
            };
            let file = fs::File::create(&args.out).map_err(io_err(&args.out))?;
            generators::write_edge_list(&edges, std::io::BufWriter::new(file)).map_err(io_err(&args.out))?;
            Ok(0)
        }
    }
}

impl EngineArgs {
    fn open(&self, graph: &Path) -> Result<Engine> {
        Engine::open(graph, IoConfig::default().with_cache_bytes(self.cache_bytes))
    }

    fn run_config(&self) -> std::result::Result<RunConfig, Failure> {
        if self.workers == 0 {
            return Err(Failure::Usage("--workers must be at least 1".into()));
        }
        let mode = match self.mode {
            ModeArg::Sync => Mode::Sync,
            ModeArg::Async => Mode::Async,
        };
        Ok(RunConfig::default().with_workers(self.workers).with_mode(mode))
    }

    fn params(&self) -> Params {
        let a = &self.params;
        let mut p = Params::default();
        if let Some(d) = a.damping {
            p.pagerank.damping = d;
        }
        if let Some(t) = a.threshold {
            p.pagerank.delta_threshold = t;
        }
        if let Some(i) = a.max_iterations {
            p.pagerank.max_iterations = i;
        }
        if let Some(k) = a.num_bfs {
            p.num_bfs = k;
        }
        if let Some(b) = a.batch {
            p.batch = b;
        }
        p.sources.clone_from(&a.sources);
        if let Some(f) = a.hybrid_fraction {
            p.hybrid_fraction = f;
        }
        if let Some(t) = a.hash_threshold {
            p.hash_degree_threshold = t;
        }
        if let Some(g) = a.min_gain {
            p.louvain.min_modularity_gain = g;
        }
        if let Some(l) = a.max_levels {
            p.louvain.max_levels = l;
        }
        p
    }

    fn echo(&self, params: &Params, run: &RunConfig) -> Json {
        serde_json::json!({
            "cache_bytes": self.cache_bytes,
            "workers": run.workers,
            "mode": run.mode,
            "params": params,
        })
    }
}

/// Renders result lines exactly as `run --out` writes them.
pub fn render_lines(lines: &[String]) -> String {
    let mut s = String::with_capacity(lines.iter().map(|l| l.len() + 1).sum());
    for l in lines {
        s.push_str(l);
        s.push('\n');
    }
    s
}

fn run_command(args: RunArgs) -> std::result::Result<i32, Failure> {
    let variant_name = args.variant.as_deref().unwrap_or(args.algo.default_variant());
    let variant = Variant::parse(args.algo, variant_name).map_err(Failure::Usage)?;
    let run = args.engine.run_config()?;
    let params = args.engine.params();
    let engine = args.engine.open(&args.graph)?;

    engine.io().reset_stats();
    let start = Instant::now();
    let outcome = execute(&engine, variant, &params, &run)?;
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    let stats = engine.io().snapshot();

    if let Some(path) = &args.out {
        fs::write(path, render_lines(&outcome.lines)).map_err(io_err(path))?;
    }
    if let Some(path) = &args.stats_out {
        let json = serde_json::to_string_pretty(&stats).expect("stats serialize");
        fs::write(path, json).map_err(io_err(path))?;
    }
    let report = RunReport {
        algorithm: args.algo.name(),
        variant: variant.name(),
        config: args.engine.echo(&params, &run),
        wall_time_ms,
        stats,
        supersteps: outcome.summary.supersteps,
        digest: outcome.digest,
        result_path: args.out.clone(),
    };
    println!("{}", serde_json::to_string_pretty(&report).expect("report serialize"));
    Ok(0)
}

/// Exit 0 when both files have the same number of lines and every pair of
/// lines is equal or numerically within `tol` field by field; 1 otherwise.
fn compare(a: &Path, b: &Path, tol: f64) -> std::result::Result<i32, Failure> {
    let ta = fs::read_to_string(a).map_err(io_err(a))?;
    let tb = fs::read_to_string(b).map_err(io_err(b))?;
    let (la, lb): (Vec<&str>, Vec<&str>) = (ta.lines().collect(), tb.lines().collect());
    if la.len() != lb.len() {
        println!("line counts differ: {} vs {}", la.len(), lb.len());
        return Ok(EXIT_FAILURE);
    }
    let mut worst = 0.0f64;
    let mut mismatches = 0usize;
    for (i, (x, y)) in la.iter().zip(&lb).enumerate() {
        match line_diff(x, y) {
            Some(d) if d <= tol => worst = worst.max(d),
            Some(d) => {
                worst = worst.max(d);
                mismatches += 1;
                if mismatches <= 5 {
                    println!("line {}: {x} vs {y} (diff {d:e})", i + 1);
                }
            }
            None => {
                mismatches += 1;
                if mismatches <= 5 {
                    println!("line {}: {x:?} vs {y:?}", i + 1);
                }
            }
        }
    }
    println!("lines {} max_abs_diff {worst:e} mismatches {mismatches}", la.len());
    Ok(if mismatches == 0 { 0 } else { EXIT_FAILURE })
}

/// Largest absolute difference between numeric fields; `None` if the lines
/// differ in shape or in a non-numeric field.
fn line_diff(x: &str, y: &str) -> Option<f64> {
    let (fx, fy): (Vec<&str>, Vec<&str>) = (x.split_whitespace().collect(), y.split_whitespace().collect());
    if fx.len() != fy.len() {
        return None;
    }
    let mut worst = 0.0f64;
    for (p, q) in fx.iter().zip(&fy) {
        if p == q {
            continue;
        }
        let (p, q) = (p.parse::<f64>().ok()?, q.parse::<f64>().ok()?);
        let d = (p - q).abs();
        if d.is_nan() {
            return None;
        }
        worst = worst.max(d);
    }
    Some(worst)
}

pub const BENCH_HEADER: &str = "variant,wall_time_ms,bytes_read,read_requests,cache_hit_ratio,detail,digest";

fn bench(args: BenchArgs) -> std::result::Result<i32, Failure> {
    let (algo, variants) = exec::suite_variants(&args.suite).map_err(Failure::Usage)?;
    let run = args.engine.run_config()?;
    let params = args.engine.params();
    let mut csv = String::from(BENCH_HEADER);
    csv.push('\n');
    for name in variants {
        // A fresh engine per row so no variant inherits a warm cache.
        let engine = args.engine.open(&args.graph)?;
        engine.io().reset_stats();
        let start = Instant::now();
        let outcome = if args.suite == "bfs" {
            exec::bfs_suite_row(&engine, name, &params, &run)?
        } else {
            let variant = Variant::parse(algo, name).map_err(Failure::Usage)?;
            execute(&engine, variant, &params, &run)?
        };
        let ms = start.elapsed().as_secs_f64() * 1e3;
        let s = engine.io().snapshot();
        csv.push_str(&format!(
            "{name},{ms:.3},{},{},{:.6},{},{}\n",
            s.bytes_read_from_disk,
            s.read_requests_issued,
            s.cache_hit_ratio(),
            outcome.detail.map(|d| d.to_string()).unwrap_or_default(),
            csv_digest(algo, &outcome),
        ));
    }
    match &args.out {
        Some(path) => fs::write(path, csv).map_err(io_err(path))?,
        None => std::io::stdout()
            .write_all(csv.as_bytes())
            .map_err(|e| Failure::Run(Error::Io { path: "<stdout>".into(), source: e }))?,
    }
    Ok(0)
}

/// The part of a result that every variant of a suite must reproduce,
/// quoted for CSV.
fn csv_digest(algo: Algo, o: &Outcome) -> String {
    let d = &o.digest;
    let core = match algo {
        // Ranks differ by up to the convergence threshold between variants,
        // so only the leading order is compared.
        Algo::Pagerank => serde_json::json!({ "top10": d["top20"].as_array().map(|a| a[..a.len().min(10)].to_vec()) }),
        Algo::Betweenness => serde_json::json!({ "top20": d["top20"] }),
        Algo::Coreness => serde_json::json!({ "k_max": d["k_max"], "cores": fnv(&o.lines) }),
        Algo::Triangles => serde_json::json!({ "total": d["total"] }),
        _ => d.clone(),
    };
    format!("\"{}\"", core.to_string().replace('"', "\"\""))
}

/// FNV-1a over the result lines.
fn fnv(lines: &[String]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for l in lines {
        for b in l.bytes().chain(std::iter::once(b'\n')) {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    format!("{h:016x}")
}
