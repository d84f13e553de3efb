//! Fixture builder and brute-force in-memory oracles. Nothing here calls
//! into the library's algorithms; the oracles work from the raw edge list.

#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};
use std::path::PathBuf;

use semgraph::generators::{self, Edge};
use semgraph::{Engine, IoConfig};

/// An ingested graph plus its dense in-memory adjacency under the same id
/// remapping (order of first appearance).
pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub base: PathBuf,
    pub directed: bool,
    pub n: usize,
    /// Out-neighbors (all neighbors when undirected), sorted.
    pub out: Vec<Vec<usize>>,
    /// In-neighbors, sorted; equal to `out` when undirected.
    pub inn: Vec<Vec<usize>>,
    pub original: Vec<u64>,
}

impl Fixture {
    pub fn new(edges: &[Edge], directed: bool) -> Fixture {
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path().join("g");
        generators::ingest_edges(edges, &base, directed).unwrap();
        let mut ids: HashMap<u64, usize> = HashMap::new();
        let mut original = Vec::new();
        let mut arcs = Vec::new();
        for &(a, b) in edges {
            let mut id = |x: u64| {
                *ids.entry(x).or_insert_with(|| {
                    original.push(x);
                    original.len() - 1
                })
            };
            let (u, v) = (id(a), id(b));
            if u != v {
                arcs.push((u, v));
                if !directed {
                    arcs.push((v, u));
                }
            }
        }
        let n = original.len();
        let mut out = vec![Vec::new(); n];
        let mut inn = vec![Vec::new(); n];
        for (u, v) in arcs {
            out[u].push(v);
            inn[v].push(u);
        }
        for l in out.iter_mut().chain(inn.iter_mut()) {
            l.sort_unstable();
            l.dedup();
        }
        Fixture {
            dir,
            base,
            directed,
            n,
            out,
            inn,
            original,
        }
    }

    pub fn engine(&self) -> Engine {
        self.engine_with(IoConfig::default())
    }

    pub fn engine_with(&self, io: IoConfig) -> Engine {
        Engine::open(&self.base, io).unwrap()
    }

    pub fn num_edges(&self) -> usize {
        let arcs: usize = self.out.iter().map(Vec::len).sum();
        if self.directed {
            arcs
        } else {
            arcs / 2
        }
    }
}

pub fn er(n: u64, p: f64, directed: bool, seed: u64) -> Fixture {
    Fixture::new(&generators::erdos_renyi(n, p, directed, seed), directed)
}

pub fn ba(n: u64, k: u64, seed: u64) -> Fixture {
    Fixture::new(&generators::barabasi_albert(n, k, seed), false)
}

/// Complete graphs on consecutive id blocks of the given sizes.
pub fn disjoint_cliques(sizes: &[u64]) -> Vec<Edge> {
    let mut edges = Vec::new();
    let mut base = 0;
    for &s in sizes {
        for u in 0..s {
            for v in u + 1..s {
                edges.push((base + u, base + v));
            }
        }
        base += s;
    }
    edges
}

/// Damped PageRank with uniform teleport and dangling mass spread evenly,
/// by dense power iteration to a fixed point.
pub fn pagerank_power(out: &[Vec<usize>], damping: f64) -> Vec<f64> {
    let n = out.len();
    let nf = n as f64;
    let mut r = vec![1.0 / nf; n];
    for _ in 0..100_000 {
        let dangling: f64 = (0..n).filter(|&u| out[u].is_empty()).map(|u| r[u]).sum();
        let mut next = vec![(1.0 - damping) / nf + damping * dangling / nf; n];
        for u in 0..n {
            if !out[u].is_empty() {
                let share = damping * r[u] / out[u].len() as f64;
                for &v in &out[u] {
                    next[v] += share;
                }
            }
        }
        let delta: f64 = next.iter().zip(&r).map(|(a, b)| (a - b).abs()).sum();
        r = next;
        if delta < 1e-15 {
            break;
        }
    }
    r
}

pub const UNREACHED: u32 = u32::MAX;

pub fn bfs_dist(adj: &[Vec<usize>], s: usize) -> Vec<u32> {
    let mut d = vec![UNREACHED; adj.len()];
    let mut q = VecDeque::from([s]);
    d[s] = 0;
    while let Some(u) = q.pop_front() {
        for &v in &adj[u] {
            if d[v] == UNREACHED {
                d[v] = d[u] + 1;
                q.push_back(v);
            }
        }
    }
    d
}

pub fn eccentricity(adj: &[Vec<usize>], s: usize) -> u32 {
    bfs_dist(adj, s).into_iter().filter(|&d| d != UNREACHED).max().unwrap_or(0)
}

/// Largest finite shortest-path distance over all pairs.
pub fn exact_diameter(adj: &[Vec<usize>]) -> u32 {
    (0..adj.len()).map(|s| eccentricity(adj, s)).max().unwrap_or(0)
}

/// Unnormalized betweenness over ordered pairs `(s, t)` with `s` drawn from
/// `sources`: the textbook stack-based Brandes algorithm.
pub fn brandes(adj: &[Vec<usize>], sources: &[usize]) -> Vec<f64> {
    let n = adj.len();
    let mut bc = vec![0.0; n];
    for &s in sources {
        let mut stack = Vec::new();
        let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut sigma = vec![0.0f64; n];
        let mut dist = vec![-1i64; n];
        sigma[s] = 1.0;
        dist[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            stack.push(v);
            for &w in &adj[v] {
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    q.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    pred[w].push(v);
                }
            }
        }
        let mut delta = vec![0.0; n];
        while let Some(w) = stack.pop() {
            for &v in &pred[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                bc[w] += delta[w];
            }
        }
    }
    bc
}

/// Core numbers by repeatedly removing a vertex of minimum remaining degree.
pub fn peel(adj: &[Vec<usize>]) -> Vec<u32> {
    let n = adj.len();
    let mut deg: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut removed = vec![false; n];
    let mut core = vec![0u32; n];
    let mut k = 0;
    for _ in 0..n {
        let u = (0..n).filter(|&u| !removed[u]).min_by_key(|&u| deg[u]).unwrap();
        k = k.max(deg[u]);
        core[u] = k as u32;
        removed[u] = true;
        for &v in &adj[u] {
            if !removed[v] {
                deg[v] -= 1;
            }
        }
    }
    core
}

/// Triangle total and per-vertex counts by enumerating vertex triples.
pub fn triangles_brute(adj: &[Vec<usize>]) -> (u64, Vec<u64>) {
    let n = adj.len();
    let mut a = vec![vec![false; n]; n];
    for (u, l) in adj.iter().enumerate() {
        for &v in l {
            a[u][v] = true;
        }
    }
    let mut per = vec![0u64; n];
    let mut total = 0;
    for u in 0..n {
        for v in u + 1..n {
            if !a[u][v] {
                continue;
            }
            for w in v + 1..n {
                if a[u][w] && a[v][w] {
                    total += 1;
                    per[u] += 1;
                    per[v] += 1;
                    per[w] += 1;
                }
            }
        }
    }
    (total, per)
}

/// `Q = (1/2m) Σ_ij (A_ij - k_i k_j / 2m) [c_i = c_j]` over the dense
/// adjacency matrix.
pub fn modularity_dense(adj: &[Vec<usize>], labels: &[u64]) -> f64 {
    let n = adj.len();
    let m2: f64 = adj.iter().map(Vec::len).sum::<usize>() as f64;
    if m2 == 0.0 {
        return 0.0;
    }
    let mut a = vec![vec![0.0; n]; n];
    for (u, l) in adj.iter().enumerate() {
        for &v in l {
            a[u][v] = 1.0;
        }
    }
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                q += a[i][j] - (adj[i].len() * adj[j].len()) as f64 / m2;
            }
        }
    }
    q / m2
}

/// Second-chance page replacement over a sequence of requests, each a run
/// of pages pinned together until the request completes. Returns
/// `(accesses, hits)`.
pub fn clock_simulate(capacity: usize, requests: &[Vec<u64>]) -> (u64, u64) {
    struct Frame {
        page: u64,
        referenced: bool,
    }
    let mut frames: Vec<Frame> = Vec::new();
    let mut hand = 0;
    let (mut accesses, mut hits) = (0, 0);
    for req in requests {
        let mut pinned: Vec<u64> = Vec::new();
        for &p in req {
            accesses += 1;
            if let Some(f) = frames.iter_mut().find(|f| f.page == p) {
                f.referenced = true;
                hits += 1;
                pinned.push(p);
                continue;
            }
            if frames.len() < capacity {
                frames.push(Frame { page: p, referenced: true });
                pinned.push(p);
                continue;
            }
            for _ in 0..2 * capacity {
                let i = hand;
                hand = (hand + 1) % capacity;
                if pinned.contains(&frames[i].page) {
                    continue;
                }
                if frames[i].referenced {
                    frames[i].referenced = false;
                    continue;
                }
                frames[i] = Frame { page: p, referenced: true };
                pinned.push(p);
                break;
            }
        }
    }
    (accesses, hits)
}

pub fn assert_close(a: &[f64], b: &[f64], tol: f64, what: &str) {
    assert_eq!(a.len(), b.len(), "{what}: length");
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        assert!((x - y).abs() <= tol, "{what}: vertex {i}: {x} vs {y} (tol {tol})");
    }
}

pub fn assert_rel_close(a: &[f64], b: &[f64], rel: f64, what: &str) {
    assert_eq!(a.len(), b.len(), "{what}: length");
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        let scale = x.abs().max(y.abs()).max(1e-300);
        assert!((x - y).abs() <= rel * scale, "{what}: vertex {i}: {x} vs {y} (rel {rel})");
    }
}
