//! Seeded synthetic graphs for tests and benchmarks.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph_store::{ingest_edge_list, GraphHandle, IngestOptions};

pub type Edge = (u64, u64);

/// G(n, p): each of the `n(n-1)/2` pairs is an edge with probability `p`
/// (each ordered pair, when `directed`).
pub fn erdos_renyi(n: u64, p: f64, directed: bool, seed: u64) -> Vec<Edge> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        let start = if directed { 0 } else { u + 1 };
        for v in start..n {
            if u != v && rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    edges
}

/// Preferential attachment: vertex `i ≥ k` links to `k` distinct earlier
/// vertices chosen proportionally to degree; the first `k + 1` vertices form
/// a clique. Directed output points from the newer to the older endpoint.
pub fn barabasi_albert(n: u64, k: u64, seed: u64) -> Vec<Edge> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = k.max(1);
    let mut edges = Vec::new();
    let mut endpoints: Vec<u64> = Vec::new();
    let core = (k + 1).min(n);
    for u in 0..core {
        for v in 0..u {
            edges.push((u, v));
            endpoints.extend([u, v]);
        }
    }
    let mut picked = HashSet::new();
    for u in core..n {
        picked.clear();
        while (picked.len() as u64) < k {
            let v = endpoints[rng.gen_range(0..endpoints.len())];
            picked.insert(v);
        }
        let mut targets: Vec<u64> = picked.iter().copied().collect();
        targets.sort_unstable();
        for v in targets {
            edges.push((u, v));
            endpoints.extend([u, v]);
        }
    }
    edges
}

/// Directed scale-free graph: preferential attachment with every edge
/// oriented from the newer vertex, plus a fraction of reversed edges so the
/// graph has cycles and long-lived rank flow.
pub fn directed_scale_free(n: u64, k: u64, reverse_fraction: f64, seed: u64) -> Vec<Edge> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    barabasi_albert(n, k, seed)
        .into_iter()
        .map(|(u, v)| if rng.gen_bool(reverse_fraction) { (v, u) } else { (u, v) })
        .collect()
}

pub fn write_edge_list(edges: &[Edge], mut w: impl Write) -> std::io::Result<()> {
    for (u, v) in edges {
        writeln!(w, "{u} {v}")?;
    }
    Ok(())
}

/// Ingests `edges` as if read from a text edge list.
pub fn ingest_edges(edges: &[Edge], base: impl AsRef<Path>, directed: bool) -> Result<GraphHandle> {
    let mut text = Vec::with_capacity(edges.len() * 14);
    write_edge_list(edges, &mut text).map_err(|e| Error::io(base.as_ref(), e))?;
    ingest_edge_list(text.as_slice(), base, IngestOptions { directed })
}
