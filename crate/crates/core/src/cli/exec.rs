//! Algorithm dispatch shared by `run` and `bench`: one call produces the
//! result-file lines, a compact digest and the run summary.

use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Value as Json};

use crate::algorithms::{
    betweenness, coreness, estimate_diameter, louvain, multi_bfs, pagerank, triangle_count, BcVariant,
    CorenessConfig, DiameterVariant, LouvainConfig, PageRankConfig, PageRankVariant, RunSummary,
    TriangleConfig, TriangleLevel,
};
use crate::engine::{Engine, RunConfig};
use crate::error::Result;
use crate::graph_store::{Direction, GraphHandle, VertexId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Pagerank,
    Diameter,
    Betweenness,
    Coreness,
    Triangles,
    Louvain,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Pagerank => "pagerank",
            Algo::Diameter => "diameter",
            Algo::Betweenness => "betweenness",
            Algo::Coreness => "coreness",
            Algo::Triangles => "triangles",
            Algo::Louvain => "louvain",
        }
    }

    pub fn default_variant(self) -> &'static str {
        match self {
            Algo::Pagerank => "push",
            Algo::Diameter => "multi",
            Algo::Betweenness => "multi_async",
            Algo::Coreness => "optimized",
            Algo::Triangles => "revhash",
            Algo::Louvain => "default",
        }
    }
}

/// Tunables for every algorithm; each run reads the ones it needs.
#[derive(Debug, Clone, Serialize)]
pub struct Params {
    pub pagerank: PageRankConfig,
    pub num_bfs: usize,
    pub batch: usize,
    /// Betweenness sources; `None` means every vertex.
    pub sources: Option<Vec<VertexId>>,
    pub hybrid_fraction: f64,
    pub hash_degree_threshold: usize,
    pub louvain: LouvainConfig,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            pagerank: PageRankConfig::default(),
            num_bfs: 4,
            batch: 32,
            sources: None,
            hybrid_fraction: CorenessConfig::default().hybrid_fraction,
            hash_degree_threshold: TriangleConfig::default().hash_degree_threshold,
            louvain: LouvainConfig::default(),
        }
    }
}

/// A parsed `(algorithm, variant)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    PageRank(PageRankVariant),
    Diameter(DiameterVariant),
    Betweenness(BcVariant),
    Coreness(&'static str, CorenessConfig),
    Triangles(TriangleLevel),
    Louvain,
}

impl Variant {
    pub fn parse(algo: Algo, name: &str) -> std::result::Result<Variant, String> {
        Ok(match algo {
            Algo::Pagerank => Variant::PageRank(name.parse()?),
            Algo::Diameter => Variant::Diameter(name.parse()?),
            Algo::Betweenness => Variant::Betweenness(name.parse()?),
            Algo::Coreness => {
                let cfg = CorenessConfig::by_name(name)?;
                let name = CorenessConfig::VARIANTS.iter().find(|(n, _)| *n == name).unwrap().0;
                Variant::Coreness(name, cfg)
            }
            Algo::Triangles => Variant::Triangles(TriangleLevel::from_str(name)?),
            Algo::Louvain if name == "default" => Variant::Louvain,
            Algo::Louvain => return Err(format!("unknown louvain variant {name:?} (default)")),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Variant::PageRank(v) => v.name(),
            Variant::Diameter(v) => v.name(),
            Variant::Betweenness(v) => v.name(),
            Variant::Coreness(n, _) => n,
            Variant::Triangles(l) => l.name(),
            Variant::Louvain => "default",
        }
    }
}

pub struct Outcome {
    /// Result file contents, one line each.
    pub lines: Vec<String>,
    pub digest: Json,
    /// Engine totals over every run the algorithm made.
    pub summary: RunSummary,
    /// Variant-specific work measure reported by `bench`.
    pub detail: Option<u64>,
}

pub fn execute(engine: &Engine, variant: Variant, params: &Params, run: &RunConfig) -> Result<Outcome> {
    let g = engine.graph();
    Ok(match variant {
        Variant::PageRank(v) => {
            let r = pagerank(engine, &params.pagerank, v, run)?;
            Outcome {
                lines: r.ranks.iter().map(f64::to_string).collect(),
                digest: json!({ "top20": top_k(&r.ranks, 20), "iterations": r.iterations }),
                summary: r.summary,
                detail: Some(r.iterations as u64),
            }
        }
        Variant::Diameter(v) => {
            let r = estimate_diameter(engine, params.num_bfs, params.batch, v, run)?;
            Outcome {
                lines: vec![r.estimate.to_string()],
                digest: json!({ "estimate": r.estimate, "searches": r.sweeps.len() }),
                summary: r.summary,
                detail: Some(r.sweeps.len() as u64),
            }
        }
        Variant::Betweenness(v) => {
            let sources = bc_sources(g, params);
            let r = betweenness(engine, &sources, v, run)?;
            let max = r.centrality.iter().copied().fold(0.0, f64::max);
            Outcome {
                lines: r.centrality.iter().map(f64::to_string).collect(),
                digest: json!({ "sources": sources.len(), "max": max, "top20": top_k(&r.centrality, 20) }),
                summary: r.summary,
                detail: None,
            }
        }
        Variant::Coreness(_, mut cfg) => {
            cfg.hybrid_fraction = params.hybrid_fraction;
            let r = coreness(engine, &cfg, run)?;
            let iterations = r.iterations();
            Outcome {
                lines: r.cores.iter().map(u32::to_string).collect(),
                digest: json!({ "k_max": r.k_max, "iterations": iterations }),
                summary: r.summary,
                detail: Some(iterations as u64),
            }
        }
        Variant::Triangles(level) => {
            let cfg = TriangleConfig {
                hash_degree_threshold: params.hash_degree_threshold,
                ..TriangleConfig::with_level(level)
            };
            let r = triangle_count(engine, &cfg, run)?;
            Outcome {
                lines: r.per_vertex.iter().map(u64::to_string).collect(),
                digest: json!({ "total": r.total, "comparisons": r.comparisons }),
                summary: r.summary,
                detail: Some(r.comparisons),
            }
        }
        Variant::Louvain => {
            let r = louvain(engine, &params.louvain, run)?;
            let mut lines: Vec<String> = r
                .q_per_level
                .iter()
                .enumerate()
                .map(|(i, q)| format!("level {i} {q}"))
                .collect();
            lines.extend(r.communities.iter().map(VertexId::to_string));
            Outcome {
                digest: json!({ "q_per_level": r.q_per_level, "communities": r.num_communities() }),
                lines,
                summary: r.summary,
                detail: Some(r.q_per_level.len() as u64),
            }
        }
    })
}

pub fn bc_sources(g: &GraphHandle, params: &Params) -> Vec<VertexId> {
    params
        .sources
        .clone()
        .unwrap_or_else(|| (0..g.num_vertices()).collect())
}

/// Ids of the `k` largest values, largest first, ties by id.
pub fn top_k(values: &[f64], k: usize) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..values.len()).collect();
    ids.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    ids.truncate(k);
    ids
}

/// The `k` highest-degree vertices, ties by id.
pub fn top_degree(g: &GraphHandle, k: usize) -> Vec<VertexId> {
    let mut vs: Vec<VertexId> = (0..g.num_vertices()).collect();
    vs.sort_by_key(|&v| (std::cmp::Reverse(g.degree_unchecked(v, Direction::Out)), v));
    vs.truncate(k);
    vs
}

pub fn suite_variants(suite: &str) -> std::result::Result<(Algo, Vec<&'static str>), String> {
    Ok(match suite {
        "pagerank" => (Algo::Pagerank, vec!["push", "pull"]),
        "bfs" => (Algo::Diameter, vec!["uni", "multi"]),
        "bc" => (Algo::Betweenness, vec!["uni", "multi_sync", "multi_async"]),
        "coreness" => (Algo::Coreness, vec!["naive", "pruning", "hybrid", "optimized"]),
        "triangles" => (Algo::Triangles, vec!["scan", "binsearch", "hash", "revhash"]),
        _ => return Err(format!("unknown suite {suite:?} (pagerank, bfs, bc, coreness, triangles)")),
    })
}

/// The bfs suite compares `batch` sequential single-source searches with one
/// multi-source run from the same sources; the digest lists eccentricities.
pub fn bfs_suite_row(engine: &Engine, variant: &str, params: &Params, run: &RunConfig) -> Result<Outcome> {
    let sources = top_degree(engine.graph(), params.batch);
    let (eccs, summary) = if variant == "uni" {
        let mut summary = RunSummary::default();
        let mut eccs = Vec::new();
        for &s in &sources {
            let r = crate::algorithms::bfs(engine, s, run)?;
            summary.merge(&r.summary);
            eccs.push(r.dist.iter().filter(|&&d| d != u32::MAX).max().copied().unwrap_or(0));
        }
        (eccs, summary)
    } else {
        let r = multi_bfs(engine, &sources, run)?;
        (r.sweeps.iter().map(|s| s.eccentricity).collect(), r.summary)
    };
    Ok(Outcome {
        lines: eccs.iter().map(u32::to_string).collect(),
        digest: json!({ "eccentricities": eccs }),
        summary,
        detail: Some(sources.len() as u64),
    })
}
