//! Invariants over arbitrary small graphs, checked with proptest.

mod common;

use common::Fixture;
use proptest::prelude::*;
use semgraph::algorithms::*;
use semgraph::generators::Edge;
use semgraph::{Direction, IoConfig, Mode, RunConfig, VertexId};

fn sync() -> RunConfig {
    RunConfig::default()
}

/// Up to `max_edges` edges over `n` raw ids, scrambled so the stored order
/// differs from the raw one.
fn edges(n: u64, max_edges: usize) -> impl Strategy<Value = Vec<Edge>> {
    prop::collection::vec((0..n, 0..n), 1..max_edges)
        .prop_map(|es| es.into_iter().map(|(a, b)| (a * 7919 % 1_000_003, b * 7919 % 1_000_003)).collect())
}

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 24,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn ingest_round_trips_adjacency_and_ids(es in edges(40, 150), directed in any::<bool>()) {
        let f = Fixture::new(&es, directed);
        let e = f.engine_with(IoConfig::default().with_cache_bytes(4096));
        let g = e.graph();
        prop_assert_eq!(g.num_vertices() as usize, f.n);
        prop_assert_eq!(g.num_edges() as usize, f.num_edges());
        prop_assert_eq!(g.original_ids().unwrap(), f.original.clone());
        for v in 0..f.n {
            let out: Vec<usize> = e.io().read_adjacency(v as VertexId, Direction::Out).unwrap().iter().map(|&x| x as usize).collect();
            let inn: Vec<usize> = e.io().read_adjacency(v as VertexId, Direction::In).unwrap().iter().map(|&x| x as usize).collect();
            prop_assert_eq!(&out, &f.out[v]);
            prop_assert_eq!(&inn, &f.inn[v]);
        }
    }

    #[test]
    fn cache_hits_match_clock_simulation(
        es in edges(30, 200),
        capacity in 1usize..6,
        order in prop::collection::vec(0usize..1000, 1..200),
    ) {
        let f = Fixture::new(&es, false);
        let page = 64usize;
        let e = f.engine_with(IoConfig { page_size: page, cache_bytes: capacity * page, io_threads: 0 });
        let mut offsets = vec![0u64; f.n + 1];
        for v in 0..f.n {
            offsets[v + 1] = offsets[v] + 8 * f.out[v].len() as u64;
        }
        let mut requests = Vec::new();
        e.io().reset_stats();
        for v in order.into_iter().map(|i| i % f.n) {
            e.io().read_adjacency(v as VertexId, Direction::Out).unwrap();
            let (lo, hi) = (offsets[v], offsets[v + 1]);
            if hi > lo {
                requests.push((lo / page as u64..=(hi - 1) / page as u64).collect::<Vec<u64>>());
            }
        }
        let s = e.io().snapshot();
        prop_assert_eq!((s.cache_accesses, s.cache_hits), common::clock_simulate(capacity, &requests));
        prop_assert!(s.bytes_read_from_disk <= s.cache_accesses * page as u64);
    }

    #[test]
    fn triangle_counts_agree_and_sum_to_three_per_triangle(es in edges(30, 200)) {
        let f = Fixture::new(&es, false);
        let (total, per) = common::triangles_brute(&f.out);
        let e = f.engine();
        for level in TriangleLevel::ALL {
            let cfg = TriangleConfig { level, hash_degree_threshold: 4, ..TriangleConfig::default() };
            let r = triangle_count(&e, &cfg, &sync()).unwrap();
            prop_assert_eq!(r.total, total);
            prop_assert_eq!(r.per_vertex.iter().sum::<u64>(), 3 * r.total);
            prop_assert_eq!(&r.per_vertex, &per);
        }
    }

    #[test]
    fn cores_match_peeling_and_are_supported(es in edges(30, 150)) {
        let f = Fixture::new(&es, false);
        let want = common::peel(&f.out);
        let e = f.engine();
        for cfg in [CorenessConfig::NAIVE, CorenessConfig::PRUNING, CorenessConfig::default()] {
            let r = coreness(&e, &cfg, &sync()).unwrap();
            prop_assert_eq!(&r.cores, &want);
            for v in 0..f.n {
                let k = r.cores[v];
                prop_assert!(k as usize <= f.out[v].len());
                let support = f.out[v].iter().filter(|&&u| r.cores[u] >= k).count();
                prop_assert!(support >= k as usize, "vertex {} core {} support {}", v, k, support);
            }
        }
    }

    #[test]
    fn pagerank_is_a_distribution_above_teleport(es in edges(40, 150)) {
        let f = Fixture::new(&es, true);
        let e = f.engine();
        let cfg = PageRankConfig::default();
        // Exact ranks never drop below the teleport share; converged ones
        // may by at most the stopping threshold.
        let floor = (1.0 - cfg.damping) / f.n as f64 - cfg.absolute_threshold(f.n as u64);
        for variant in PageRankVariant::ALL {
            let r = pagerank(&e, &cfg, variant, &sync()).unwrap();
            let sum: f64 = r.ranks.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9, "{} sums to {}", variant.name(), sum);
            let low = r.ranks.iter().copied().fold(f64::INFINITY, f64::min);
            prop_assert!(low >= floor, "{}: min {} below {}", variant.name(), low, floor);
        }
    }

    #[test]
    fn bfs_distances_respect_every_arc(es in edges(40, 120), directed in any::<bool>(), s in 0usize..1000) {
        let f = Fixture::new(&es, directed);
        let s = s % f.n;
        let e = f.engine();
        for mode in [Mode::Sync, Mode::Async] {
            let d = bfs(&e, s as VertexId, &sync().with_mode(mode)).unwrap().dist;
            prop_assert_eq!(d[s], 0);
            for u in 0..f.n {
                for &v in &f.out[u] {
                    if d[u] != common::UNREACHED {
                        prop_assert!(d[v] <= d[u] + 1);
                    }
                }
            }
            prop_assert_eq!(d, common::bfs_dist(&f.out, s));
        }
    }

    #[test]
    fn betweenness_totals_count_interior_path_vertices(es in edges(25, 80), directed in any::<bool>()) {
        // Summed over all vertices, betweenness counts each reachable ordered
        // pair once per interior vertex of its shortest paths: d(s, t) - 1.
        let f = Fixture::new(&es, directed);
        let mut want = 0.0;
        for s in 0..f.n {
            for (t, &d) in common::bfs_dist(&f.out, s).iter().enumerate() {
                if t != s && d != common::UNREACHED {
                    want += f64::from(d - 1);
                }
            }
        }
        let all: Vec<VertexId> = (0..f.n as VertexId).collect();
        let e = f.engine();
        for variant in [BcVariant::Uni, BcVariant::MultiSync, BcVariant::MultiAsync] {
            let r = betweenness(&e, &all, variant, &sync()).unwrap();
            prop_assert!(r.centrality.iter().all(|&x| x >= 0.0));
            let got: f64 = r.centrality.iter().sum();
            prop_assert!((got - want).abs() <= 1e-9 * want.max(1.0), "{}: {} vs {}", variant.name(), got, want);
        }
    }

    #[test]
    fn louvain_never_lowers_modularity(es in edges(40, 150)) {
        let f = Fixture::new(&es, false);
        let e = f.engine();
        let r = louvain(&e, &LouvainConfig::default(), &sync()).unwrap();
        prop_assert!(r.q_per_level.windows(2).all(|w| w[1] >= w[0]), "{:?}", r.q_per_level);
        let q = modularity(&e, &r.communities, &sync()).unwrap().q;
        prop_assert!((q - r.q_per_level.last().unwrap()).abs() < 1e-9);
        prop_assert!((q - common::modularity_dense(&f.out, &r.communities)).abs() < 1e-9);
        for (v, &c) in r.communities.iter().enumerate() {
            prop_assert!(c as usize <= v);
            prop_assert_eq!(r.communities[c as usize], c);
        }
        prop_assert_eq!(e.graph().adjacency_writes(), 0);
    }

    #[test]
    fn worker_count_does_not_change_results(es in edges(200, 600), workers in 2usize..5) {
        let f = Fixture::new(&es, false);
        let e = f.engine();
        let one = sync();
        let many = sync().with_workers(workers);
        let c1 = coreness(&e, &CorenessConfig::default(), &one).unwrap().cores;
        let cn = coreness(&e, &CorenessConfig::default(), &many).unwrap().cores;
        prop_assert_eq!(c1, cn);
        let t1 = triangle_count(&e, &TriangleConfig::default(), &one).unwrap().per_vertex;
        let tn = triangle_count(&e, &TriangleConfig::default(), &many).unwrap().per_vertex;
        prop_assert_eq!(t1, tn);
        let l1 = louvain(&e, &LouvainConfig::default(), &one).unwrap().communities;
        let ln = louvain(&e, &LouvainConfig::default(), &many).unwrap().communities;
        prop_assert_eq!(l1, ln);
    }
}
