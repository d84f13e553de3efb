//! Execution-model contract of the engine, exercised with small custom
//! vertex programs.

mod common;

use common::Fixture;
use semgraph::engine::{
    Adjacency, Context, Initial, Master, ReduceOp, Reduction, VertexProgram,
};
use semgraph::{Direction, Error, IoConfig, Mode, Result, RunConfig, VertexId};

/// Does nothing; counts activations.
struct Idle;

impl VertexProgram for Idle {
    type State = u32;
    type Message = ();

    fn init(&self, _v: VertexId) -> u32 {
        0
    }

    fn on_activate(&self, _v: VertexId, s: &mut u32, _ctx: &mut Context<'_, Self>) -> Result<()> {
        *s += 1;
        Ok(())
    }
}

fn path(n: u64) -> Fixture {
    let edges: Vec<(u64, u64)> = (0..n - 1).map(|i| (i, i + 1)).collect();
    Fixture::new(&edges, false)
}

#[test]
fn empty_frontier_runs_one_superstep() {
    let f = path(5);
    let e = f.engine();
    let out = e.run(&mut Idle, Initial::None, &RunConfig::default()).unwrap();
    assert_eq!(out.supersteps, 1);
    assert_eq!(out.states, [0; 5]);
    assert_eq!(out.stats.barrier_count, 1);
}

#[test]
fn initial_vertices_are_activated_once() {
    let f = path(5);
    let e = f.engine();
    let out = e.run(&mut Idle, Initial::Vertices(vec![1, 3]), &RunConfig::default()).unwrap();
    assert_eq!(out.states, [0, 1, 0, 1, 0]);
    let out = e.run(&mut Idle, Initial::All, &RunConfig::default()).unwrap();
    assert_eq!(out.states, [1; 5]);
    assert!(matches!(
        e.run(&mut Idle, Initial::Vertices(vec![9]), &RunConfig::default()),
        Err(Error::VertexOutOfRange { vertex: 9, .. })
    ));
}

/// Vertex 0 multicasts to its neighbors; receivers record the superstep.
struct OneHop;

#[derive(Debug, Default, Clone, Copy, PartialEq)]
struct Hop {
    got_at: Option<usize>,
    activated_at: Option<usize>,
}

impl VertexProgram for OneHop {
    type State = Hop;
    type Message = u8;

    fn init(&self, _v: VertexId) -> Hop {
        Hop::default()
    }

    fn on_activate(&self, v: VertexId, s: &mut Hop, ctx: &mut Context<'_, Self>) -> Result<()> {
        s.activated_at = Some(ctx.superstep());
        if v == 0 {
            ctx.request_adjacency(v, Direction::Out)?;
        }
        Ok(())
    }

    fn on_adjacency(&self, _v: VertexId, _s: &mut Hop, adj: Adjacency<'_>, ctx: &mut Context<'_, Self>) -> Result<()> {
        ctx.multicast(adj.list, 7)
    }

    fn on_message(&self, _v: VertexId, s: &mut Hop, msg: u8, ctx: &mut Context<'_, Self>) -> Result<()> {
        assert_eq!(msg, 7);
        s.got_at = Some(ctx.superstep());
        Ok(())
    }
}

#[test]
fn sync_messages_arrive_next_superstep_and_activate() {
    // Star centered at 0 with 4 leaves, plus an isolated-from-0 edge 5-6.
    let f = Fixture::new(&[(0, 1), (0, 2), (0, 3), (0, 4), (5, 6)], false);
    let e = f.engine();
    let out = e.run(&mut OneHop, Initial::Vertices(vec![0]), &RunConfig::default()).unwrap();
    assert_eq!(out.supersteps, 2);
    for v in 1..=4 {
        assert_eq!(out.states[v].got_at, Some(1));
        assert_eq!(out.states[v].activated_at, Some(1), "a message activates its receiver");
    }
    assert_eq!(out.states[5], Hop::default());
    assert_eq!(out.stats.messages_multicast, 1, "one multicast call");
    assert_eq!(out.stats.messages_point_to_point, 0);
}

#[test]
fn async_messages_arrive_within_the_superstep() {
    let f = Fixture::new(&[(0, 1), (0, 2), (0, 3), (0, 4)], false);
    let e = f.engine();
    let cfg = RunConfig::default().with_mode(Mode::Async);
    let out = e.run(&mut OneHop, Initial::Vertices(vec![0]), &cfg).unwrap();
    assert_eq!(out.supersteps, 1);
    for v in 1..=4 {
        assert_eq!(out.states[v].got_at, Some(0));
    }
}

/// Every vertex sends its id to itself and to vertex 0, combined by sum.
struct Summing;

impl VertexProgram for Summing {
    type State = (u64, u32);
    type Message = u64;
    const COMBINES: bool = true;

    fn init(&self, _v: VertexId) -> (u64, u32) {
        (0, 0)
    }

    fn on_activate(&self, v: VertexId, _s: &mut (u64, u32), ctx: &mut Context<'_, Self>) -> Result<()> {
        if ctx.superstep() == 0 {
            ctx.send(v, v + 100)?;
            ctx.send(0, v)?;
        }
        Ok(())
    }

    fn on_message(&self, _v: VertexId, s: &mut (u64, u32), m: u64, _ctx: &mut Context<'_, Self>) -> Result<()> {
        s.0 += m;
        s.1 += 1;
        Ok(())
    }

    fn combine(&self, acc: &mut u64, m: u64) {
        *acc += m;
    }
}

#[test]
fn combined_messages_arrive_once_per_destination() {
    let f = path(6);
    let e = f.engine();
    for workers in [1, 3] {
        let out = e
            .run(&mut Summing, Initial::All, &RunConfig::default().with_workers(workers))
            .unwrap();
        assert_eq!(out.states[0], (100 + (0..6).sum::<u64>(), 1), "workers {workers}");
        for v in 1..6u64 {
            assert_eq!(out.states[v as usize], (v + 100, 1), "send to self, workers {workers}");
        }
        assert_eq!(out.stats.messages_point_to_point, 12);
    }
}

/// Sums degrees through a reduction and reads it back a superstep later.
struct DegreeSum {
    seen: Vec<i64>,
}

impl VertexProgram for DegreeSum {
    type State = i64;
    type Message = ();

    fn init(&self, _v: VertexId) -> i64 {
        -1
    }

    fn on_activate(&self, v: VertexId, s: &mut i64, ctx: &mut Context<'_, Self>) -> Result<()> {
        match ctx.superstep() {
            0 => {
                assert!(matches!(ctx.reduced(0), Err(Error::NotReady(0))));
                ctx.reduce(0, ctx.degree(v, Direction::Out)? as i64)?;
                ctx.activate(v)
            }
            _ => {
                *s = ctx.reduced(0)?.as_i64();
                Ok(())
            }
        }
    }

    fn reductions(&self) -> Vec<Reduction> {
        vec![Reduction::new_i64(ReduceOp::Sum)]
    }

    fn master(&mut self, m: &mut Master<'_, i64>) -> Result<()> {
        self.seen.push(m.reduced(0).as_i64());
        Ok(())
    }
}

#[test]
fn reductions_are_visible_after_the_barrier() {
    let f = path(5);
    let e = f.engine();
    let mut p = DegreeSum { seen: Vec::new() };
    let out = e.run(&mut p, Initial::All, &RunConfig::default()).unwrap();
    assert_eq!(out.states, [8; 5]);
    assert_eq!(p.seen, [8, 0], "slots reset to the identity each superstep");
}

/// Keeps itself active forever.
struct Forever;

impl VertexProgram for Forever {
    type State = ();
    type Message = ();

    fn init(&self, _v: VertexId) {}

    fn on_activate(&self, v: VertexId, _s: &mut (), ctx: &mut Context<'_, Self>) -> Result<()> {
        ctx.activate(v)
    }
}

#[test]
fn superstep_cap_stops_runaway_programs() {
    let f = path(3);
    let e = f.engine();
    let cfg = RunConfig {
        superstep_cap: Some(25),
        ..RunConfig::default()
    };
    assert!(matches!(e.run(&mut Forever, Initial::All, &cfg), Err(Error::SuperstepCap(25))));
    // Default cap is max(10n, 100).
    assert!(matches!(
        e.run(&mut Forever, Initial::All, &RunConfig::default()),
        Err(Error::SuperstepCap(100))
    ));
}

/// Halts from the master after a fixed number of supersteps.
struct HaltAt(usize);

impl VertexProgram for HaltAt {
    type State = ();
    type Message = ();

    fn init(&self, _v: VertexId) {}

    fn on_activate(&self, v: VertexId, _s: &mut (), ctx: &mut Context<'_, Self>) -> Result<()> {
        ctx.activate(v)
    }

    fn master(&mut self, m: &mut Master<'_, ()>) -> Result<()> {
        if m.supersteps() == self.0 {
            m.halt();
        }
        Ok(())
    }
}

#[test]
fn master_halt_ends_the_run() {
    let f = path(3);
    let out = f.engine().run(&mut HaltAt(4), Initial::All, &RunConfig::default()).unwrap();
    assert_eq!(out.supersteps, 4);
}

/// Grows a heap buffer past its declared bound.
struct Greedy;

impl VertexProgram for Greedy {
    type State = Vec<u64>;
    type Message = ();

    fn init(&self, _v: VertexId) -> Vec<u64> {
        Vec::new()
    }

    fn on_activate(&self, _v: VertexId, s: &mut Vec<u64>, _ctx: &mut Context<'_, Self>) -> Result<()> {
        s.extend(0..64);
        Ok(())
    }

    fn state_bound(&self) -> usize {
        64
    }

    fn state_bytes(&self, s: &Vec<u64>) -> usize {
        std::mem::size_of::<Vec<u64>>() + s.capacity() * 8
    }
}

#[test]
fn state_over_its_bound_violates_the_memory_contract() {
    let f = path(3);
    assert!(matches!(
        f.engine().run(&mut Greedy, Initial::All, &RunConfig::default()),
        Err(Error::MemoryContract(_))
    ));
}

#[test]
fn memory_bound_is_enforced() {
    let f = path(200);
    let e = f.engine_with(IoConfig::default().with_cache_bytes(8 << 10));
    let out = e.run(&mut OneHop, Initial::All, &RunConfig::default()).unwrap();
    let total = out.memory.total();
    assert!(out.memory.cache_bytes <= 8 << 10);
    assert!(out.memory.index_bytes > 0 && out.memory.state_bytes > 0);
    let cfg = RunConfig {
        memory_bound: Some(total - 1),
        ..RunConfig::default()
    };
    assert!(matches!(e.run(&mut OneHop, Initial::All, &cfg), Err(Error::MemoryContract(_))));
}

#[test]
fn zero_workers_or_batch_is_a_config_error() {
    let f = path(3);
    let e = f.engine();
    assert!(matches!(e.run(&mut Idle, Initial::All, &RunConfig::default().with_workers(0)), Err(Error::Config(_))));
    let cfg = RunConfig {
        io_batch: 0,
        ..RunConfig::default()
    };
    assert!(matches!(e.run(&mut Idle, Initial::All, &cfg), Err(Error::Config(_))));
}

/// Label propagation of the minimum id: deterministic under any schedule.
struct MinLabel;

impl VertexProgram for MinLabel {
    type State = u64;
    type Message = u64;
    const COMBINES: bool = true;

    fn init(&self, v: VertexId) -> u64 {
        v
    }

    fn on_activate(&self, v: VertexId, _s: &mut u64, ctx: &mut Context<'_, Self>) -> Result<()> {
        ctx.request_adjacency(v, Direction::Out)
    }

    fn on_adjacency(&self, _v: VertexId, s: &mut u64, adj: Adjacency<'_>, ctx: &mut Context<'_, Self>) -> Result<()> {
        ctx.multicast(adj.list, *s)
    }

    fn on_message(&self, _v: VertexId, s: &mut u64, m: u64, _ctx: &mut Context<'_, Self>) -> Result<()> {
        *s = (*s).min(m);
        Ok(())
    }

    fn combine(&self, acc: &mut u64, m: u64) {
        *acc = (*acc).min(m);
    }
}

/// Re-broadcasts only on improvement, so the run terminates.
struct MinLabelDelta;

#[derive(Debug, Clone, Copy)]
struct Label {
    value: u64,
    improved: bool,
}

impl VertexProgram for MinLabelDelta {
    type State = Label;
    type Message = u64;
    const COMBINES: bool = true;

    fn init(&self, v: VertexId) -> Label {
        Label { value: v, improved: true }
    }

    fn on_activate(&self, v: VertexId, s: &mut Label, ctx: &mut Context<'_, Self>) -> Result<()> {
        if std::mem::take(&mut s.improved) {
            ctx.request_adjacency(v, Direction::Out)?;
        }
        Ok(())
    }

    fn on_adjacency(&self, _v: VertexId, s: &mut Label, adj: Adjacency<'_>, ctx: &mut Context<'_, Self>) -> Result<()> {
        ctx.multicast(adj.list, s.value)
    }

    fn on_message(&self, _v: VertexId, s: &mut Label, m: u64, _ctx: &mut Context<'_, Self>) -> Result<()> {
        if m < s.value {
            s.value = m;
            s.improved = true;
        }
        Ok(())
    }

    fn combine(&self, acc: &mut u64, m: u64) {
        *acc = (*acc).min(m);
    }
}

fn components(f: &Fixture) -> Vec<u64> {
    // Oracle: the smallest id reachable from each vertex.
    (0..f.n)
        .map(|s| {
            let d = common::bfs_dist(&f.out, s);
            (0..f.n).find(|&v| d[v] != common::UNREACHED).unwrap() as u64
        })
        .collect()
}

#[test]
fn results_do_not_depend_on_workers_or_mode() {
    let f = common::er(300, 0.006, false, 11);
    let want = components(&f);
    let e = f.engine_with(IoConfig::default().with_cache_bytes(16 << 10));
    for mode in [Mode::Sync, Mode::Async] {
        for workers in [1, 2, 4] {
            let cfg = RunConfig::default().with_workers(workers).with_mode(mode);
            let out = e.run(&mut MinLabelDelta, Initial::All, &cfg).unwrap();
            let got: Vec<u64> = out.states.iter().map(|s| s.value).collect();
            assert_eq!(got, want, "{mode:?} with {workers} workers");
            assert_eq!(out.partition_work.len(), workers.min(300usize.div_ceil(64)));
        }
    }
}

#[test]
fn unconditional_rebroadcast_hits_the_cap() {
    let f = path(4);
    let cfg = RunConfig {
        superstep_cap: Some(10),
        ..RunConfig::default()
    };
    assert!(matches!(f.engine().run(&mut MinLabel, Initial::All, &cfg), Err(Error::SuperstepCap(10))));
}

/// Requests both directions on a directed graph.
struct BothWays;

impl VertexProgram for BothWays {
    type State = ();
    type Message = ();

    fn init(&self, _v: VertexId) {}

    fn on_activate(&self, v: VertexId, _s: &mut (), ctx: &mut Context<'_, Self>) -> Result<()> {
        ctx.request_adjacency(v, Direction::Both)
    }
}

#[test]
fn undirected_request_on_directed_graph_is_rejected() {
    let f = Fixture::new(&[(0, 1), (1, 2)], true);
    assert!(matches!(
        f.engine().run(&mut BothWays, Initial::All, &RunConfig::default()),
        Err(Error::Config(_))
    ));
}

#[test]
fn adjacency_lists_match_the_edge_list() {
    let f = common::er(80, 0.1, true, 5);
    let e = f.engine_with(IoConfig::default().with_cache_bytes(4096));
    let g = e.graph();
    assert_eq!(g.original_ids().unwrap(), f.original);
    for v in 0..f.n {
        let out = e.io().read_adjacency(v as VertexId, Direction::Out).unwrap();
        let inn = e.io().read_adjacency(v as VertexId, Direction::In).unwrap();
        let out: Vec<usize> = out.iter().map(|&x| x as usize).collect();
        let inn: Vec<usize> = inn.iter().map(|&x| x as usize).collect();
        assert_eq!(out, f.out[v]);
        assert_eq!(inn, f.inn[v]);
    }
}

#[test]
fn cache_hits_follow_clock_replacement() {
    let f = common::er(150, 0.12, false, 9);
    let page = 64usize;
    for capacity in [1usize, 2, 3, 5, 8] {
        let io = IoConfig {
            page_size: page,
            cache_bytes: capacity * page,
            io_threads: 0,
        };
        let e = f.engine_with(io);
        let mut offsets = vec![0u64; f.n + 1];
        for v in 0..f.n {
            offsets[v + 1] = offsets[v] + 8 * f.out[v].len() as u64;
        }
        // A fixed pseudo-random access order with repeats.
        let order: Vec<usize> = (0..600).map(|i| (i * 37 + i * i / 7) % f.n).collect();
        let mut requests = Vec::new();
        e.io().reset_stats();
        for &v in &order {
            e.io().read_adjacency(v as VertexId, Direction::Out).unwrap();
            let (lo, hi) = (offsets[v], offsets[v + 1]);
            if hi > lo {
                requests.push((lo / page as u64..=(hi - 1) / page as u64).collect::<Vec<u64>>());
            }
        }
        let s = e.io().snapshot();
        let (accesses, hits) = common::clock_simulate(capacity, &requests);
        assert_eq!((s.cache_accesses, s.cache_hits), (accesses, hits), "capacity {capacity}");
        assert_eq!(s.bytes_read_from_disk % page as u64, 0);
    }
}
