//! Vertex-centric BSP execution over a semi-external graph.
//!
//! Vertex ids are range-partitioned across workers in 64-aligned blocks.
//! A superstep delivers the previous superstep's messages (sorted by
//! destination), runs `on_activate` for every active vertex in ascending
//! order, and serves adjacency requests in batches until none remain. A
//! barrier then folds reductions, routes outboxes and runs the master hook.
//!
//! In async mode messages go straight to the destination partition's queue
//! and are handled within the same superstep; a superstep ends once every
//! queue is empty and no worker holds pending work.

mod frontier;
mod program;
mod reduce;

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph_store::{open_graph, GraphHandle, VertexId};
use crate::io_engine::{AdjacencyRequest, IoConfig, IoEngine, IoStats, IoStatsSnapshot};
pub use frontier::Bitset;
use program::{AsyncQueues, Local, Outbox, Shared};
pub use program::{Adjacency, Context, Master, VertexProgram, MAX_MESSAGE_BYTES};
pub use reduce::{ReduceOp, Reduction, Value};

pub const WORKERS_ENV: &str = "SEMGRAPH_WORKERS";
pub const DEFAULT_IO_BATCH: usize = 256;
const IO_PENDING_ENTRY_BYTES: usize = std::mem::size_of::<(VertexId, VertexId, u64)>();

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Sync,
    Async,
}

#[derive(Debug, Clone)]
pub enum Initial {
    None,
    All,
    Vertices(Vec<VertexId>),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Mode,
    pub workers: usize,
    /// Adjacency requests per I/O batch.
    pub io_batch: usize,
    /// Defaults to `max(10·n, 100)`.
    pub superstep_cap: Option<usize>,
    /// Fails the run when accounted memory exceeds this many bytes.
    pub memory_bound: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Sync,
            workers: 1,
            io_batch: DEFAULT_IO_BATCH,
            superstep_cap: None,
            memory_bound: None,
        }
    }
}

impl RunConfig {
    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }
}

/// Worker count from `SEMGRAPH_WORKERS`, if set.
pub fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{WORKERS_ENV}={v:?} is not a count"))),
        Err(_) => Ok(None),
    }
}

/// High-water marks of every in-memory structure the engine accounts for.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct MemoryReport {
    pub index_bytes: usize,
    pub state_bytes: usize,
    pub frontier_bytes: usize,
    pub queue_bytes: usize,
    pub cache_bytes: usize,
    pub transient_bytes: usize,
    pub global_bytes: usize,
}

impl MemoryReport {
    pub fn total(&self) -> usize {
        self.index_bytes
            + self.state_bytes
            + self.frontier_bytes
            + self.queue_bytes
            + self.cache_bytes
            + self.transient_bytes
            + self.global_bytes
    }

    /// Field-wise maximum.
    pub fn max(&self, o: &MemoryReport) -> MemoryReport {
        MemoryReport {
            index_bytes: self.index_bytes.max(o.index_bytes),
            state_bytes: self.state_bytes.max(o.state_bytes),
            frontier_bytes: self.frontier_bytes.max(o.frontier_bytes),
            queue_bytes: self.queue_bytes.max(o.queue_bytes),
            cache_bytes: self.cache_bytes.max(o.cache_bytes),
            transient_bytes: self.transient_bytes.max(o.transient_bytes),
            global_bytes: self.global_bytes.max(o.global_bytes),
        }
    }
}

#[derive(Debug)]
pub struct RunOutput<S> {
    pub states: Vec<S>,
    pub supersteps: usize,
    /// Counter deltas over this run.
    pub stats: IoStatsSnapshot,
    pub memory: MemoryReport,
    /// Vertex activations handled per worker.
    pub partition_work: Vec<u64>,
    pub elapsed: Duration,
}

/// An opened graph plus the I/O layer every run reads through.
#[derive(Debug)]
pub struct Engine {
    io: IoEngine,
}

impl Engine {
    pub fn new(graph: Arc<GraphHandle>, io: IoConfig) -> Result<Self> {
        Ok(Engine {
            io: IoEngine::new(graph, io)?,
        })
    }

    pub fn open(path: impl AsRef<std::path::Path>, io: IoConfig) -> Result<Self> {
        Engine::new(Arc::new(open_graph(path)?), io)
    }

    pub fn graph(&self) -> &GraphHandle {
        self.io.graph()
    }

    pub fn io(&self) -> &IoEngine {
        &self.io
    }

    pub fn run<P: VertexProgram>(
        &self,
        program: &mut P,
        initial: Initial,
        cfg: &RunConfig,
    ) -> Result<RunOutput<P::State>> {
        const {
            assert!(
                std::mem::size_of::<P::Message>() <= MAX_MESSAGE_BYTES,
                "message type exceeds MAX_MESSAGE_BYTES"
            )
        };
        if cfg.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if cfg.io_batch == 0 {
            return Err(Error::Config("io_batch must be at least 1".into()));
        }
        let started = Instant::now();
        let graph = self.graph();
        let n = graph.num_vertices() as usize;
        let chunk = n.div_ceil(cfg.workers).next_multiple_of(64).max(64);
        let parts = n.div_ceil(chunk).max(1);
        let cap = cfg.superstep_cap.unwrap_or((10 * n).max(100));
        let slots = program.reductions();

        let mut states: Vec<P::State> = (0..n as VertexId).map(|v| program.init(v)).collect();
        let cur = Bitset::new(n);
        let next = Bitset::new(n);
        match initial {
            Initial::None => {}
            Initial::All => cur.set_all(),
            Initial::Vertices(vs) => {
                for v in vs {
                    graph.check_vertex(v)?;
                    cur.set(v as usize);
                }
            }
        }

        let stats_start = self.io.snapshot();
        self.io.transient().reset_peak();
        let fixed = MemoryReport {
            index_bytes: graph.index().memory_bytes(),
            state_bytes: n * program.state_bound(),
            frontier_bytes: cur.memory_bytes() + next.memory_bytes(),
            ..MemoryReport::default()
        };
        let mut memory = fixed;
        let mut work = vec![0u64; parts];
        let mut inboxes: Vec<Vec<(VertexId, P::Message)>> = (0..parts).map(|_| Vec::new()).collect();
        let mut reduced: Option<Vec<Value>> = None;
        let queues = (cfg.mode == Mode::Async).then(|| AsyncQueues {
            queues: (0..parts)
                .map(|_| (0..parts).map(|_| Default::default()).collect())
                .collect(),
            outstanding: AtomicUsize::new(0),
            queued: AtomicUsize::new(0),
            peak_queued: AtomicUsize::new(0),
        });
        let mut superstep = 0usize;

        loop {
            if superstep >= cap {
                return Err(Error::SuperstepCap(cap));
            }
            if let Some(q) = &queues {
                q.outstanding.store(parts, Ordering::Release);
            }
            let shared = Shared {
                program: &*program,
                graph,
                superstep,
                chunk,
                next: &next,
                reduced: reduced.as_deref(),
                slots: &slots,
                async_queues: queues.as_ref(),
                transient: self.io.transient(),
            };
            let env = WorkerEnv {
                shared: &shared,
                io: &self.io,
                io_batch: cfg.io_batch,
                cur: &cur,
                chunk,
                parts,
                abort: AtomicBool::new(false),
            };
            let mut outs: Vec<WorkerOut<P::Message>> = if parts == 1 {
                let inbox = std::mem::take(&mut inboxes[0]);
                vec![env.run_worker(0, &mut states, inbox)]
            } else {
                let mut slices: Vec<&mut [P::State]> = Vec::with_capacity(parts);
                let mut rest: &mut [P::State] = &mut states;
                for _ in 0..parts {
                    let (head, tail) = rest.split_at_mut(chunk.min(rest.len()));
                    slices.push(head);
                    rest = tail;
                }
                let env = &env;
                std::thread::scope(|s| {
                    let handles: Vec<_> = slices
                        .into_iter()
                        .zip(inboxes.iter_mut().map(std::mem::take))
                        .enumerate()
                        .map(|(w, (st, inbox))| s.spawn(move || env.run_worker(w, st, inbox)))
                        .collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().expect("worker panicked"))
                        .collect()
                })
            };

            for (w, out) in outs.iter_mut().enumerate() {
                work[w] += std::mem::replace(&mut out.result, Ok(0))?;
            }
            superstep += 1;
            let stats = self.io.stats();
            IoStats::add(&stats.barrier_count, 1);
            IoStats::add(&stats.messages_point_to_point, outs.iter().map(|o| o.local.p2p).sum());
            IoStats::add(&stats.messages_multicast, outs.iter().map(|o| o.local.multicast).sum());

            let locals: Vec<Vec<Value>> = outs.iter_mut().map(|o| std::mem::take(&mut o.local.reduce)).collect();
            let folded = reduce::combine(&slots, &locals);

            // Inboxes are consumed before activations run, so the queue peak
            // is the larger of the delivery phase and the final outboxes.
            let delivery_bytes: usize = outs.iter().map(|o| o.delivery_bytes).sum();
            let outbox_bytes: usize = outs.iter().map(|o| o.local.outbox_bytes()).sum();
            let async_bytes = queues
                .as_ref()
                .map_or(0, |q| q.peak_queued.swap(0, Ordering::AcqRel) * Outbox::<P::Message>::ENTRY_BYTES);
            let io_bytes: usize = outs.iter().map(|o| o.peak_io_bytes).sum();
            let mut pending = 0;
            for (p, inbox) in inboxes.iter_mut().enumerate() {
                let mut entries: Vec<(VertexId, u64, P::Message)> = Vec::new();
                for out in outs.iter_mut() {
                    entries.extend(out.local.outboxes[p].drain_sorted());
                }
                if P::COMBINES {
                    entries.sort_by_key(|e| (e.0, e.1));
                    let mut merged: Vec<(VertexId, P::Message)> = Vec::with_capacity(entries.len());
                    let mut last: Option<(VertexId, u64)> = None;
                    for (d, k, m) in entries {
                        if last == Some((d, k)) {
                            program.combine(&mut merged.last_mut().unwrap().1, m);
                        } else {
                            merged.push((d, m));
                            last = Some((d, k));
                        }
                    }
                    *inbox = merged;
                } else {
                    entries.sort_by_key(|e| e.0);
                    *inbox = entries.into_iter().map(|(d, _, m)| (d, m)).collect();
                }
                pending += inbox.len();
            }
            cur.clear();

            let reduced_now = reduced.insert(folded);
            let mut m = Master {
                states: &mut states,
                reduced: reduced_now,
                next: &next,
                supersteps: superstep,
                pending_messages: pending,
                halted: false,
            };
            program.master(&mut m)?;
            let halted = m.halted;

            let step = MemoryReport {
                queue_bytes: delivery_bytes.max(outbox_bytes) + async_bytes + io_bytes,
                cache_bytes: self.io.peak_resident_cache_bytes(),
                transient_bytes: self.io.transient().peak(),
                global_bytes: program.global_bytes(),
                ..fixed
            };
            memory = memory.max(&step);
            if let Some(bound) = cfg.memory_bound {
                if memory.total() > bound {
                    return Err(Error::MemoryContract(format!(
                        "accounted {} bytes exceeds bound {bound}: {memory:?}",
                        memory.total()
                    )));
                }
            }

            if halted || (next.none() && pending == 0) {
                break;
            }
            cur.take_from(&next);
        }

        Ok(RunOutput {
            states,
            supersteps: superstep,
            stats: self.io.snapshot().since(&stats_start),
            memory,
            partition_work: work,
            elapsed: started.elapsed(),
        })
    }
}

struct WorkerOut<M> {
    local: Local<M>,
    result: Result<u64>,
    peak_io_bytes: usize,
    /// Inbox plus outbox bytes at the end of message delivery.
    delivery_bytes: usize,
}

struct WorkerEnv<'a, P: VertexProgram> {
    shared: &'a Shared<'a, P>,
    io: &'a IoEngine,
    io_batch: usize,
    cur: &'a Bitset,
    chunk: usize,
    parts: usize,
    abort: AtomicBool,
}

struct Worker<'e, 'a, P: VertexProgram> {
    env: &'e WorkerEnv<'a, P>,
    lo: usize,
    states: &'e mut [P::State],
    local: Local<P::Message>,
    peak_io_bytes: usize,
    delivery_bytes: usize,
}

impl<'a, P: VertexProgram> WorkerEnv<'a, P> {
    fn run_worker(
        &self,
        w: usize,
        states: &mut [P::State],
        inbox: Vec<(VertexId, P::Message)>,
    ) -> WorkerOut<P::Message> {
        let mut worker = Worker {
            env: self,
            lo: w * self.chunk,
            states,
            local: Local::new(w, self.parts, self.shared.slots),
            peak_io_bytes: 0,
            delivery_bytes: 0,
        };
        let result = match self.shared.async_queues {
            None => worker.run_sync(inbox),
            Some(q) => {
                let r = worker.run_async(q);
                if r.is_err() {
                    self.abort.store(true, Ordering::Release);
                }
                r
            }
        };
        WorkerOut {
            peak_io_bytes: worker.peak_io_bytes,
            delivery_bytes: worker.delivery_bytes,
            local: worker.local,
            result,
        }
    }
}

impl<P: VertexProgram> Worker<'_, '_, P> {
    fn hi(&self) -> usize {
        self.lo + self.states.len()
    }

    fn check_state(&self, v: VertexId) -> Result<()> {
        let p = self.env.shared.program;
        let bytes = p.state_bytes(&self.states[v as usize - self.lo]);
        let bound = p.state_bound();
        if bytes > bound {
            return Err(Error::MemoryContract(format!(
                "vertex {v} holds {bytes} bytes of state, declared bound is {bound}"
            )));
        }
        Ok(())
    }

    fn message(&mut self, v: VertexId, msg: P::Message) -> Result<()> {
        let shared = self.env.shared;
        let mut ctx = Context {
            shared,
            local: &mut self.local,
            vertex: v,
        };
        shared
            .program
            .on_message(v, &mut self.states[v as usize - self.lo], msg, &mut ctx)?;
        self.check_state(v)
    }

    fn activate(&mut self, v: VertexId) -> Result<()> {
        let shared = self.env.shared;
        let mut ctx = Context {
            shared,
            local: &mut self.local,
            vertex: v,
        };
        shared
            .program
            .on_activate(v, &mut self.states[v as usize - self.lo], &mut ctx)?;
        self.check_state(v)
    }

    /// Serves queued adjacency requests, including any issued by the
    /// callbacks it runs, until none remain.
    fn flush(&mut self) -> Result<()> {
        let shared = self.env.shared;
        while !self.local.io_pending.is_empty() {
            let pending = std::mem::take(&mut self.local.io_pending);
            self.peak_io_bytes = self.peak_io_bytes.max(pending.len() * IO_PENDING_ENTRY_BYTES);
            for batch in pending.chunks(self.env.io_batch) {
                let reqs: Vec<AdjacencyRequest> = batch
                    .iter()
                    .enumerate()
                    .map(|(i, &(_, target, direction))| AdjacencyRequest {
                        vertex: target,
                        direction,
                        tag: i as u64,
                    })
                    .collect();
                for c in self.env.io.request_adjacencies(&reqs)?.in_order() {
                    let c = c?;
                    let (v, target, direction) = batch[c.tag as usize];
                    let mut ctx = Context {
                        shared,
                        local: &mut self.local,
                        vertex: v,
                    };
                    let adj = Adjacency {
                        target,
                        direction,
                        list: &c.list,
                    };
                    shared.program.on_adjacency(
                        v,
                        &mut self.states[v as usize - self.lo],
                        adj,
                        &mut ctx,
                    )?;
                    self.check_state(v)?;
                }
            }
        }
        Ok(())
    }

    fn run_sync(&mut self, inbox: Vec<(VertexId, P::Message)>) -> Result<u64> {
        let cur = self.env.cur;
        let inbox_bytes = inbox.len() * Outbox::<P::Message>::ENTRY_BYTES;
        for (v, msg) in inbox {
            self.message(v, msg)?;
            cur.set(v as usize);
            if self.local.io_pending.len() >= self.env.io_batch {
                self.flush()?;
            }
        }
        self.delivery_bytes = inbox_bytes + self.local.outbox_bytes();
        let mut work = 0;
        for v in cur.iter_range(self.lo, self.hi()) {
            work += 1;
            self.activate(v as VertexId)?;
            if self.local.io_pending.len() >= self.env.io_batch {
                self.flush()?;
            }
        }
        self.flush()?;
        Ok(work)
    }

    fn run_async(&mut self, q: &AsyncQueues<P::Message>) -> Result<u64> {
        let env = self.env;
        let me = self.local.worker;
        let mut active = env.cur.iter_range(self.lo, self.hi());
        let mut activations_left = true;
        let mut busy = true;
        let mut work = 0;
        let mut idle_spins = 0u32;
        loop {
            if env.abort.load(Ordering::Acquire) {
                return Ok(work);
            }
            let mut did = false;
            // Drain inbound queues round-robin, one message per source at a
            // time, so no sender starves the others.
            loop {
                let mut got = false;
                for src in 0..env.parts {
                    if let Some((v, msg)) = q.queues[me][src].pop() {
                        q.queued.fetch_sub(1, Ordering::AcqRel);
                        got = true;
                        self.message(v, msg)?;
                        self.activate(v)?;
                        work += 1;
                        if !busy && !self.local.io_pending.is_empty() {
                            q.outstanding.fetch_add(1, Ordering::AcqRel);
                            busy = true;
                        }
                        q.outstanding.fetch_sub(1, Ordering::AcqRel);
                    }
                }
                if !got {
                    break;
                }
                did = true;
                if self.local.io_pending.len() >= env.io_batch {
                    break;
                }
            }
            if activations_left && self.local.io_pending.len() < env.io_batch {
                for _ in 0..64 {
                    match active.next() {
                        Some(v) => {
                            work += 1;
                            self.activate(v as VertexId)?;
                            did = true;
                        }
                        None => {
                            activations_left = false;
                            break;
                        }
                    }
                }
            }
            let drained = !did || self.local.io_pending.len() >= env.io_batch;
            if !self.local.io_pending.is_empty() && drained {
                self.flush()?;
                did = true;
            }
            if did {
                idle_spins = 0;
                continue;
            }
            if busy && !activations_left && self.local.io_pending.is_empty() {
                q.outstanding.fetch_sub(1, Ordering::AcqRel);
                busy = false;
            }
            if !busy && q.outstanding.load(Ordering::Acquire) == 0 {
                return Ok(work);
            }
            idle_spins += 1;
            if idle_spins < 16 {
                std::thread::yield_now();
            } else {
                std::thread::sleep(Duration::from_micros(50));
            }
        }
    }
}
