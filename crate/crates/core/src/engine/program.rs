use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::mem::size_of;

use crossbeam_queue::SegQueue;

use super::frontier::Bitset;
use super::reduce::{Reduction, Value};
use crate::error::{Error, Result};
use crate::graph_store::{Direction, GraphHandle, VertexId};
use crate::io_engine::{AdjacencyList, MemoryGauge};

/// Upper bound on `size_of::<Message>()`, checked when a program is run.
pub const MAX_MESSAGE_BYTES: usize = 64;

/// A completed adjacency request, handed back to the vertex that issued it.
#[derive(Debug, Clone, Copy)]
pub struct Adjacency<'a> {
    pub target: VertexId,
    pub direction: Direction,
    pub list: &'a AdjacencyList,
}

/// A vertex-centric algorithm.
///
/// Vertex callbacks take `&self` and may read any global the program holds;
/// globals change only in [`VertexProgram::master`], which runs alone
/// between supersteps. Callbacks for one vertex never run concurrently.
pub trait VertexProgram: Sync + Sized {
    type State: Send;
    type Message: Clone + Send;

    /// Whether messages with equal [`combine_key`](Self::combine_key) to the
    /// same destination are merged before delivery.
    const COMBINES: bool = false;

    fn init(&self, v: VertexId) -> Self::State;

    fn on_activate(
        &self,
        v: VertexId,
        state: &mut Self::State,
        ctx: &mut Context<'_, Self>,
    ) -> Result<()>;

    fn on_adjacency(
        &self,
        _v: VertexId,
        _state: &mut Self::State,
        _adj: Adjacency<'_>,
        _ctx: &mut Context<'_, Self>,
    ) -> Result<()> {
        Ok(())
    }

    fn on_message(
        &self,
        _v: VertexId,
        _state: &mut Self::State,
        _msg: Self::Message,
        _ctx: &mut Context<'_, Self>,
    ) -> Result<()> {
        Ok(())
    }

    fn combine_key(&self, _msg: &Self::Message) -> u64 {
        0
    }

    fn combine(&self, _acc: &mut Self::Message, _msg: Self::Message) {}

    fn reductions(&self) -> Vec<Reduction> {
        Vec::new()
    }

    fn master(&mut self, _m: &mut Master<'_, Self::State>) -> Result<()> {
        Ok(())
    }

    /// Declared per-vertex state bound in bytes.
    fn state_bound(&self) -> usize {
        size_of::<Self::State>()
    }

    /// Bytes a state currently occupies, including owned heap data.
    fn state_bytes(&self, _state: &Self::State) -> usize {
        size_of::<Self::State>()
    }

    /// Bytes of program-global data (the O(n) or O(batch) arrays it keeps).
    fn global_bytes(&self) -> usize {
        0
    }
}

pub(crate) struct Outbox<M> {
    combined: HashMap<(VertexId, u64), M>,
    plain: Vec<(VertexId, M)>,
}

impl<M> Default for Outbox<M> {
    fn default() -> Self {
        Outbox {
            combined: HashMap::new(),
            plain: Vec::new(),
        }
    }
}

impl<M> Outbox<M> {
    /// Bytes charged per queued message outside a hash table.
    pub const ENTRY_BYTES: usize = size_of::<(VertexId, M)>();
    /// Hash-table entries carry the combine key and a control byte.
    const COMBINED_ENTRY_BYTES: usize = size_of::<(VertexId, u64, M)>() + 1;

    pub fn bytes(&self) -> usize {
        self.combined.len() * Self::COMBINED_ENTRY_BYTES + self.plain.len() * Self::ENTRY_BYTES
    }

    /// Entries sorted by destination then key; plain entries keep send order.
    pub fn drain_sorted(&mut self) -> Vec<(VertexId, u64, M)> {
        let mut out: Vec<(VertexId, u64, M)> =
            self.combined.drain().map(|((d, k), m)| (d, k, m)).collect();
        out.sort_unstable_by_key(|e| (e.0, e.1));
        let mut plain: Vec<(VertexId, u64, M)> =
            self.plain.drain(..).map(|(d, m)| (d, 0, m)).collect();
        plain.sort_by_key(|e| e.0);
        if out.is_empty() {
            return plain;
        }
        out.extend(plain);
        out
    }
}

pub(crate) struct AsyncQueues<M> {
    /// `queues[dst_partition][src_worker]`.
    pub queues: Vec<Vec<SegQueue<(VertexId, M)>>>,
    /// Queued messages plus busy workers; the superstep ends at zero.
    pub outstanding: std::sync::atomic::AtomicUsize,
    pub queued: std::sync::atomic::AtomicUsize,
    pub peak_queued: std::sync::atomic::AtomicUsize,
}

pub(crate) struct Shared<'a, P: VertexProgram> {
    pub program: &'a P,
    pub graph: &'a GraphHandle,
    pub superstep: usize,
    pub chunk: usize,
    pub next: &'a Bitset,
    pub reduced: Option<&'a [Value]>,
    pub slots: &'a [Reduction],
    pub async_queues: Option<&'a AsyncQueues<P::Message>>,
    pub transient: &'a MemoryGauge,
}

pub(crate) struct Local<M> {
    pub worker: usize,
    pub outboxes: Vec<Outbox<M>>,
    pub io_pending: Vec<(VertexId, VertexId, Direction)>,
    pub reduce: Vec<Value>,
    pub p2p: u64,
    pub multicast: u64,
}

impl<M> Local<M> {
    pub fn new(worker: usize, partitions: usize, slots: &[Reduction]) -> Self {
        Local {
            worker,
            outboxes: (0..partitions).map(|_| Outbox::default()).collect(),
            io_pending: Vec::new(),
            reduce: slots.iter().map(|s| s.identity).collect(),
            p2p: 0,
            multicast: 0,
        }
    }

    pub fn outbox_bytes(&self) -> usize {
        self.outboxes.iter().map(Outbox::bytes).sum()
    }
}

/// Per-callback handle through which a vertex sends messages, requests
/// adjacency lists, activates vertices and contributes to reductions.
pub struct Context<'a, P: VertexProgram> {
    pub(crate) shared: &'a Shared<'a, P>,
    pub(crate) local: &'a mut Local<P::Message>,
    pub(crate) vertex: VertexId,
}

impl<'a, P: VertexProgram> Context<'a, P> {
    /// The vertex whose callback is running.
    pub fn vertex(&self) -> VertexId {
        self.vertex
    }

    /// 0-based index of the running superstep.
    pub fn superstep(&self) -> usize {
        self.shared.superstep
    }

    pub fn graph(&self) -> &GraphHandle {
        self.shared.graph
    }

    pub fn num_vertices(&self) -> u64 {
        self.shared.graph.num_vertices()
    }

    pub fn degree(&self, v: VertexId, dir: Direction) -> Result<u64> {
        self.shared.graph.degree(v, dir)
    }

    /// Gauge for short-lived heap a callback holds beyond its state.
    pub fn transient(&self) -> &MemoryGauge {
        self.shared.transient
    }

    /// Queues a read of `target`'s list; the completion is delivered to the
    /// current vertex through `on_adjacency` within this superstep.
    pub fn request_adjacency(&mut self, target: VertexId, dir: Direction) -> Result<()> {
        self.shared.graph.check_vertex(target)?;
        self.local.io_pending.push((self.vertex, target, dir));
        Ok(())
    }

    pub fn send(&mut self, dst: VertexId, msg: P::Message) -> Result<()> {
        self.shared.graph.check_vertex(dst)?;
        self.local.p2p += 1;
        self.deliver(dst, msg);
        Ok(())
    }

    /// One multicast in the stats, one delivery per destination.
    pub fn multicast(&mut self, dsts: &[VertexId], msg: P::Message) -> Result<()> {
        for &d in dsts {
            self.shared.graph.check_vertex(d)?;
        }
        self.local.multicast += 1;
        if let Some((&last, rest)) = dsts.split_last() {
            for &d in rest {
                self.deliver(d, msg.clone());
            }
            self.deliver(last, msg);
        }
        Ok(())
    }

    fn deliver(&mut self, dst: VertexId, msg: P::Message) {
        let part = dst as usize / self.shared.chunk;
        if let Some(q) = self.shared.async_queues {
            use std::sync::atomic::Ordering;
            q.outstanding.fetch_add(1, Ordering::AcqRel);
            let now = q.queued.fetch_add(1, Ordering::AcqRel) + 1;
            q.peak_queued.fetch_max(now, Ordering::AcqRel);
            q.queues[part][self.local.worker].push((dst, msg));
            return;
        }
        let program = self.shared.program;
        let outbox = &mut self.local.outboxes[part];
        if P::COMBINES {
            match outbox.combined.entry((dst, program.combine_key(&msg))) {
                Entry::Occupied(mut e) => program.combine(e.get_mut(), msg),
                Entry::Vacant(e) => {
                    e.insert(msg);
                }
            }
        } else {
            outbox.plain.push((dst, msg));
        }
    }

    /// Marks `v` active for the next superstep. Idempotent.
    pub fn activate(&mut self, v: VertexId) -> Result<()> {
        self.shared.graph.check_vertex(v)?;
        self.shared.next.set(v as usize);
        Ok(())
    }

    pub fn reduce(&mut self, slot: usize, value: impl Into<Value>) -> Result<()> {
        let spec = self
            .shared
            .slots
            .get(slot)
            .ok_or_else(|| Error::Config(format!("no reduction slot {slot}")))?;
        spec.fold(&mut self.local.reduce[slot], value.into())
    }

    /// Result of `slot` from the previous superstep.
    pub fn reduced(&self, slot: usize) -> Result<Value> {
        match self.shared.reduced {
            Some(r) if slot < r.len() => Ok(r[slot]),
            Some(_) => Err(Error::Config(format!("no reduction slot {slot}"))),
            None => Err(Error::NotReady(slot)),
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::I64(v)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::F64(v)
    }
}

/// Exclusive view handed to [`VertexProgram::master`] after each barrier.
pub struct Master<'a, S> {
    pub(crate) states: &'a mut [S],
    pub(crate) reduced: &'a [Value],
    pub(crate) next: &'a Bitset,
    pub(crate) supersteps: usize,
    pub(crate) pending_messages: usize,
    pub(crate) halted: bool,
}

impl<S> Master<'_, S> {
    pub fn states(&self) -> &[S] {
        self.states
    }

    pub fn states_mut(&mut self) -> &mut [S] {
        self.states
    }

    pub fn reduced(&self, slot: usize) -> Value {
        self.reduced[slot]
    }

    /// Supersteps completed so far, including the one just finished.
    pub fn supersteps(&self) -> usize {
        self.supersteps
    }

    pub fn pending_messages(&self) -> usize {
        self.pending_messages
    }

    pub fn frontier_len(&self) -> usize {
        self.next.count()
    }

    pub fn activate(&mut self, v: VertexId) {
        self.next.set(v as usize);
    }

    pub fn activate_all(&mut self) {
        self.next.set_all();
    }

    pub fn activate_where(&mut self, mut pred: impl FnMut(VertexId, &S) -> bool) {
        for (v, s) in self.states.iter().enumerate() {
            if pred(v as VertexId, s) {
                self.next.set(v);
            }
        }
    }

    /// Ends the run after this barrier, discarding queued work.
    pub fn halt(&mut self) {
        self.halted = true;
    }
}
