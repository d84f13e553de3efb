//! Betweenness centrality by Brandes' method: a counting BFS from each
//! source, then backward propagation of dependencies
//! `δ(v) = Σ_{w: v ∈ pred(w)} σ_v/σ_w · (1 + δ(w))` level by level, with each
//! vertex adding its final `δ` to its score as it propagates.
//!
//! Up to 64 sources share one engine run. Each search moves through
//! BFS → BP → done on its own schedule: in `multi_sync` backward propagation
//! starts for every search at once after the deepest BFS ends, while in
//! `multi_async` a search starts propagating as soon as its own BFS ends, so
//! BFS and BP supersteps of different searches interleave and share reads.
//! Scores are over ordered pairs and unnormalized; endpoints are excluded.

use std::str::FromStr;

use serde::Serialize;

use super::{require_u32_ids, RunSummary};
use crate::engine::{
    Adjacency, Context, Engine, Initial, Master, Mode, ReduceOp, Reduction, RunConfig, VertexProgram,
};
use crate::error::Result;
use crate::graph_store::{Direction, VertexId};

const UNREACHED: u32 = u32::MAX;
pub const MAX_BATCH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BcVariant {
    /// One source per engine run.
    Uni,
    MultiSync,
    MultiAsync,
}

impl BcVariant {
    pub const ALL: [BcVariant; 3] = [BcVariant::Uni, BcVariant::MultiSync, BcVariant::MultiAsync];

    pub fn name(self) -> &'static str {
        match self {
            BcVariant::Uni => "uni",
            BcVariant::MultiSync => "multi_sync",
            BcVariant::MultiAsync => "multi_async",
        }
    }
}

impl FromStr for BcVariant {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        BcVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown betweenness variant {s:?} (uni, multi_sync, multi_async)"))
    }
}

#[derive(Debug, Clone)]
pub struct BcResult {
    pub centrality: Vec<f64>,
    /// Per source `s`, `Σ_v δ_s(v)`: the total dependency it contributed.
    pub per_source: Vec<f64>,
    pub summary: RunSummary,
}

pub fn betweenness(
    engine: &Engine,
    sources: &[VertexId],
    variant: BcVariant,
    run: &RunConfig,
) -> Result<BcResult> {
    let g = engine.graph();
    require_u32_ids(g, "betweenness")?;
    for &s in sources {
        g.check_vertex(s)?;
    }
    let batch = match variant {
        BcVariant::Uni => 1,
        _ => MAX_BATCH,
    };
    let run = run.clone().with_mode(Mode::Sync);
    let mut centrality = vec![0.0; g.num_vertices() as usize];
    let mut per_source = Vec::with_capacity(sources.len());
    let mut summary = RunSummary::default();
    for chunk in sources.chunks(batch) {
        let mut p = Bc {
            sources: chunk,
            lockstep: variant != BcVariant::MultiAsync,
            directed: g.is_directed(),
            phase: vec![Phase::Bfs; chunk.len()],
            level: vec![0; chunk.len()],
            acc: vec![0.0; chunk.len()],
        };
        let out = engine.run(&mut p, Initial::Vertices(chunk.to_vec()), &run)?;
        summary.absorb(&out);
        for (c, s) in centrality.iter_mut().zip(&out.states) {
            *c += s.bc;
        }
        per_source.extend(p.acc);
    }
    Ok(BcResult {
        centrality,
        per_source,
        summary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Bfs,
    /// BFS finished; waiting for the other searches (lockstep only).
    Waiting { depth: u32 },
    Bp,
    Done,
}

struct Bc<'a> {
    sources: &'a [VertexId],
    lockstep: bool,
    directed: bool,
    phase: Vec<Phase>,
    /// Level whose vertices propagate this superstep, for searches in BP.
    level: Vec<u32>,
    /// Per-search dependency totals, folded from reductions.
    acc: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    sigma: f64,
    delta: f64,
    dist: u32,
}

struct BcState {
    bc: f64,
    bfs_pending: u64,
    bp_pending: u64,
    slots: Box<[Slot]>,
}

#[derive(Debug, Clone, Copy)]
struct BcMsg {
    slot: u8,
    backward: bool,
    value: f64,
}

fn bits(mut mask: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        (mask != 0).then(|| {
            let i = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            i
        })
    })
}

impl Bc<'_> {
    fn max_level_slot(i: usize) -> usize {
        2 * i
    }

    fn acc_slot(i: usize) -> usize {
        2 * i + 1
    }

    /// Moves each `(search, level)` into BP at that level, or straight to
    /// done when there is nothing to propagate.
    fn start_bp(&mut self, starting: &[(usize, u32)]) {
        for &(i, level) in starting {
            if level == 0 {
                self.phase[i] = Phase::Done;
            } else {
                self.phase[i] = Phase::Bp;
                self.level[i] = level;
            }
        }
    }
}

impl VertexProgram for Bc<'_> {
    type State = BcState;
    type Message = BcMsg;
    const COMBINES: bool = true;

    fn init(&self, v: VertexId) -> BcState {
        let mut slots = vec![
            Slot {
                sigma: 0.0,
                delta: 0.0,
                dist: UNREACHED,
            };
            self.sources.len()
        ]
        .into_boxed_slice();
        let mut pending = 0;
        for (i, &s) in self.sources.iter().enumerate() {
            if s == v {
                slots[i].dist = 0;
                slots[i].sigma = 1.0;
                pending |= 1 << i;
            }
        }
        BcState {
            bc: 0.0,
            bfs_pending: pending,
            bp_pending: 0,
            slots,
        }
    }

    fn on_activate(&self, v: VertexId, s: &mut BcState, ctx: &mut Context<'_, Self>) -> Result<()> {
        for i in bits(s.bfs_pending) {
            ctx.reduce(Self::max_level_slot(i), 2 * i64::from(s.slots[i].dist))?;
        }
        for (i, phase) in self.phase.iter().enumerate() {
            let slot = s.slots[i];
            if *phase == Phase::Bp && slot.dist == self.level[i] {
                s.bc += slot.delta;
                ctx.reduce(Self::acc_slot(i), slot.delta)?;
                if self.level[i] >= 2 {
                    s.bp_pending |= 1 << i;
                }
            }
        }
        if self.directed {
            if s.bfs_pending != 0 {
                ctx.request_adjacency(v, Direction::Out)?;
            }
            if s.bp_pending != 0 {
                ctx.request_adjacency(v, Direction::In)?;
            }
        } else if s.bfs_pending | s.bp_pending != 0 {
            ctx.request_adjacency(v, Direction::Out)?;
        }
        Ok(())
    }

    fn on_adjacency(
        &self,
        _v: VertexId,
        s: &mut BcState,
        adj: Adjacency<'_>,
        ctx: &mut Context<'_, Self>,
    ) -> Result<()> {
        let forward = !self.directed || adj.direction == Direction::Out;
        let backward = !self.directed || adj.direction == Direction::In;
        if forward {
            for i in bits(std::mem::take(&mut s.bfs_pending)) {
                if !adj.list.is_empty() {
                    let msg = BcMsg {
                        slot: i as u8,
                        backward: false,
                        value: s.slots[i].sigma,
                    };
                    ctx.multicast(adj.list, msg)?;
                    ctx.reduce(Self::max_level_slot(i), 2 * i64::from(s.slots[i].dist) + 1)?;
                }
            }
        }
        if backward {
            for i in bits(std::mem::take(&mut s.bp_pending)) {
                let slot = s.slots[i];
                let msg = BcMsg {
                    slot: i as u8,
                    backward: true,
                    value: (1.0 + slot.delta) / slot.sigma,
                };
                if !adj.list.is_empty() {
                    ctx.multicast(adj.list, msg)?;
                }
            }
        }
        Ok(())
    }

    fn on_message(&self, _v: VertexId, s: &mut BcState, msg: BcMsg, ctx: &mut Context<'_, Self>) -> Result<()> {
        let i = msg.slot as usize;
        let slot = &mut s.slots[i];
        if msg.backward {
            // Only predecessors, one level up, take part.
            if self.phase[i] == Phase::Bp && slot.dist == self.level[i] {
                slot.delta += slot.sigma * msg.value;
            }
        } else {
            let level = ctx.superstep() as u32;
            if slot.dist == UNREACHED {
                slot.dist = level;
                slot.sigma = msg.value;
                s.bfs_pending |= 1 << i;
            } else if slot.dist == level {
                slot.sigma += msg.value;
            }
        }
        Ok(())
    }

    fn combine_key(&self, msg: &BcMsg) -> u64 {
        u64::from(msg.slot) << 1 | u64::from(msg.backward)
    }

    fn combine(&self, acc: &mut BcMsg, msg: BcMsg) {
        acc.value += msg.value;
    }

    fn reductions(&self) -> Vec<Reduction> {
        (0..self.sources.len())
            .flat_map(|_| [Reduction::new_i64(ReduceOp::Max), Reduction::new_f64(ReduceOp::Sum)])
            .collect()
    }

    fn master(&mut self, m: &mut Master<'_, BcState>) -> Result<()> {
        let finished = (m.supersteps() - 1) as i64;
        let mut bfs_done: Vec<(usize, u32)> = Vec::new();
        for i in 0..self.sources.len() {
            match self.phase[i] {
                Phase::Bfs => {
                    // Level keys are `2·dist`, plus one once the vertex has
                    // forwarded. Nothing at the level just processed means
                    // the previous level was the deepest; vertices there
                    // that forwarded nothing end the search at this level.
                    let key = m.reduced(Self::max_level_slot(i)).as_i64();
                    if key < 2 * finished {
                        bfs_done.push((i, (finished - 1).max(0) as u32));
                    } else if key == 2 * finished {
                        bfs_done.push((i, finished as u32));
                    }
                }
                Phase::Bp => {
                    self.acc[i] += m.reduced(Self::acc_slot(i)).as_f64();
                    self.level[i] -= 1;
                    if self.level[i] == 0 {
                        self.phase[i] = Phase::Done;
                    }
                }
                Phase::Waiting { .. } | Phase::Done => {}
            }
        }
        if self.lockstep {
            for &(i, depth) in &bfs_done {
                self.phase[i] = Phase::Waiting { depth };
            }
            if self.phase.iter().all(|p| matches!(p, Phase::Waiting { .. } | Phase::Done)) {
                let waiting: Vec<usize> =
                    (0..self.phase.len()).filter(|&i| matches!(self.phase[i], Phase::Waiting { .. })).collect();
                let deepest = waiting
                    .iter()
                    .map(|&i| match self.phase[i] {
                        Phase::Waiting { depth } => depth,
                        _ => 0,
                    })
                    .max()
                    .unwrap_or(0);
                let starting: Vec<(usize, u32)> = waiting.into_iter().map(|i| (i, deepest)).collect();
                self.start_bp(&starting);
            }
        } else {
            self.start_bp(&bfs_done);
        }

        let active: Vec<(usize, u32)> = (0..self.phase.len())
            .filter(|&i| self.phase[i] == Phase::Bp)
            .map(|i| (i, self.level[i]))
            .collect();
        if !active.is_empty() {
            m.activate_where(|_, s| active.iter().any(|&(i, l)| s.slots[i].dist == l));
        }
        Ok(())
    }

    fn state_bound(&self) -> usize {
        std::mem::size_of::<BcState>() + self.sources.len() * std::mem::size_of::<Slot>()
    }

    fn state_bytes(&self, s: &BcState) -> usize {
        std::mem::size_of::<BcState>() + s.slots.len() * std::mem::size_of::<Slot>()
    }

    fn global_bytes(&self) -> usize {
        self.sources.len() * (std::mem::size_of::<Phase>() + 4 + 8)
    }
}
