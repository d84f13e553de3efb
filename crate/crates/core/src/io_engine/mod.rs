//! Asynchronous adjacency reads through a bounded page cache.
//!
//! Callers submit a batch of [`AdjacencyRequest`]s and consume a
//! [`Completions`] stream of decoded neighbor lists. Inside a batch each
//! `(vertex, direction)` is read once, every page it spans is charged as one
//! cache access, and missing pages are grouped into contiguous runs that
//! become single read requests for the I/O worker pool.
//!
//! Hit/miss decisions are made on the submitting thread in request order, so
//! with one compute worker the counters are reproducible run to run.

mod cache;
mod stats;

use std::collections::{HashMap, VecDeque};
use std::fs::File;
use std::ops::Deref;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use crossbeam_channel::{Receiver, Sender};

use crate::error::{Error, Result};
use crate::graph_store::{Direction, GraphHandle, VertexId, NEIGHBOR_BYTES};
use cache::{ClockCache, Lookup, PageBuf, PageData, PageKey};
pub use stats::{IoStats, IoStatsSnapshot, MemoryGauge};

pub const DEFAULT_PAGE_SIZE: usize = 4096;
pub const DEFAULT_CACHE_BYTES: usize = 64 << 20;
pub const CACHE_BYTES_ENV: &str = "SEMGRAPH_CACHE_BYTES";
const MAX_RUN_PAGES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IoConfig {
    /// Power of two, at least 8.
    pub page_size: usize,
    /// Rounded down to whole pages; at least one page is always kept.
    pub cache_bytes: usize,
    /// 0 performs reads inline on the submitting thread.
    pub io_threads: usize,
}

impl Default for IoConfig {
    fn default() -> Self {
        IoConfig {
            page_size: DEFAULT_PAGE_SIZE,
            cache_bytes: DEFAULT_CACHE_BYTES,
            io_threads: 2,
        }
    }
}

impl IoConfig {
    /// Defaults, with the cache size taken from `SEMGRAPH_CACHE_BYTES` if set.
    pub fn from_env() -> Result<Self> {
        let mut cfg = IoConfig::default();
        if let Ok(v) = std::env::var(CACHE_BYTES_ENV) {
            cfg.cache_bytes = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{CACHE_BYTES_ENV}={v:?} is not a byte count")))?;
        }
        Ok(cfg)
    }

    pub fn with_cache_bytes(mut self, bytes: usize) -> Self {
        self.cache_bytes = bytes;
        self
    }

    pub fn capacity_pages(&self) -> usize {
        (self.cache_bytes / self.page_size).max(1)
    }

    fn validate(&self) -> Result<()> {
        if !self.page_size.is_power_of_two() || self.page_size < NEIGHBOR_BYTES as usize {
            return Err(Error::Config(format!(
                "page size {} must be a power of two of at least {NEIGHBOR_BYTES}",
                self.page_size
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdjacencyRequest {
    pub vertex: VertexId,
    pub direction: Direction,
    /// Opaque completion target, echoed back in the [`Completion`].
    pub tag: u64,
}

/// A decoded neighbor list. Cheap to clone; the bytes are charged to the
/// engine's transient-memory gauge until the last clone is dropped.
#[derive(Clone)]
pub struct AdjacencyList(Arc<ListData>);

struct ListData {
    ids: Box<[VertexId]>,
    gauge: Option<Arc<MemoryGauge>>,
}

impl Drop for ListData {
    fn drop(&mut self) {
        if let Some(g) = &self.gauge {
            g.sub(self.ids.len() * NEIGHBOR_BYTES as usize);
        }
    }
}

impl AdjacencyList {
    pub fn from_vec(ids: Vec<VertexId>) -> Self {
        AdjacencyList(Arc::new(ListData {
            ids: ids.into_boxed_slice(),
            gauge: None,
        }))
    }

    fn tracked(ids: Vec<VertexId>, gauge: &Arc<MemoryGauge>) -> Self {
        gauge.add(ids.len() * NEIGHBOR_BYTES as usize);
        AdjacencyList(Arc::new(ListData {
            ids: ids.into_boxed_slice(),
            gauge: Some(Arc::clone(gauge)),
        }))
    }
}

impl Deref for AdjacencyList {
    type Target = [VertexId];
    fn deref(&self) -> &[VertexId] {
        &self.0.ids
    }
}

impl std::fmt::Debug for AdjacencyList {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.iter()).finish()
    }
}

#[derive(Debug, Clone)]
pub struct Completion {
    pub tag: u64,
    pub vertex: VertexId,
    pub direction: Direction,
    pub list: AdjacencyList,
}

struct ReadJob {
    graph: Arc<GraphHandle>,
    direction: Direction,
    first_page: u64,
    page_size: usize,
    bufs: Vec<Arc<PageBuf>>,
}

impl ReadJob {
    fn run(self) {
        let file = self.graph.adjacency_file(self.direction);
        let file_len = self.graph.adjacency_file_len(self.direction);
        let start = self.first_page * self.page_size as u64;
        let total = self.bufs.len() * self.page_size;
        let want = (file_len.saturating_sub(start) as usize).min(total);
        let mut bytes = vec![0u8; total];
        match read_exact_at(file, &mut bytes[..want], start) {
            Ok(()) => {
                for (buf, chunk) in self.bufs.iter().zip(bytes.chunks_exact(self.page_size)) {
                    buf.fill(Ok(chunk.to_vec().into_boxed_slice()));
                }
            }
            Err(e) => {
                for buf in &self.bufs {
                    buf.fill(Err((e.kind(), e.to_string())));
                }
            }
        }
    }
}

#[cfg(unix)]
fn read_exact_at(file: &File, buf: &mut [u8], offset: u64) -> std::io::Result<()> {
    std::os::unix::fs::FileExt::read_exact_at(file, buf, offset)
}

#[cfg(windows)]
fn read_exact_at(file: &File, mut buf: &mut [u8], mut offset: u64) -> std::io::Result<()> {
    use std::os::windows::fs::FileExt;
    while !buf.is_empty() {
        match file.seek_read(buf, offset)? {
            0 => return Err(std::io::ErrorKind::UnexpectedEof.into()),
            k => {
                buf = &mut buf[k..];
                offset += k as u64;
            }
        }
    }
    Ok(())
}

pub struct IoEngine {
    graph: Arc<GraphHandle>,
    config: IoConfig,
    cache: Mutex<ClockCache>,
    stats: Arc<IoStats>,
    transient: Arc<MemoryGauge>,
    jobs: Option<Sender<ReadJob>>,
    workers: Vec<JoinHandle<()>>,
}

impl std::fmt::Debug for IoEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IoEngine")
            .field("config", &self.config)
            .field("stats", &self.stats.snapshot())
            .finish()
    }
}

impl IoEngine {
    pub fn new(graph: Arc<GraphHandle>, config: IoConfig) -> Result<Self> {
        config.validate()?;
        let (jobs, workers) = if config.io_threads == 0 {
            (None, Vec::new())
        } else {
            let (tx, rx) = crossbeam_channel::unbounded::<ReadJob>();
            let workers = (0..config.io_threads)
                .map(|i| {
                    let rx: Receiver<ReadJob> = rx.clone();
                    std::thread::Builder::new()
                        .name(format!("semgraph-io-{i}"))
                        .spawn(move || {
                            for job in rx {
                                job.run();
                            }
                        })
                        .map_err(|e| Error::io("<io worker>", e))
                })
                .collect::<Result<Vec<_>>>()?;
            (Some(tx), workers)
        };
        Ok(IoEngine {
            cache: Mutex::new(ClockCache::new(config.capacity_pages(), config.page_size)),
            graph,
            config,
            stats: Arc::new(IoStats::default()),
            transient: Arc::new(MemoryGauge::default()),
            jobs,
            workers,
        })
    }

    pub fn graph(&self) -> &Arc<GraphHandle> {
        &self.graph
    }

    pub fn config(&self) -> &IoConfig {
        &self.config
    }

    pub fn stats(&self) -> &IoStats {
        &self.stats
    }

    pub fn snapshot(&self) -> IoStatsSnapshot {
        self.stats.snapshot()
    }

    /// Zeroes the counters and returns the values they held.
    pub fn reset_stats(&self) -> IoStatsSnapshot {
        self.stats.reset()
    }

    pub fn cache_capacity_bytes(&self) -> usize {
        self.config.capacity_pages() * self.config.page_size
    }

    pub fn peak_resident_cache_bytes(&self) -> usize {
        self.cache.lock().unwrap().peak_resident_bytes()
    }

    /// Bytes of decoded lists currently alive outside the cache.
    pub fn transient(&self) -> &MemoryGauge {
        &self.transient
    }

    /// Reads one list; a convenience over a single-request batch.
    pub fn read_adjacency(&self, vertex: VertexId, direction: Direction) -> Result<AdjacencyList> {
        let req = AdjacencyRequest {
            vertex,
            direction,
            tag: 0,
        };
        let mut c = self.request_adjacencies(&[req])?;
        c.next().expect("one completion per request").map(|c| c.list)
    }

    /// Submits a batch. Every request yields exactly one completion.
    pub fn request_adjacencies(&self, requests: &[AdjacencyRequest]) -> Result<Completions<'_>> {
        let g = &*self.graph;
        for r in requests {
            g.check_vertex(r.vertex)?;
            if r.direction == Direction::Both && g.is_directed() {
                return Err(Error::Config(
                    "adjacency requests on a directed graph must name in or out".into(),
                ));
            }
        }
        let ps = self.config.page_size as u64;
        let mut lists: Vec<ListJob> = Vec::new();
        let mut slot: HashMap<(VertexId, Direction), usize> = HashMap::new();
        for r in requests {
            let storage = g.storage_direction(r.direction);
            let i = *slot.entry((r.vertex, storage)).or_insert_with(|| {
                let (offset, len) = g.adjacency_span(r.vertex, storage);
                lists.push(ListJob {
                    vertex: r.vertex,
                    storage,
                    offset,
                    len,
                    pages: Vec::new(),
                    targets: Vec::new(),
                    done: false,
                });
                lists.len() - 1
            });
            lists[i].targets.push((r.tag, r.direction));
        }

        let mut misses: Vec<(PageKey, Arc<PageBuf>)> = Vec::new();
        let (mut accesses, mut hits) = (0u64, 0u64);
        {
            let mut cache = self.cache.lock().unwrap();
            for job in &mut lists {
                if job.len == 0 {
                    continue;
                }
                let file = file_code(job.storage);
                for page in job.offset / ps..=(job.offset + job.len - 1) / ps {
                    let key = PageKey { file, page };
                    accesses += 1;
                    let buf = match cache.lookup(key) {
                        Lookup::Hit(b) => {
                            hits += 1;
                            b
                        }
                        Lookup::Miss(b) | Lookup::Bypass(b) => {
                            misses.push((key, Arc::clone(&b)));
                            b
                        }
                    };
                    job.pages.push((key, buf));
                }
            }
        }
        IoStats::add(&self.stats.cache_accesses, accesses);
        IoStats::add(&self.stats.cache_hits, hits);

        misses.sort_by_key(|(k, _)| *k);
        let mut runs: Vec<ReadJob> = Vec::new();
        for (key, buf) in misses {
            match runs.last_mut() {
                Some(run)
                    if file_code(run.direction) == key.file
                        && run.first_page + run.bufs.len() as u64 == key.page
                        && run.bufs.len() < MAX_RUN_PAGES =>
                {
                    run.bufs.push(buf)
                }
                _ => runs.push(ReadJob {
                    graph: Arc::clone(&self.graph),
                    direction: if key.file == 0 { Direction::Out } else { Direction::In },
                    first_page: key.page,
                    page_size: self.config.page_size,
                    bufs: vec![buf],
                }),
            }
        }
        let pages: usize = runs.iter().map(|r| r.bufs.len()).sum();
        IoStats::add(&self.stats.read_requests_issued, runs.len() as u64);
        IoStats::add(&self.stats.bytes_read_from_disk, (pages as u64) * ps);
        for run in runs {
            match &self.jobs {
                Some(tx) => tx.send(run).expect("I/O workers outlive the engine"),
                None => run.run(),
            }
        }

        Ok(Completions {
            engine: self,
            pending: (0..lists.len()).collect(),
            lists,
            ordered: false,
            ready: VecDeque::new(),
        })
    }
}

impl Drop for IoEngine {
    fn drop(&mut self) {
        self.jobs.take();
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

fn file_code(storage: Direction) -> u8 {
    match storage {
        Direction::In => 1,
        _ => 0,
    }
}

struct ListJob {
    vertex: VertexId,
    storage: Direction,
    offset: u64,
    len: u64,
    pages: Vec<(PageKey, Arc<PageBuf>)>,
    targets: Vec<(u64, Direction)>,
    done: bool,
}

/// Stream of completions for one batch. Defaults to readiness order;
/// [`Completions::in_order`] switches to request order.
pub struct Completions<'a> {
    engine: &'a IoEngine,
    lists: Vec<ListJob>,
    pending: VecDeque<usize>,
    ordered: bool,
    ready: VecDeque<Result<Completion>>,
}

impl Completions<'_> {
    /// Yields completions in the order the (deduplicated) lists were first
    /// requested, blocking on each in turn.
    pub fn in_order(mut self) -> Self {
        self.ordered = true;
        self
    }

    pub fn len_remaining(&self) -> usize {
        self.ready.len()
            + self
                .pending
                .iter()
                .map(|&i| self.lists[i].targets.len())
                .sum::<usize>()
    }

    fn is_ready(job: &ListJob) -> bool {
        job.pages.iter().all(|(_, b)| b.try_get().is_some())
    }

    fn pick(&mut self) -> Option<usize> {
        if self.ordered {
            return self.pending.pop_front();
        }
        loop {
            let front = *self.pending.front()?;
            if let Some(pos) = self.pending.iter().position(|&i| Self::is_ready(&self.lists[i])) {
                return self.pending.remove(pos);
            }
            let job = &self.lists[front];
            if let Some((_, b)) = job.pages.iter().find(|(_, b)| b.try_get().is_none()) {
                b.wait();
            }
        }
    }

    fn assemble(&mut self, i: usize) {
        let ps = self.engine.config.page_size as u64;
        let job = &mut self.lists[i];
        let mut ids = Vec::with_capacity((job.len / NEIGHBOR_BYTES) as usize);
        let mut failure: Option<&(std::io::ErrorKind, String)> = None;
        let end = job.offset + job.len;
        for (key, buf) in &job.pages {
            let data: &PageData = buf.wait();
            match data {
                Ok(bytes) => {
                    let page_start = key.page * ps;
                    let lo = (job.offset.max(page_start) - page_start) as usize;
                    let hi = (end.min(page_start + ps) - page_start) as usize;
                    ids.extend(
                        bytes[lo..hi]
                            .chunks_exact(NEIGHBOR_BYTES as usize)
                            .map(|c| u64::from_le_bytes(c.try_into().unwrap())),
                    );
                }
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            }
        }
        let result = match failure {
            None => Ok(AdjacencyList::tracked(ids, &self.engine.transient)),
            Some((kind, msg)) => Err((*kind, msg.clone())),
        };
        {
            let mut cache = self.engine.cache.lock().unwrap();
            for (key, buf) in &job.pages {
                if result.is_err() {
                    cache.forget(*key, buf);
                } else {
                    cache.unpin(*key, buf);
                }
            }
        }
        job.done = true;
        job.pages.clear();
        for &(tag, direction) in &job.targets {
            self.ready.push_back(match &result {
                Ok(list) => Ok(Completion {
                    tag,
                    vertex: job.vertex,
                    direction,
                    list: list.clone(),
                }),
                Err((kind, msg)) => Err(Error::AdjacencyRead {
                    vertex: job.vertex,
                    source: std::io::Error::new(*kind, msg.clone()),
                }),
            });
        }
    }
}

impl Iterator for Completions<'_> {
    type Item = Result<Completion>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(c) = self.ready.pop_front() {
                return Some(c);
            }
            let i = self.pick()?;
            self.assemble(i);
        }
    }
}

impl Drop for Completions<'_> {
    fn drop(&mut self) {
        let mut cache = self.engine.cache.lock().unwrap();
        for job in self.lists.iter().filter(|j| !j.done) {
            for (key, buf) in &job.pages {
                cache.unpin(*key, buf);
            }
        }
    }
}
