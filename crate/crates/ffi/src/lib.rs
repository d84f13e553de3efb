//! C ABI over the semgraph engine.
//!
//! Every function returns a [`SemgraphStatus`]; on failure the message is
//! kept per thread and read with [`semgraph_last_error`]. Results go into
//! caller-owned buffers indexed by vertex id. A session runs one algorithm
//! at a time: a call made while another is in flight on the same session
//! returns `SEMGRAPH_BUSY` without touching the session.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};

use semgraph::algorithms::{
    betweenness, coreness, estimate_diameter, louvain, modularity, pagerank, triangle_count, BcVariant,
    CorenessConfig, DiameterVariant, LouvainConfig, PageRankConfig, PageRankVariant, TriangleConfig,
    TriangleLevel,
};
use semgraph::graph_store::{ingest_edge_list_file, IngestOptions};
use semgraph::{Engine, Error, IoConfig, RunConfig, VertexId};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SemgraphStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Domain = 5,
    Busy = 6,
    BufferTooSmall = 7,
    Runtime = 8,
    Panic = 9,
}

/// An opened graph plus the engine configuration used for every call.
pub struct SemgraphSession {
    engine: Engine,
    run: RunConfig,
    busy: AtomicBool,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

struct Failure(SemgraphStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } | Error::AdjacencyRead { .. } => SemgraphStatus::Io,
            Error::Parse { .. }
            | Error::BadMagic { .. }
            | Error::BadVersion(_)
            | Error::Truncated { .. }
            | Error::Inconsistent(_) => SemgraphStatus::Format,
            Error::Domain(_) => SemgraphStatus::Domain,
            Error::Config(_) | Error::VertexOutOfRange { .. } => SemgraphStatus::InvalidArgument,
            _ => SemgraphStatus::Runtime,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(SemgraphStatus::InvalidArgument, msg.into())
}

type Outcome = Result<(), Failure>;

/// Runs `f`, turning errors and panics into a status plus a stored message.
fn guard(f: impl FnOnce() -> Outcome) -> SemgraphStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SemgraphStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SemgraphStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(SemgraphStatus::NullArgument, format!("{what} is null"))
}

/// # Safety
/// `p` is null or a valid NUL-terminated string.
unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not UTF-8")))
}

/// Null selects `default`.
unsafe fn variant_arg(p: *const c_char, default: &str) -> Result<&str, Failure> {
    if p.is_null() {
        Ok(default)
    } else {
        str_arg(p, "variant")
    }
}

/// # Safety
/// `p` is null or valid for `len` writes.
unsafe fn out_slice<'a, T>(p: *mut T, len: usize, need: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    if len < need {
        return Err(Failure(
            SemgraphStatus::BufferTooSmall,
            format!("{what} holds {len} entries, {need} needed"),
        ));
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Marks the session busy for the duration of one call.
struct Busy<'a>(&'a AtomicBool);

impl Drop for Busy<'_> {
    fn drop(&mut self) {
        self.0.store(false, Ordering::Release);
    }
}

/// # Safety
/// `s` is null or a live session from [`semgraph_open`].
unsafe fn session<'a>(s: *const SemgraphSession) -> Result<(&'a SemgraphSession, Busy<'a>), Failure> {
    let s = s.as_ref().ok_or_else(|| null("session"))?;
    if s.busy.swap(true, Ordering::AcqRel) {
        return Err(Failure(SemgraphStatus::Busy, "session is running another call".into()));
    }
    Ok((s, Busy(&s.busy)))
}

fn num_vertices(s: &SemgraphSession) -> usize {
    s.engine.graph().num_vertices() as usize
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to fit) and returns the full message length in
/// bytes, excluding the terminator. `buf` may be null to query the length.
///
/// # Safety
/// `buf` is null or valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn semgraph_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = e.len().min(len - 1);
            std::ptr::copy_nonoverlapping(e.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        e.len()
    })
}

/// Converts a text edge list into graph files at `out`.
///
/// # Safety
/// `edgelist` and `out` are NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn semgraph_ingest(edgelist: *const c_char, out: *const c_char, directed: bool) -> SemgraphStatus {
    guard(|| {
        let edgelist = str_arg(edgelist, "edgelist")?;
        let out = str_arg(out, "out")?;
        ingest_edge_list_file(edgelist, out, IngestOptions { directed })?;
        Ok(())
    })
}

/// Opens the graph at `path`. `cache_bytes` 0 selects the default cache
/// size; `workers` 0 selects one worker.
///
/// # Safety
/// `path` is a NUL-terminated string; `out` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn semgraph_open(
    path: *const c_char,
    cache_bytes: usize,
    workers: usize,
    out: *mut *mut SemgraphSession,
) -> SemgraphStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let path = PathBuf::from(str_arg(path, "path")?);
        let mut io = IoConfig::default();
        if cache_bytes > 0 {
            io.cache_bytes = cache_bytes;
        }
        let engine = Engine::open(&path, io)?;
        let session = SemgraphSession {
            engine,
            run: RunConfig::default().with_workers(workers.max(1)),
            busy: AtomicBool::new(false),
        };
        *out = Box::into_raw(Box::new(session));
        Ok(())
    })
}

/// Releases a session; null is ignored.
///
/// # Safety
/// `s` is null or a session from [`semgraph_open`] not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn semgraph_close(s: *mut SemgraphSession) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// # Safety
/// `s` is a live session; the out pointers are valid for one write each.
#[no_mangle]
pub unsafe extern "C" fn semgraph_counts(
    s: *const SemgraphSession,
    vertices: *mut u64,
    edges: *mut u64,
    directed: *mut bool,
) -> SemgraphStatus {
    guard(|| {
        let (s, _busy) = session(s)?;
        let g = s.engine.graph();
        *out_ref(vertices, "vertices")? = g.num_vertices();
        *out_ref(edges, "edges")? = g.num_edges();
        *out_ref(directed, "directed")? = g.is_directed();
        Ok(())
    })
}

/// Writes the edge-list id of every vertex into `out[0..n]`.
///
/// # Safety
/// `s` is a live session; `out` is valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn semgraph_original_ids(s: *const SemgraphSession, out: *mut u64, len: usize) -> SemgraphStatus {
    guard(|| {
        let (s, _busy) = session(s)?;
        let out = out_slice(out, len, num_vertices(s), "out")?;
        out.copy_from_slice(&s.engine.graph().original_ids()?);
        Ok(())
    })
}

/// PageRank into `ranks[0..n]`. `variant` is "push" or "pull" (null: push);
/// non-positive `damping`, `threshold` or `max_iterations` keep defaults.
///
/// # Safety
/// `s` is a live session; `variant` is null or NUL-terminated; `ranks` is
/// valid for `len` writes; `iterations` is null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn semgraph_pagerank(
    s: *const SemgraphSession,
    variant: *const c_char,
    damping: f64,
    threshold: f64,
    max_iterations: usize,
    ranks: *mut f64,
    len: usize,
    iterations: *mut usize,
) -> SemgraphStatus {
    guard(|| {
        let (s, _busy) = session(s)?;
        let variant: PageRankVariant = variant_arg(variant, "push")?.parse().map_err(invalid)?;
        let out = out_slice(ranks, len, num_vertices(s), "ranks")?;
        let mut cfg = PageRankConfig::default();
        if damping > 0.0 {
            cfg.damping = damping;
        }
        if threshold > 0.0 {
            cfg.delta_threshold = threshold;
        }
        if max_iterations > 0 {
            cfg.max_iterations = max_iterations;
        }
        let r = pagerank(&s.engine, &cfg, variant, &s.run)?;
        out.copy_from_slice(&r.ranks);
        if let Some(it) = iterations.as_mut() {
            *it = r.iterations;
        }
        Ok(())
    })
}

/// Diameter lower bound from `num_bfs` search rounds of `batch` sources.
/// `variant` is "uni" or "multi" (null: multi).
///
/// # Safety
/// `s` is a live session; `variant` is null or NUL-terminated; `estimate`
/// is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn semgraph_diameter(
    s: *const SemgraphSession,
    variant: *const c_char,
    num_bfs: usize,
    batch: usize,
    estimate: *mut u32,
) -> SemgraphStatus {
    guard(|| {
        let (s, _busy) = session(s)?;
        let variant: DiameterVariant = variant_arg(variant, "multi")?.parse().map_err(invalid)?;
        let out = out_ref(estimate, "estimate")?;
        *out = estimate_diameter(&s.engine, num_bfs, batch, variant, &s.run)?.estimate;
        Ok(())
    })
}

/// Betweenness from the given sources (null `sources`: every vertex) into
/// `out[0..n]`. `variant` is "uni", "multi_sync" or "multi_async" (null:
/// multi_async).
///
/// # Safety
/// `s` is a live session; `variant` is null or NUL-terminated; `sources` is
/// null or valid for `num_sources` reads; `out` is valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn semgraph_betweenness(
    s: *const SemgraphSession,
    variant: *const c_char,
    sources: *const u64,
    num_sources: usize,
    out: *mut f64,
    len: usize,
) -> SemgraphStatus {
    guard(|| {
        let (s, _busy) = session(s)?;
        let variant: BcVariant = variant_arg(variant, "multi_async")?.parse().map_err(invalid)?;
        let n = num_vertices(s);
        let out = out_slice(out, len, n, "out")?;
        let sources: Vec<VertexId> = if sources.is_null() {
            (0..n as VertexId).collect()
        } else {
            std::slice::from_raw_parts(sources, num_sources).to_vec()
        };
        let r = betweenness(&s.engine, &sources, variant, &s.run)?;
        out.copy_from_slice(&r.centrality);
        Ok(())
    })
}

/// Core numbers into `out[0..n]`. `variant` is "naive", "pruning",
/// "hybrid" or "optimized" (null: optimized).
///
/// # Safety
/// `s` is a live session; `variant` is null or NUL-terminated; `out` is
/// valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn semgraph_coreness(
    s: *const SemgraphSession,
    variant: *const c_char,
    out: *mut u32,
    len: usize,
) -> SemgraphStatus {
    guard(|| {
        let (s, _busy) = session(s)?;
        let cfg = CorenessConfig::by_name(variant_arg(variant, "optimized")?).map_err(invalid)?;
        let out = out_slice(out, len, num_vertices(s), "out")?;
        out.copy_from_slice(&coreness(&s.engine, &cfg, &s.run)?.cores);
        Ok(())
    })
}

/// Triangle total, plus per-vertex counts into `per_vertex[0..n]` unless it
/// is null. `variant` is "scan", "binsearch", "hash" or "revhash" (null:
/// revhash).
///
/// # Safety
/// `s` is a live session; `variant` is null or NUL-terminated;
/// `per_vertex` is null or valid for `len` writes; `total` is valid for one
/// write.
#[no_mangle]
pub unsafe extern "C" fn semgraph_triangles(
    s: *const SemgraphSession,
    variant: *const c_char,
    per_vertex: *mut u64,
    len: usize,
    total: *mut u64,
) -> SemgraphStatus {
    guard(|| {
        let (s, _busy) = session(s)?;
        let level: TriangleLevel = variant_arg(variant, "revhash")?.parse().map_err(invalid)?;
        let total = out_ref(total, "total")?;
        let per_vertex = if per_vertex.is_null() {
            None
        } else {
            Some(out_slice(per_vertex, len, num_vertices(s), "per_vertex")?)
        };
        let r = triangle_count(&s.engine, &TriangleConfig::with_level(level), &s.run)?;
        *total = r.total;
        if let Some(out) = per_vertex {
            out.copy_from_slice(&r.per_vertex);
        }
        Ok(())
    })
}

/// Community labels (smallest member id) into `communities[0..n]` and the
/// modularity after each level into `q[0..levels]`, with `levels` set to the
/// number of levels recorded. `max_levels` 0 keeps the default.
///
/// # Safety
/// `s` is a live session; `communities` is valid for `len` writes; `q` is
/// valid for `q_len` writes; `levels` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn semgraph_louvain(
    s: *const SemgraphSession,
    max_levels: usize,
    communities: *mut u64,
    len: usize,
    q: *mut f64,
    q_len: usize,
    levels: *mut usize,
) -> SemgraphStatus {
    guard(|| {
        let (s, _busy) = session(s)?;
        let communities = out_slice(communities, len, num_vertices(s), "communities")?;
        let levels = out_ref(levels, "levels")?;
        let mut cfg = LouvainConfig::default();
        if max_levels > 0 {
            cfg.max_levels = max_levels;
        }
        let r = louvain(&s.engine, &cfg, &s.run)?;
        *levels = r.q_per_level.len();
        let q = out_slice(q, q_len, r.q_per_level.len(), "q")?;
        q.copy_from_slice(&r.q_per_level);
        communities.copy_from_slice(&r.communities);
        Ok(())
    })
}

/// Modularity of the partition `assignment[0..n]`.
///
/// # Safety
/// `s` is a live session; `assignment` is valid for `len` reads; `q` is
/// valid for one write.
#[no_mangle]
pub unsafe extern "C" fn semgraph_modularity(
    s: *const SemgraphSession,
    assignment: *const u64,
    len: usize,
    q: *mut f64,
) -> SemgraphStatus {
    guard(|| {
        let (s, _busy) = session(s)?;
        if assignment.is_null() {
            return Err(null("assignment"));
        }
        let q = out_ref(q, "q")?;
        let assignment = std::slice::from_raw_parts(assignment, len);
        *q = modularity(&s.engine, assignment, &s.run)?.q;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn busy_session_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path().join("g");
        semgraph::generators::ingest_edges(&[(0, 1), (1, 2)], &base, false).unwrap();
        let engine = Engine::open(&base, IoConfig::default()).unwrap();
        let s = SemgraphSession {
            engine,
            run: RunConfig::default(),
            busy: AtomicBool::new(true),
        };
        let mut out = [0u32; 3];
        let status = unsafe { semgraph_coreness(&s, std::ptr::null(), out.as_mut_ptr(), 3) };
        assert_eq!(status, SemgraphStatus::Busy);
        assert!(s.busy.load(Ordering::Acquire), "a rejected call leaves the owner's flag set");
        s.busy.store(false, Ordering::Release);
        let status = unsafe { semgraph_coreness(&s, std::ptr::null(), out.as_mut_ptr(), 3) };
        assert_eq!(status, SemgraphStatus::Ok);
        assert_eq!(out, [1, 1, 1]);
        assert!(!s.busy.load(Ordering::Acquire));
    }
}
