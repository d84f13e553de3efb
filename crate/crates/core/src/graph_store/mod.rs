//! On-disk graph format and the in-memory vertex index.
//!
//! A graph named `g` lives in a handful of sibling files:
//!
//! | file      | contents                                                     |
//! |-----------|--------------------------------------------------------------|
//! | `g.gyh`   | 40-byte header: `"SEMG"`, 4 pad bytes, version, n, m, flags  |
//! | `g.gyi`   | one index record per vertex, in vertex order                 |
//! | `g.adj`   | out-adjacency lists, little-endian `u64` neighbor ids        |
//! | `g.iadj`  | in-adjacency lists (directed graphs only)                    |
//! | `g.ids`   | original id of each dense vertex, little-endian `u64`        |
//!
//! An index record is 16 bytes per direction: `offset: u64`, `degree: u32`,
//! and four reserved zero bytes. Directed graphs carry two such blocks per
//! record (out, then in). Only the index is ever loaded into memory; the
//! adjacency files are read through [`crate::io_engine`].

mod ingest;

use std::fs::{File, OpenOptions};
use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::SystemTime;

pub use ingest::{ingest_edge_list, ingest_edge_list_file, IngestOptions};

use crate::error::{Error, Result};

pub type VertexId = u64;

pub const MAGIC: [u8; 4] = *b"SEMG";
pub const FORMAT_VERSION: u64 = 1;
pub const HEADER_BYTES: usize = 40;
pub const NEIGHBOR_BYTES: u64 = 8;
const INDEX_BLOCK_BYTES: usize = 16;

pub const FLAG_DIRECTED: u64 = 1;

/// Which adjacency of a vertex to consult.
///
/// For undirected graphs `In` and `Out` name the same list and `Both` is its
/// length (not twice it).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    In,
    Out,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphHeader {
    pub version: u64,
    pub num_vertices: u64,
    pub num_edges: u64,
    pub flags: u64,
}

impl GraphHeader {
    pub fn is_directed(&self) -> bool {
        self.flags & FLAG_DIRECTED != 0
    }

    pub fn to_bytes(&self) -> [u8; HEADER_BYTES] {
        let mut buf = [0u8; HEADER_BYTES];
        buf[0..4].copy_from_slice(&MAGIC);
        buf[8..16].copy_from_slice(&self.version.to_le_bytes());
        buf[16..24].copy_from_slice(&self.num_vertices.to_le_bytes());
        buf[24..32].copy_from_slice(&self.num_edges.to_le_bytes());
        buf[32..40].copy_from_slice(&self.flags.to_le_bytes());
        buf
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        if buf.len() != HEADER_BYTES {
            return Err(Error::Truncated {
                what: "header",
                expected: HEADER_BYTES as u64,
                found: buf.len() as u64,
            });
        }
        let magic: [u8; 4] = buf[0..4].try_into().unwrap();
        if magic != MAGIC {
            return Err(Error::BadMagic { found: magic });
        }
        let word = |at: usize| u64::from_le_bytes(buf[at..at + 8].try_into().unwrap());
        let header = GraphHeader {
            version: word(8),
            num_vertices: word(16),
            num_edges: word(24),
            flags: word(32),
        };
        if header.version != FORMAT_VERSION {
            return Err(Error::BadVersion(header.version));
        }
        if header.flags & !FLAG_DIRECTED != 0 {
            return Err(Error::Inconsistent(format!(
                "unknown header flags {:#x}",
                header.flags
            )));
        }
        Ok(header)
    }
}

/// Paths of the files making up one graph.
#[derive(Debug, Clone)]
pub struct GraphPaths {
    base: PathBuf,
}

impl GraphPaths {
    /// `base` may be the bare graph name or the path of its `.gyh` file.
    pub fn new(base: impl AsRef<Path>) -> Self {
        let base = base.as_ref();
        let base = if base.extension().is_some_and(|e| e == "gyh") {
            base.with_extension("")
        } else {
            base.to_path_buf()
        };
        GraphPaths { base }
    }

    fn with_suffix(&self, suffix: &str) -> PathBuf {
        let mut s = self.base.clone().into_os_string();
        s.push(suffix);
        PathBuf::from(s)
    }

    pub fn base(&self) -> &Path {
        &self.base
    }
    pub fn header(&self) -> PathBuf {
        self.with_suffix(".gyh")
    }
    pub fn index(&self) -> PathBuf {
        self.with_suffix(".gyi")
    }
    pub fn out_adjacency(&self) -> PathBuf {
        self.with_suffix(".adj")
    }
    pub fn in_adjacency(&self) -> PathBuf {
        self.with_suffix(".iadj")
    }
    pub fn ids(&self) -> PathBuf {
        self.with_suffix(".ids")
    }
}

/// O(n) in-memory map from vertex id to degree and adjacency byte offset.
#[derive(Debug, Clone, Default)]
pub struct VertexIndex {
    out_offsets: Vec<u64>,
    out_degrees: Vec<u32>,
    in_offsets: Vec<u64>,
    in_degrees: Vec<u32>,
}

impl VertexIndex {
    pub fn len(&self) -> usize {
        self.out_degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.out_degrees.is_empty()
    }

    pub fn record_bytes(directed: bool) -> usize {
        if directed {
            2 * INDEX_BLOCK_BYTES
        } else {
            INDEX_BLOCK_BYTES
        }
    }

    /// Bytes held by the index arrays.
    pub fn memory_bytes(&self) -> usize {
        self.out_offsets.capacity() * 8
            + self.out_degrees.capacity() * 4
            + self.in_offsets.capacity() * 8
            + self.in_degrees.capacity() * 4
    }

    fn parse(bytes: &[u8], n: usize, directed: bool) -> Result<Self> {
        let rec = Self::record_bytes(directed);
        let mut index = VertexIndex {
            out_offsets: Vec::with_capacity(n),
            out_degrees: Vec::with_capacity(n),
            in_offsets: Vec::with_capacity(if directed { n } else { 0 }),
            in_degrees: Vec::with_capacity(if directed { n } else { 0 }),
        };
        for (v, chunk) in bytes.chunks_exact(rec).enumerate() {
            let (off, deg) = parse_block(&chunk[..INDEX_BLOCK_BYTES], v)?;
            index.out_offsets.push(off);
            index.out_degrees.push(deg);
            if directed {
                let (off, deg) = parse_block(&chunk[INDEX_BLOCK_BYTES..], v)?;
                index.in_offsets.push(off);
                index.in_degrees.push(deg);
            }
        }
        Ok(index)
    }

    pub(crate) fn encode_block(offset: u64, degree: u32) -> [u8; INDEX_BLOCK_BYTES] {
        let mut b = [0u8; INDEX_BLOCK_BYTES];
        b[0..8].copy_from_slice(&offset.to_le_bytes());
        b[8..12].copy_from_slice(&degree.to_le_bytes());
        b
    }

    fn lists(&self, dir: Direction) -> (&[u64], &[u32]) {
        match dir {
            Direction::In if !self.in_degrees.is_empty() => (&self.in_offsets, &self.in_degrees),
            _ => (&self.out_offsets, &self.out_degrees),
        }
    }

    /// Checks offsets against degrees and the adjacency file length.
    fn check_layout(&self, dir: Direction, file_len: u64) -> Result<u64> {
        let (offsets, degrees) = self.lists(dir);
        let mut expected = 0u64;
        let mut sum = 0u64;
        for (v, (&off, &deg)) in offsets.iter().zip(degrees).enumerate() {
            if off != expected {
                return Err(Error::Inconsistent(format!(
                    "{dir:?} offset of vertex {v} is {off}, expected {expected}"
                )));
            }
            expected = off + u64::from(deg) * NEIGHBOR_BYTES;
            sum += u64::from(deg);
        }
        if expected != file_len {
            return Err(Error::Inconsistent(format!(
                "{dir:?} index ends at byte {expected} but adjacency file has {file_len} bytes"
            )));
        }
        Ok(sum)
    }
}

fn parse_block(b: &[u8], v: usize) -> Result<(u64, u32)> {
    let off = u64::from_le_bytes(b[0..8].try_into().unwrap());
    let deg = u32::from_le_bytes(b[8..12].try_into().unwrap());
    if b[12..16] != [0; 4] {
        return Err(Error::Inconsistent(format!(
            "reserved bytes of index record {v} are not zero"
        )));
    }
    Ok((off, deg))
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Fingerprint {
    path: PathBuf,
    len: u64,
    modified: Option<SystemTime>,
}

impl Fingerprint {
    fn of(path: &Path) -> Result<Self> {
        let meta = std::fs::metadata(path).map_err(|e| Error::io(path, e))?;
        Ok(Fingerprint {
            path: path.to_path_buf(),
            len: meta.len(),
            modified: meta.modified().ok(),
        })
    }
}

/// An opened graph: validated header, loaded index, and read-only handles to
/// the adjacency files. Immutable and shareable across threads.
#[derive(Debug)]
pub struct GraphHandle {
    paths: GraphPaths,
    header: GraphHeader,
    index: VertexIndex,
    out_adj: File,
    in_adj: Option<File>,
    fingerprints: Vec<Fingerprint>,
    adjacency_writes: AtomicU64,
}

/// Opens and validates a graph previously written by [`ingest_edge_list`].
pub fn open_graph(path: impl AsRef<Path>) -> Result<GraphHandle> {
    let paths = GraphPaths::new(path);

    let header_path = paths.header();
    let mut raw = Vec::with_capacity(HEADER_BYTES);
    File::open(&header_path)
        .and_then(|mut f| f.read_to_end(&mut raw))
        .map_err(|e| Error::io(&header_path, e))?;
    let header = GraphHeader::from_bytes(&raw)?;
    let directed = header.is_directed();
    let n = usize::try_from(header.num_vertices)
        .map_err(|_| Error::Inconsistent("vertex count exceeds address space".into()))?;

    let index_path = paths.index();
    let index_bytes = std::fs::read(&index_path).map_err(|e| Error::io(&index_path, e))?;
    let expected = (n as u64) * VertexIndex::record_bytes(directed) as u64;
    if index_bytes.len() as u64 != expected {
        return Err(Error::Truncated {
            what: "index",
            expected,
            found: index_bytes.len() as u64,
        });
    }
    let index = VertexIndex::parse(&index_bytes, n, directed)?;
    drop(index_bytes);

    let open_ro = |p: &Path| {
        OpenOptions::new()
            .read(true)
            .open(p)
            .map_err(|e| Error::io(p, e))
    };
    let out_path = paths.out_adjacency();
    let out_adj = open_ro(&out_path)?;
    let out_fp = Fingerprint::of(&out_path)?;
    let out_sum = index.check_layout(Direction::Out, out_fp.len)?;
    let mut fingerprints = vec![out_fp];

    let in_adj = if directed {
        let in_path = paths.in_adjacency();
        let f = open_ro(&in_path)?;
        let fp = Fingerprint::of(&in_path)?;
        let in_sum = index.check_layout(Direction::In, fp.len)?;
        fingerprints.push(fp);
        if out_sum != header.num_edges || in_sum != header.num_edges {
            return Err(Error::Inconsistent(format!(
                "degree sums out={out_sum} in={in_sum} do not match m={}",
                header.num_edges
            )));
        }
        Some(f)
    } else {
        if out_sum != 2 * header.num_edges {
            return Err(Error::Inconsistent(format!(
                "degree sum {out_sum} is not 2m = {}",
                2 * header.num_edges
            )));
        }
        None
    };

    Ok(GraphHandle {
        paths,
        header,
        index,
        out_adj,
        in_adj,
        fingerprints,
        adjacency_writes: AtomicU64::new(0),
    })
}

impl GraphHandle {
    pub fn header(&self) -> &GraphHeader {
        &self.header
    }

    pub fn paths(&self) -> &GraphPaths {
        &self.paths
    }

    pub fn index(&self) -> &VertexIndex {
        &self.index
    }

    pub fn num_vertices(&self) -> u64 {
        self.header.num_vertices
    }

    pub fn num_edges(&self) -> u64 {
        self.header.num_edges
    }

    pub fn is_directed(&self) -> bool {
        self.header.is_directed()
    }

    pub fn check_vertex(&self, v: VertexId) -> Result<()> {
        if v < self.header.num_vertices {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange {
                vertex: v,
                n: self.header.num_vertices,
            })
        }
    }

    /// Degree from the in-memory index; never touches disk.
    pub fn degree(&self, v: VertexId, dir: Direction) -> Result<u64> {
        self.check_vertex(v)?;
        Ok(self.degree_unchecked(v, dir))
    }

    #[inline]
    pub fn degree_unchecked(&self, v: VertexId, dir: Direction) -> u64 {
        let v = v as usize;
        let out = u64::from(self.index.out_degrees[v]);
        if !self.is_directed() {
            return out;
        }
        let inn = u64::from(self.index.in_degrees[v]);
        match dir {
            Direction::Out => out,
            Direction::In => inn,
            Direction::Both => out + inn,
        }
    }

    /// Byte span `(offset, length)` of an adjacency list in its file.
    pub(crate) fn adjacency_span(&self, v: VertexId, dir: Direction) -> (u64, u64) {
        let (offsets, degrees) = self.index.lists(self.storage_direction(dir));
        let v = v as usize;
        (offsets[v], u64::from(degrees[v]) * NEIGHBOR_BYTES)
    }

    /// Folds `Both` and undirected `In` onto the list that is actually stored.
    pub fn storage_direction(&self, dir: Direction) -> Direction {
        match dir {
            Direction::In if self.is_directed() => Direction::In,
            _ => Direction::Out,
        }
    }

    pub(crate) fn adjacency_file(&self, dir: Direction) -> &File {
        match (self.storage_direction(dir), &self.in_adj) {
            (Direction::In, Some(f)) => f,
            _ => &self.out_adj,
        }
    }

    pub(crate) fn adjacency_file_len(&self, dir: Direction) -> u64 {
        match self.storage_direction(dir) {
            Direction::In => self.fingerprints[1].len,
            _ => self.fingerprints[0].len,
        }
    }

    /// Original (pre-remap) vertex ids, read from the `.ids` file.
    pub fn original_ids(&self) -> Result<Vec<u64>> {
        let path = self.paths.ids();
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let expected = self.header.num_vertices * 8;
        if bytes.len() as u64 != expected {
            return Err(Error::Truncated {
                what: "id map",
                expected,
                found: bytes.len() as u64,
            });
        }
        Ok(bytes
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    /// Number of writes issued against the adjacency files since open. No
    /// code path writes them, so this must stay zero.
    pub fn adjacency_writes(&self) -> u64 {
        self.adjacency_writes.load(Ordering::Relaxed)
    }

    /// Re-stats the adjacency files and fails if length or mtime moved.
    pub fn verify_unmodified(&self) -> Result<()> {
        for fp in &self.fingerprints {
            let now = Fingerprint::of(&fp.path)?;
            if now != *fp {
                self.adjacency_writes.fetch_add(1, Ordering::Relaxed);
                return Err(Error::Inconsistent(format!(
                    "{} changed after open",
                    fp.path.display()
                )));
            }
        }
        Ok(())
    }
}
