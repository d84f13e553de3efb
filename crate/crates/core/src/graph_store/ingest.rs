use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{
    open_graph, GraphHandle, GraphHeader, GraphPaths, VertexIndex, FLAG_DIRECTED,
    FORMAT_VERSION, NEIGHBOR_BYTES,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default)]
pub struct IngestOptions {
    pub directed: bool,
}

/// Reads a text edge list from `path` and writes the graph files at `base`.
pub fn ingest_edge_list_file(
    path: impl AsRef<Path>,
    base: impl AsRef<Path>,
    options: IngestOptions,
) -> Result<GraphHandle> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_edge_list(BufReader::new(file), base, options)
}

/// Converts a `u v` per line edge list into the on-disk format.
///
/// Blank lines and lines starting with `#` are skipped. Ids are remapped to
/// `0..n` in order of first appearance; self-loops and duplicate edges are
/// dropped. Single-threaded, and holds the edge set in memory while sorting.
pub fn ingest_edge_list<R: BufRead>(
    reader: R,
    base: impl AsRef<Path>,
    options: IngestOptions,
) -> Result<GraphHandle> {
    let paths = GraphPaths::new(base);
    let mut remap: HashMap<u64, u64> = HashMap::new();
    let mut original: Vec<u64> = Vec::new();
    let mut arcs: Vec<(u64, u64)> = Vec::new();

    let mut dense = |id: u64, remap: &mut HashMap<u64, u64>| {
        *remap.entry(id).or_insert_with(|| {
            original.push(id);
            original.len() as u64 - 1
        })
    };

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            reason: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::Parse {
                line: lineno,
                reason: format!("expected two vertex ids, got {trimmed:?}"),
            });
        };
        let parse = |s: &str| {
            s.parse::<u64>().map_err(|_| Error::Parse {
                line: lineno,
                reason: format!("{s:?} is not a nonnegative integer"),
            })
        };
        let (a, b) = (parse(a)?, parse(b)?);
        let u = dense(a, &mut remap);
        let v = dense(b, &mut remap);
        if u == v {
            continue;
        }
        if options.directed {
            arcs.push((u, v));
        } else {
            arcs.push((u, v));
            arcs.push((v, u));
        }
    }
    drop(remap);

    arcs.sort_unstable();
    arcs.dedup();
    let n = original.len();
    let num_edges = if options.directed {
        arcs.len() as u64
    } else {
        arcs.len() as u64 / 2
    };

    if let Some(parent) = paths.base().parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }

    let out_degrees = write_adjacency(&paths.out_adjacency(), n, arcs.iter().copied())?;
    let in_degrees = if options.directed {
        let mut reversed: Vec<(u64, u64)> = arcs.iter().map(|&(u, v)| (v, u)).collect();
        drop(arcs);
        reversed.sort_unstable();
        Some(write_adjacency(
            &paths.in_adjacency(),
            n,
            reversed.into_iter(),
        )?)
    } else {
        None
    };

    write_index(&paths.index(), &out_degrees, in_degrees.as_deref())?;
    write_u64s(&paths.ids(), &original)?;

    let header = GraphHeader {
        version: FORMAT_VERSION,
        num_vertices: n as u64,
        num_edges,
        flags: if options.directed { FLAG_DIRECTED } else { 0 },
    };
    let header_path = paths.header();
    std::fs::write(&header_path, header.to_bytes()).map_err(|e| Error::io(&header_path, e))?;

    open_graph(paths.base())
}

/// Writes lists from `(src, dst)` pairs sorted by `src` then `dst`.
fn write_adjacency(
    path: &Path,
    n: usize,
    sorted_arcs: impl Iterator<Item = (u64, u64)>,
) -> Result<Vec<u32>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::with_capacity(1 << 20, file);
    let mut degrees = vec![0u32; n];
    for (u, v) in sorted_arcs {
        degrees[u as usize] += 1;
        w.write_all(&v.to_le_bytes()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(degrees)
}

fn write_index(path: &Path, out: &[u32], inn: Option<&[u32]>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let (mut out_off, mut in_off) = (0u64, 0u64);
    for v in 0..out.len() {
        w.write_all(&VertexIndex::encode_block(out_off, out[v]))
            .map_err(|e| Error::io(path, e))?;
        out_off += u64::from(out[v]) * NEIGHBOR_BYTES;
        if let Some(inn) = inn {
            w.write_all(&VertexIndex::encode_block(in_off, inn[v]))
                .map_err(|e| Error::io(path, e))?;
            in_off += u64::from(inn[v]) * NEIGHBOR_BYTES;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_u64s(path: &Path, values: &[u64]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for v in values {
        w.write_all(&v.to_le_bytes()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_store::Direction;

    fn ingest_str(text: &str, directed: bool) -> (tempfile::TempDir, GraphHandle) {
        let dir = tempfile::tempdir().unwrap();
        let g = ingest_edge_list(text.as_bytes(), dir.path().join("g"), IngestOptions { directed })
            .unwrap();
        (dir, g)
    }

    #[test]
    fn triangle() {
        let (_d, g) = ingest_str("0 1\n1 2\n2 0", false);
        assert_eq!((g.num_vertices(), g.num_edges()), (3, 3));
        for v in 0..3 {
            assert_eq!(g.degree(v, Direction::Both).unwrap(), 2);
        }
    }

    #[test]
    fn duplicates_and_reversals_collapse() {
        let (_d, g) = ingest_str("0 1\n0 1\n1 0", false);
        assert_eq!((g.num_vertices(), g.num_edges()), (2, 1));
    }

    #[test]
    fn directed_degrees() {
        let (_d, g) = ingest_str("0 1", true);
        assert_eq!(g.degree(0, Direction::Out).unwrap(), 1);
        assert_eq!(g.degree(0, Direction::In).unwrap(), 0);
        assert_eq!(g.degree(1, Direction::In).unwrap(), 1);
        assert!(g.degree(2, Direction::Out).is_err());
    }

    #[test]
    fn comments_whitespace_and_remap() {
        let (_d, g) = ingest_str("# header\n\n  10\t20 \n20   30\n30 30\n", false);
        assert_eq!(g.num_vertices(), 3);
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.original_ids().unwrap(), vec![10, 20, 30]);
    }

    #[test]
    fn empty_input_is_empty_graph() {
        let (_d, g) = ingest_str("", false);
        assert_eq!((g.num_vertices(), g.num_edges()), (0, 0));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let err = ingest_edge_list(
            "0 1\n1 x\n".as_bytes(),
            dir.path().join("g"),
            IngestOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = ingest_edge_list(
            "0 1 2\n".as_bytes(),
            dir.path().join("g"),
            IngestOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = ingest_edge_list(
            "-1 2\n".as_bytes(),
            dir.path().join("g"),
            IngestOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }
}
