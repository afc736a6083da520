//! Graph files.
//!
//! Binary layout, all fields little-endian `u64`:
//!
//! ```text
//! magic "KCGRAPH\0" | version | n | m | offsets[0..=n] | adjacency[0..2m]
//! ```
//!
//! The text form has one edge `i j` per line (0-based). Lines starting with
//! `#` are comments, except `# n <count>`, which fixes the vertex count so
//! isolated trailing vertices survive a round trip.

use std::io::{BufRead, Read, Write};

use super::{Graph, VertexId};
use crate::{Error, Result};

pub const MAGIC: [u8; 8] = *b"KCGRAPH\0";
pub const VERSION: u64 = 1;

pub fn write_binary<W: Write>(g: &Graph, mut w: W) -> Result<()> {
    w.write_all(&MAGIC)?;
    for v in [VERSION, g.n() as u64, g.m() as u64] {
        w.write_all(&v.to_le_bytes())?;
    }
    for &o in g.offsets() {
        w.write_all(&(o as u64).to_le_bytes())?;
    }
    for &a in g.adjacency() {
        w.write_all(&(a as u64).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated graph file: {e}")))?;
    Ok(u64::from_le_bytes(buf))
}

pub fn read_binary<R: Read>(mut r: R) -> Result<Graph> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format("file too short for a graph header".into()))?;
    if magic != MAGIC {
        return Err(Error::Format("bad magic bytes".into()));
    }
    let version = read_u64(&mut r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = read_u64(&mut r)?;
    let m = read_u64(&mut r)?;
    if n > VertexId::MAX as u64 {
        return Err(Error::Format(format!("n = {n} exceeds the u32 index range")));
    }
    let half = m
        .checked_mul(2)
        .ok_or_else(|| Error::Format(format!("edge count {m} overflows")))?;
    let mut offsets = Vec::with_capacity(n as usize + 1);
    for _ in 0..=n {
        offsets.push(read_u64(&mut r)? as usize);
    }
    let mut adjacency = Vec::with_capacity(half.min(1 << 28) as usize);
    for _ in 0..half {
        let a = read_u64(&mut r)?;
        if a >= n {
            return Err(Error::Format(format!("neighbour index {a} out of range")));
        }
        adjacency.push(a as VertexId);
    }
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(Error::Format("trailing bytes after adjacency".into()));
    }
    Graph::from_parts(offsets, adjacency)
}

pub fn write_edge_list<W: Write>(g: &Graph, mut w: W) -> Result<()> {
    writeln!(w, "# n {}", g.n())?;
    for (u, v) in g.edges() {
        writeln!(w, "{u} {v}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_edge_list<R: BufRead>(r: R) -> Result<Graph> {
    let mut declared_n: Option<usize> = None;
    let mut edges = Vec::new();
    let mut max_id: Option<u64> = None;
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let mut parts = rest.split_whitespace();
            if parts.next() == Some("n") {
                let n = parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::Format(format!("line {}: bad vertex count", lineno + 1)))?;
                declared_n = Some(n);
            }
            continue;
        }
        let mut parts = line.split_whitespace();
        let mut field = || -> Result<u64> {
            parts
                .next()
                .and_then(|s| s.parse::<u64>().ok())
                .ok_or_else(|| Error::Format(format!("line {}: expected `i j`", lineno + 1)))
        };
        let (u, v) = (field()?, field()?);
        if u > VertexId::MAX as u64 || v > VertexId::MAX as u64 {
            return Err(Error::Format(format!("line {}: vertex id too large", lineno + 1)));
        }
        max_id = Some(max_id.unwrap_or(0).max(u).max(v));
        edges.push((u as VertexId, v as VertexId));
    }
    let n = match (declared_n, max_id) {
        (Some(n), _) => n,
        (None, Some(id)) => id as usize + 1,
        (None, None) => 0,
    };
    Graph::from_edges(n, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Graph {
        Graph::from_edges(6, &[(0, 1), (1, 2), (2, 0), (3, 4)]).unwrap()
    }

    #[test]
    fn binary_round_trip() {
        let g = sample();
        let mut buf = Vec::new();
        write_binary(&g, &mut buf).unwrap();
        assert_eq!(buf.len(), 8 * (4 + 7 + 8));
        assert_eq!(&buf[..8], b"KCGRAPH\0");
        assert_eq!(read_binary(&buf[..]).unwrap(), g);
    }

    #[test]
    fn binary_rejects_corruption() {
        let g = sample();
        let mut buf = Vec::new();
        write_binary(&g, &mut buf).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_binary(&bad[..]).is_err());
        assert!(read_binary(&buf[..buf.len() - 3]).is_err());
        let mut extra = buf.clone();
        extra.push(0);
        assert!(read_binary(&extra[..]).is_err());
        let mut asym = buf;
        let last = asym.len() - 8;
        asym[last] = 5;
        assert!(read_binary(&asym[..]).is_err());
    }

    #[test]
    fn edge_list_round_trip_keeps_isolated_vertices() {
        let g = sample();
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# n 6\n0 1\n0 2\n"));
        assert_eq!(read_edge_list(&buf[..]).unwrap(), g);
    }

    #[test]
    fn edge_list_without_header() {
        let g = read_edge_list("# comment\n0 3\n\n1 3\n".as_bytes()).unwrap();
        assert_eq!(g.n(), 4);
        assert_eq!(g.m(), 2);
        assert!(read_edge_list("0 x\n".as_bytes()).is_err());
        assert!(read_edge_list("1 1\n".as_bytes()).is_err());
    }
}
