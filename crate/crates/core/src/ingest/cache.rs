//! Binary graph cache.
//!
//! Layout, all integers little-endian:
//!
//! | field      | type      |                                            |
//! |------------|-----------|--------------------------------------------|
//! | magic      | `[u8; 4]` | `ZRGC`                                     |
//! | version    | `u32`     | [`FORMAT_VERSION`]                         |
//! | node count | `u64`     | `N`                                        |
//! | arc count  | `u64`     | `M`                                        |
//! | adjacency  | varints   | per node: out-degree, first successor, then gaps − 1 |
//! | checksum   | `u64`     | FNV-1a over the adjacency bytes            |
//!
//! Varints are unsigned LEB128. Successor lists are strictly increasing, so
//! every gap is at least 1. Reciprocity is not stored; it follows from the
//! arc set.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::graph::{DirectedGraph, NodeId};

pub const MAGIC: [u8; 4] = *b"ZRGC";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("not a graph cache (bad magic bytes)")]
    BadMagic,
    #[error("cache format version {found} is not supported (expected {FORMAT_VERSION})")]
    VersionMismatch { found: u32 },
    #[error("cache is truncated")]
    Truncated,
    #[error("cache is corrupt: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(std::io::Error),
}

impl From<std::io::Error> for CacheError {
    fn from(e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            CacheError::Truncated
        } else {
            CacheError::Io(e)
        }
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

struct Checksum(u64);

impl Checksum {
    fn update(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(FNV_PRIME);
        }
    }
}

fn write_varint<W: Write>(out: &mut W, mut value: u64, sum: &mut Checksum) -> std::io::Result<()> {
    let mut buf = [0u8; 10];
    let mut len = 0;
    loop {
        let byte = (value & 0x7f) as u8;
        value >>= 7;
        if value == 0 {
            buf[len] = byte;
            len += 1;
            break;
        }
        buf[len] = byte | 0x80;
        len += 1;
    }
    sum.update(&buf[..len]);
    out.write_all(&buf[..len])
}

/// Decodes one varint at `*pos`, advancing it.
fn read_varint(bytes: &[u8], pos: &mut usize) -> Result<u64, CacheError> {
    let mut value = 0u64;
    for shift in (0..64).step_by(7) {
        let byte = *bytes.get(*pos).ok_or(CacheError::Truncated)?;
        *pos += 1;
        value |= ((byte & 0x7f) as u64) << shift;
        if byte & 0x80 == 0 {
            return Ok(value);
        }
    }
    Err(CacheError::Corrupt("varint longer than 64 bits".into()))
}

fn read_u64<R: Read>(input: &mut R) -> Result<u64, CacheError> {
    let mut buf = [0u8; 8];
    input.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

pub fn write_cache<W: Write>(g: &DirectedGraph, mut out: W) -> Result<(), CacheError> {
    out.write_all(&MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&(g.node_count() as u64).to_le_bytes())?;
    out.write_all(&(g.edge_count() as u64).to_le_bytes())?;
    let mut sum = Checksum(FNV_OFFSET);
    for u in g.nodes() {
        let successors = g.successors(u);
        write_varint(&mut out, successors.len() as u64, &mut sum)?;
        let mut previous: Option<NodeId> = None;
        for &v in successors {
            let encoded = match previous {
                None => v as u64,
                Some(p) => (v - p - 1) as u64,
            };
            write_varint(&mut out, encoded, &mut sum)?;
            previous = Some(v);
        }
    }
    out.write_all(&sum.0.to_le_bytes())?;
    out.flush()?;
    Ok(())
}

pub fn read_cache<R: Read>(mut input: R) -> Result<DirectedGraph, CacheError> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(CacheError::BadMagic);
    }
    let mut version = [0u8; 4];
    input.read_exact(&mut version)?;
    let version = u32::from_le_bytes(version);
    if version != FORMAT_VERSION {
        return Err(CacheError::VersionMismatch { found: version });
    }
    let node_count = read_u64(&mut input)?;
    let arc_count = read_u64(&mut input)?;
    if node_count > NodeId::MAX as u64 {
        return Err(CacheError::Corrupt(format!("node count {node_count} is out of range")));
    }
    let n = node_count as usize;
    // Adjacency and checksum are decoded from memory; the checksum is the
    // last 8 bytes.
    let mut body = Vec::new();
    input.read_to_end(&mut body)?;
    if body.len() < 8 {
        return Err(CacheError::Truncated);
    }
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0usize);
    let mut targets: Vec<NodeId> = Vec::with_capacity((arc_count as usize).min(body.len()));
    let mut pos = 0;
    for u in 0..n {
        let degree = read_varint(&body, &mut pos)?;
        if targets.len() as u64 + degree > arc_count {
            return Err(CacheError::Corrupt(format!("node {u} overruns the declared arc count {arc_count}")));
        }
        let mut previous: Option<u64> = None;
        for _ in 0..degree {
            let encoded = read_varint(&body, &mut pos)?;
            let v = match previous {
                None => encoded,
                Some(p) => p.checked_add(encoded + 1).ok_or_else(|| CacheError::Corrupt("gap overflow".into()))?,
            };
            if v >= node_count || v == u as u64 {
                return Err(CacheError::Corrupt(format!("node {u} has invalid successor {v}")));
            }
            targets.push(v as NodeId);
            previous = Some(v);
        }
        offsets.push(targets.len());
    }
    if targets.len() as u64 != arc_count {
        return Err(CacheError::Corrupt(format!("header declares {arc_count} arcs but {} were stored", targets.len())));
    }
    let rest = &body[pos..];
    if rest.len() < 8 {
        return Err(CacheError::Truncated);
    }
    if rest.len() > 8 {
        return Err(CacheError::Corrupt("trailing bytes after checksum".into()));
    }
    let mut sum = Checksum(FNV_OFFSET);
    sum.update(&body[..pos]);
    if u64::from_le_bytes(rest.try_into().expect("eight bytes")) != sum.0 {
        return Err(CacheError::Corrupt("checksum mismatch".into()));
    }
    Ok(DirectedGraph::from_out_rows(n, offsets, targets))
}

pub fn save_cache(g: &DirectedGraph, path: impl AsRef<Path>) -> Result<(), CacheError> {
    write_cache(g, BufWriter::new(File::create(path).map_err(CacheError::Io)?))
}

pub fn load_cache(path: impl AsRef<Path>) -> Result<DirectedGraph, CacheError> {
    read_cache(BufReader::new(File::open(path).map_err(CacheError::Io)?))
}
