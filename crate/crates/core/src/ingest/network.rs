//! The `weibo_network` adjacency format.
//!
//! ```text
//! N M
//! v1 k v2_1 flag_1 ... v2_k flag_k     (N records)
//! ```
//!
//! The header gives the user count `N` and relationship count `M`. Each record
//! lists the `k` users followed by `v1`, each with a flag that is `1` when the
//! follow is mutual. Tokens are separated by any run of ASCII whitespace, so a
//! record may wrap across lines.

use std::io::{BufRead, Write};

use super::IngestError;
use crate::graph::{build_graph, BuildStats, DirectedGraph, InputArc, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RawArc {
    pub source: NodeId,
    pub target: NodeId,
    pub reciprocal: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawNetwork {
    pub declared_nodes: usize,
    pub declared_relationships: u64,
    /// Arcs in file order.
    pub arcs: Vec<RawArc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ParseStats {
    pub records: usize,
    pub parsed_arcs: usize,
    /// Whether the header's relationship count disagrees with the arcs read.
    pub relationship_mismatch: bool,
}

impl RawNetwork {
    pub fn to_graph(&self) -> Result<(DirectedGraph, BuildStats), IngestError> {
        let arcs: Vec<InputArc> =
            self.arcs.iter().map(|a| InputArc::new(a.source, a.target, a.reciprocal)).collect();
        Ok(build_graph(&arcs, self.declared_nodes)?)
    }

    /// The network file of a graph: every arc listed under its source, with
    /// flag 1 when the reverse arc exists too.
    pub fn from_graph(g: &DirectedGraph) -> Self {
        RawNetwork {
            declared_nodes: g.node_count(),
            declared_relationships: g.edge_count() as u64,
            arcs: g
                .to_arcs()
                .into_iter()
                .map(|a| RawArc { source: a.source, target: a.target, reciprocal: a.reciprocal })
                .collect(),
        }
    }
}

/// Whitespace tokenizer over a byte stream that tracks line numbers.
struct Tokens<R> {
    reader: R,
    line: usize,
    token_line: usize,
    buf: Vec<u8>,
}

impl<R: BufRead> Tokens<R> {
    fn new(reader: R) -> Self {
        Tokens { reader, line: 1, token_line: 1, buf: Vec::with_capacity(24) }
    }

    /// Next token, or `None` at end of input.
    fn next_token(&mut self) -> Result<Option<&[u8]>, IngestError> {
        self.buf.clear();
        loop {
            let chunk = self.reader.fill_buf()?;
            if chunk.is_empty() {
                break;
            }
            let mut used = 0;
            let mut done = false;
            for &b in chunk {
                if b.is_ascii_whitespace() {
                    if !self.buf.is_empty() {
                        done = true;
                        break;
                    }
                    if b == b'\n' {
                        self.line += 1;
                    }
                } else {
                    if self.buf.is_empty() {
                        self.token_line = self.line;
                    }
                    self.buf.push(b);
                }
                used += 1;
            }
            self.reader.consume(used);
            if done {
                break;
            }
        }
        Ok(if self.buf.is_empty() { None } else { Some(&self.buf) })
    }

    fn expect_int(&mut self, what: &str) -> Result<u64, IngestError> {
        let line = self.line;
        match self.next_token()? {
            None => Err(IngestError::parse(line, format!("unexpected end of input, expected {what}"))),
            Some(tok) => match parse_u64(tok) {
                Some(value) => Ok(value),
                None => {
                    let found = String::from_utf8_lossy(tok).into_owned();
                    Err(IngestError::parse(self.token_line, format!("expected {what}, found `{found}`")))
                }
            },
        }
    }
}

fn parse_u64(tok: &[u8]) -> Option<u64> {
    if tok.is_empty() || tok.len() > 20 {
        return None;
    }
    let mut value: u64 = 0;
    for &b in tok {
        if !b.is_ascii_digit() {
            return None;
        }
        value = value.checked_mul(10)?.checked_add((b - b'0') as u64)?;
    }
    Some(value)
}

/// Parses a `weibo_network` stream. A header relationship count that
/// disagrees with the number of arcs read is logged, not rejected.
pub fn parse_weibo_network<R: BufRead>(reader: R) -> Result<(RawNetwork, ParseStats), IngestError> {
    let mut tokens = Tokens::new(reader);
    let declared_nodes = tokens.expect_int("user count in header")?;
    let header_line = tokens.token_line;
    let declared_relationships = tokens.expect_int("relationship count in header")?;
    if tokens.token_line != header_line {
        return Err(IngestError::parse(header_line, "header must hold the user and relationship counts on one line"));
    }
    if declared_nodes > NodeId::MAX as u64 {
        return Err(IngestError::parse(header_line, format!("user count {declared_nodes} exceeds the supported maximum")));
    }
    let n = declared_nodes as usize;
    let check_id = |id: u64, line: usize, role: &str| -> Result<NodeId, IngestError> {
        if id >= declared_nodes {
            Err(IngestError::parse(line, format!("{role} id {id} is outside [0, {declared_nodes})")))
        } else {
            Ok(id as NodeId)
        }
    };

    let mut arcs = Vec::with_capacity((declared_relationships as usize).min(1 << 24));
    for record in 0..n {
        let source = match tokens.next_token()? {
            None => {
                return Err(IngestError::parse(
                    tokens.line,
                    format!("truncated: header declares {n} records but only {record} found"),
                ))
            }
            Some(tok) => parse_u64(tok).ok_or_else(|| String::from_utf8_lossy(tok).into_owned()),
        };
        let source = match source {
            Ok(id) => check_id(id, tokens.token_line, "user")?,
            Err(found) => {
                return Err(IngestError::parse(tokens.token_line, format!("expected user id, found `{found}`")))
            }
        };
        let record_line = tokens.token_line;
        let k = tokens.expect_int("followee count")?;
        for _ in 0..k {
            let target = tokens.expect_int("followee id").map_err(|e| truncated(e, record_line))?;
            let target = check_id(target, tokens.token_line, "followee")?;
            let flag = tokens.expect_int("reciprocal flag").map_err(|e| truncated(e, record_line))?;
            let reciprocal = match flag {
                0 => false,
                1 => true,
                other => {
                    return Err(IngestError::parse(tokens.token_line, format!("reciprocal flag must be 0 or 1, found {other}")))
                }
            };
            arcs.push(RawArc { source, target, reciprocal });
        }
    }
    if tokens.next_token()?.is_some() {
        return Err(IngestError::parse(tokens.token_line, format!("unexpected data after the {n} declared records")));
    }

    let stats = ParseStats {
        records: n,
        parsed_arcs: arcs.len(),
        relationship_mismatch: arcs.len() as u64 != declared_relationships,
    };
    if stats.relationship_mismatch {
        log::warn!("header declares {declared_relationships} relationships but {} arcs were read", arcs.len());
    }
    Ok((RawNetwork { declared_nodes: n, declared_relationships, arcs }, stats))
}

fn truncated(err: IngestError, record_line: usize) -> IngestError {
    match err {
        IngestError::Parse { line, message } if message.starts_with("unexpected end") => IngestError::Parse {
            line,
            message: format!("record starting on line {record_line} is truncated: {message}"),
        },
        other => other,
    }
}

/// Writes `net` with one record per user id in `0..N`, arcs grouped under
/// their source in file order. The header carries the number of arcs written.
pub fn write_weibo_network<W: Write>(net: &RawNetwork, mut out: W) -> std::io::Result<()> {
    let n = net.declared_nodes;
    let mut per_source: Vec<Vec<&RawArc>> = vec![Vec::new(); n];
    for arc in &net.arcs {
        per_source[arc.source as usize].push(arc);
    }
    writeln!(out, "{} {}", n, net.arcs.len())?;
    let mut line = String::new();
    for (source, arcs) in per_source.iter().enumerate() {
        use std::fmt::Write as _;
        line.clear();
        let _ = write!(line, "{} {}", source, arcs.len());
        for arc in arcs {
            let _ = write!(line, " {} {}", arc.target, arc.reciprocal as u8);
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    out.flush()
}
