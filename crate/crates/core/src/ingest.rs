//! Edge stream parsing and normalization.
//!
//! The canonical form of a stream is undirected: every edge stores its
//! endpoints as `u < v`, self-loops are dropped, and edges are ordered by
//! `(t, u, v)`. Repeated communications between the same pair are kept; each
//! snapshot model decides how to collapse them.

use std::collections::BTreeSet;
use std::io::BufRead;

use crate::error::{Error, Result};

pub type NodeId = u64;
/// Integer seconds since the epoch.
pub type Timestamp = u64;

const HEADER: [&str; 3] = ["src", "dst", "timestamp"];

/// An edge as read from input, before normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawEdge {
    pub u: NodeId,
    pub v: NodeId,
    pub t: Timestamp,
}

impl RawEdge {
    pub fn new(u: NodeId, v: NodeId, t: Timestamp) -> Self {
        Self { u, v, t }
    }
}

/// A normalized communication event with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimedEdge {
    pub u: NodeId,
    pub v: NodeId,
    pub t: Timestamp,
}

impl TimedEdge {
    pub fn pair(&self) -> (NodeId, NodeId) {
        (self.u, self.v)
    }

    fn sort_key(&self) -> (Timestamp, NodeId, NodeId) {
        (self.t, self.u, self.v)
    }
}

/// A time-ordered, canonical sequence of edges.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeStream {
    edges: Vec<TimedEdge>,
    node_count: usize,
    self_loops_dropped: usize,
}

impl EdgeStream {
    pub fn edges(&self) -> &[TimedEdge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Number of distinct node ids among the retained edges.
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn self_loops_dropped(&self) -> usize {
        self.self_loops_dropped
    }

    pub fn t_min(&self) -> Option<Timestamp> {
        self.edges.first().map(|e| e.t)
    }

    pub fn t_max(&self) -> Option<Timestamp> {
        self.edges.last().map(|e| e.t)
    }

    /// Raw view of the stream, suitable for feeding back into [`normalize`].
    pub fn to_raw(&self) -> Vec<RawEdge> {
        self.edges
            .iter()
            .map(|e| RawEdge::new(e.u, e.v, e.t))
            .collect()
    }
}

/// Canonicalize endpoints, drop self-loops and sort by `(t, u, v)`.
pub fn normalize<I>(edges: I) -> EdgeStream
where
    I: IntoIterator<Item = RawEdge>,
{
    let mut self_loops_dropped = 0;
    let mut out: Vec<TimedEdge> = edges
        .into_iter()
        .filter_map(|e| {
            if e.u == e.v {
                self_loops_dropped += 1;
                return None;
            }
            Some(TimedEdge {
                u: e.u.min(e.v),
                v: e.u.max(e.v),
                t: e.t,
            })
        })
        .collect();
    out.sort_by_key(TimedEdge::sort_key);

    let nodes: BTreeSet<NodeId> = out.iter().flat_map(|e| [e.u, e.v]).collect();
    EdgeStream {
        node_count: nodes.len(),
        edges: out,
        self_loops_dropped,
    }
}

/// Parse `u,v,t` lines into a normalized stream.
///
/// Blank lines and lines starting with `#` are skipped, as is a leading
/// `src,dst,timestamp` header.
pub fn parse_edge_stream<R: BufRead>(reader: R) -> Result<EdgeStream> {
    let mut raw = Vec::new();
    let mut seen_data = false;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if !seen_data && fields == HEADER {
            seen_data = true;
            continue;
        }
        seen_data = true;
        raw.push(parse_line(&fields, line_no)?);
    }
    Ok(normalize(raw))
}

/// Parse from an in-memory string.
pub fn parse_edge_str(source: &str) -> Result<EdgeStream> {
    parse_edge_stream(source.as_bytes())
}

fn parse_line(fields: &[&str], line: usize) -> Result<RawEdge> {
    if fields.len() != 3 {
        return Err(Error::Parse {
            line,
            message: format!("expected 3 fields `u,v,t`, found {}", fields.len()),
        });
    }
    let node = |s: &str, name: &str| -> Result<NodeId> {
        s.parse::<NodeId>().map_err(|_| Error::Parse {
            line,
            message: format!("{name} `{s}` is not a non-negative integer node id"),
        })
    };
    let u = node(fields[0], "source")?;
    let v = node(fields[1], "target")?;
    let t: i64 = fields[2].parse().map_err(|_| Error::Parse {
        line,
        message: format!("timestamp `{}` is not an integer", fields[2]),
    })?;
    if t < 0 {
        return Err(Error::Validation(format!(
            "line {line}: negative timestamp {t}"
        )));
    }
    Ok(RawEdge::new(u, v, t as Timestamp))
}
