//! Snapshot models: turn an edge stream into one graph per timestep.
//!
//! * Discrete: edges are bucketed into non-overlapping windows of `delta_t`
//!   seconds; every pair seen in a window becomes an edge of weight 1.
//! * Probabilistic: at each grid point `t`, a pair last seen at `t'` carries
//!   weight `exp(-(t - t') / tau)`. Pairs whose weight has fallen below the
//!   cutoff are aged out until they communicate again.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use crate::error::{Error, Result};
use crate::format;
use crate::ingest::{EdgeStream, NodeId, Timestamp};
use crate::SECONDS_PER_DAY;

pub type Pair = (NodeId, NodeId);

/// One timestep's weighted, undirected, simple graph.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotGraph {
    pub index: usize,
    pub eval_time: Timestamp,
    edges: BTreeMap<Pair, f64>,
    active_nodes: BTreeSet<NodeId>,
}

impl SnapshotGraph {
    /// Build a snapshot from canonical pairs. Pairs are reordered to `u < v`;
    /// self-loops and non-positive weights are rejected.
    pub fn new<I>(index: usize, eval_time: Timestamp, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Pair, f64)>,
    {
        let mut map = BTreeMap::new();
        for ((a, b), w) in edges {
            if a == b {
                return Err(Error::Validation(format!("self-loop on node {a}")));
            }
            if !(w > 0.0 && w <= 1.0) {
                return Err(Error::Validation(format!(
                    "edge ({a},{b}) weight {w} outside (0,1]"
                )));
            }
            map.insert((a.min(b), a.max(b)), w);
        }
        Ok(Self::from_map(index, eval_time, map))
    }

    fn from_map(index: usize, eval_time: Timestamp, edges: BTreeMap<Pair, f64>) -> Self {
        let active_nodes = edges.keys().flat_map(|&(u, v)| [u, v]).collect();
        Self {
            index,
            eval_time,
            edges,
            active_nodes,
        }
    }

    pub fn edges(&self) -> &BTreeMap<Pair, f64> {
        &self.edges
    }

    pub fn active_nodes(&self) -> &BTreeSet<NodeId> {
        &self.active_nodes
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Weight of the pair, 0 when absent.
    pub fn weight(&self, a: NodeId, b: NodeId) -> f64 {
        self.edges
            .get(&(a.min(b), a.max(b)))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.values().sum()
    }

    /// Copy with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.index,
            self.eval_time,
            self.edges.iter().map(|(&p, &w)| (p, w * factor)),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiscreteConfig {
    /// Window length in seconds.
    pub delta_t: u64,
    /// Start of window 0.
    pub t0: Timestamp,
}

impl DiscreteConfig {
    /// Windows of `delta_t` seconds with the origin aligned down to a
    /// multiple of `delta_t` at or before the stream's first edge.
    pub fn aligned(stream: &EdgeStream, delta_t: u64) -> Result<Self> {
        let t_min = stream.t_min().ok_or(Error::EmptyStream)?;
        if delta_t == 0 {
            return Err(Error::InvalidParameter("delta_t must be > 0".into()));
        }
        Ok(Self {
            delta_t,
            t0: align_down(t_min, delta_t),
        })
    }
}

impl Default for DiscreteConfig {
    fn default() -> Self {
        Self {
            delta_t: SECONDS_PER_DAY,
            t0: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayConfig {
    /// Mean edge lifetime in seconds.
    pub tau: f64,
    /// Pairs with weight below this are aged out.
    pub cutoff: f64,
    /// Spacing of evaluation points in seconds.
    pub grid_step: u64,
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self {
            tau: 12.0 * SECONDS_PER_DAY as f64,
            cutoff: 1e-4,
            grid_step: SECONDS_PER_DAY,
        }
    }
}

impl DecayConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tau must be a positive finite number of seconds, got {}",
                self.tau
            )));
        }
        if !(self.cutoff > 0.0 && self.cutoff < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cutoff must lie in (0,1), got {}",
                self.cutoff
            )));
        }
        if self.grid_step == 0 {
            return Err(Error::InvalidParameter("grid_step must be > 0".into()));
        }
        Ok(())
    }

    /// Age after which a pair without new contact drops below the cutoff.
    pub fn lifetime_horizon(&self) -> f64 {
        self.tau * (1.0 / self.cutoff).ln()
    }
}

/// Largest multiple of `step` not exceeding `t`.
pub fn align_down(t: Timestamp, step: u64) -> Timestamp {
    t - t % step
}

/// Number of `step`-wide windows starting at `t0` needed to cover `t_max`.
pub fn steps_covering(t0: Timestamp, t_max: Timestamp, step: u64) -> usize {
    debug_assert!(t0 <= t_max && step > 0);
    ((t_max - t0) / step + 1) as usize
}

/// Aggregate edges into non-overlapping windows `[t0 + i*delta_t, t0 + (i+1)*delta_t)`.
///
/// Windows without edges are kept as empty snapshots, so the output covers
/// the whole span of the stream. Each snapshot's `eval_time` is the last
/// second of its window.
pub fn discrete_snapshots(stream: &EdgeStream, cfg: &DiscreteConfig) -> Result<Vec<SnapshotGraph>> {
    let (t_min, t_max) = match (stream.t_min(), stream.t_max()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::EmptyStream),
    };
    if cfg.delta_t == 0 {
        return Err(Error::InvalidParameter("delta_t must be > 0".into()));
    }
    if cfg.t0 > t_min {
        return Err(Error::InvalidParameter(format!(
            "window origin {} is after the first edge at {t_min}",
            cfg.t0
        )));
    }
    let n = steps_covering(cfg.t0, t_max, cfg.delta_t);
    let mut windows: Vec<BTreeMap<Pair, f64>> = vec![BTreeMap::new(); n];
    for e in stream.edges() {
        let i = ((e.t - cfg.t0) / cfg.delta_t) as usize;
        windows[i].insert(e.pair(), 1.0);
    }
    Ok(windows
        .into_iter()
        .enumerate()
        .map(|(i, edges)| {
            let eval_time = cfg.t0 + (i as u64 + 1) * cfg.delta_t - 1;
            SnapshotGraph::from_map(i, eval_time, edges)
        })
        .collect())
}

/// Probability that an edge last seen at `t_prime` is still alive at `t`.
pub fn decay_probability(t: Timestamp, t_prime: Timestamp, tau: f64) -> Result<f64> {
    if t < t_prime {
        return Err(Error::InvalidParameter(format!(
            "evaluation time {t} precedes edge time {t_prime}"
        )));
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tau must be > 0, got {tau}"
        )));
    }
    Ok(decay(t - t_prime, tau))
}

fn decay(age: u64, tau: f64) -> f64 {
    (-(age as f64) / tau).exp()
}

/// Evaluate the decayed graph at `t_i = t0 + (i+1)*grid_step - 1` for
/// `i in 0..n_steps`.
///
/// Only the most recent occurrence of a pair counts. A pair is present when
/// its weight is at least `cutoff`; once it falls below, it is forgotten until
/// the pair communicates again.
pub fn probabilistic_snapshots(
    stream: &EdgeStream,
    cfg: &DecayConfig,
    t0: Timestamp,
    n_steps: usize,
) -> Result<Vec<SnapshotGraph>> {
    cfg.validate()?;
    if n_steps == 0 {
        return Err(Error::InvalidParameter("n_steps must be >= 1".into()));
    }
    let edges = stream.edges();
    let mut next = 0;
    let mut last_seen: BTreeMap<Pair, Timestamp> = BTreeMap::new();
    let mut out = Vec::with_capacity(n_steps);
    for i in 0..n_steps {
        let eval_time = t0 + (i as u64 + 1) * cfg.grid_step - 1;
        while next < edges.len() && edges[next].t <= eval_time {
            last_seen.insert(edges[next].pair(), edges[next].t);
            next += 1;
        }
        let mut weights = BTreeMap::new();
        last_seen.retain(|&pair, &mut t_last| {
            let w = decay(eval_time - t_last, cfg.tau);
            if w < cfg.cutoff {
                return false;
            }
            weights.insert(pair, w);
            true
        });
        out.push(SnapshotGraph::from_map(i, eval_time, weights));
    }
    Ok(out)
}

/// Write snapshots as JSON lines: `{"index":i,"eval_time":t,"edges":[[u,v,p],...]}`.
pub fn write_snapshots_jsonl<W: Write>(
    snapshots: &[SnapshotGraph],
    mut w: W,
) -> std::io::Result<()> {
    for s in snapshots {
        write!(
            w,
            "{{\"index\":{},\"eval_time\":{},\"edges\":[",
            s.index, s.eval_time
        )?;
        for (n, (&(u, v), &p)) in s.edges.iter().enumerate() {
            if n > 0 {
                w.write_all(b",")?;
            }
            write!(w, "[{},{},{}]", u, v, format::sig(p))?;
        }
        w.write_all(b"]}\n")?;
    }
    Ok(())
}
