//! Structural attributes of snapshot graphs.
//!
//! Both attributes accept weighted graphs whose weights are edge
//! probabilities. Average degree uses expected degree. Local clustering is
//! the expected number of closed wedges at a node over its expected number
//! of wedges, assuming independent edges:
//!
//! ```text
//! c(v) = sum_{j<k in N(v)} w_vj * w_vk * w_jk  /  sum_{j<k in N(v)} w_vj * w_vk
//! ```
//!
//! On 0/1 weights both reduce to the textbook definitions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::NodeId;
use crate::snapshot::SnapshotGraph;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub avg_degree: f64,
    pub avg_clustering: f64,
}

impl FeatureVector {
    pub fn new(avg_degree: f64, avg_clustering: f64) -> Self {
        Self {
            avg_degree,
            avg_clustering,
        }
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.avg_degree, self.avg_clustering]
    }
}

/// Per-timestep attributes; `detrended` is filled by [`crate::detrend::detrend`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureSeries {
    pub raw: Vec<FeatureVector>,
    pub detrended: Option<Vec<FeatureVector>>,
}

impl FeatureSeries {
    pub fn from_raw(raw: Vec<FeatureVector>) -> Self {
        Self {
            raw,
            detrended: None,
        }
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn avg_degree(&self) -> Vec<f64> {
        self.raw.iter().map(|f| f.avg_degree).collect()
    }

    pub fn avg_clustering(&self) -> Vec<f64> {
        self.raw.iter().map(|f| f.avg_clustering).collect()
    }
}

/// Which node count divides twice the total weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DegreeDenominator {
    /// Nodes with at least one edge in the snapshot.
    #[default]
    Active,
    /// A fixed node count, normally every node of the stream.
    Global(usize),
}

/// `2 * total weight / |active nodes|`, or 0 for an empty snapshot.
pub fn average_degree(g: &SnapshotGraph) -> f64 {
    average_degree_with(g, DegreeDenominator::Active)
}

pub fn average_degree_with(g: &SnapshotGraph, denominator: DegreeDenominator) -> f64 {
    let n = match denominator {
        DegreeDenominator::Active => g.active_nodes().len(),
        DegreeDenominator::Global(n) => n,
    };
    if g.is_empty() || n == 0 {
        return 0.0;
    }
    2.0 * g.total_weight() / n as f64
}

/// Local clustering of an active node.
pub fn local_clustering(g: &SnapshotGraph, v: NodeId) -> Result<f64> {
    let adj = Adjacency::new(g);
    let idx = adj.index_of(v).ok_or_else(|| {
        Error::Validation(format!("node {v} is not active in snapshot {}", g.index))
    })?;
    let mut scratch = vec![0.0; adj.len()];
    Ok(adj.clustering_at(idx, &mut scratch))
}

/// Mean local clustering over active nodes, 0 for an empty snapshot.
pub fn average_clustering(g: &SnapshotGraph) -> f64 {
    let adj = Adjacency::new(g);
    if adj.len() == 0 {
        return 0.0;
    }
    let mut scratch = vec![0.0; adj.len()];
    let total: f64 = (0..adj.len())
        .map(|i| adj.clustering_at(i, &mut scratch))
        .sum();
    total / adj.len() as f64
}

pub fn snapshot_features(g: &SnapshotGraph, denominator: DegreeDenominator) -> FeatureVector {
    FeatureVector::new(average_degree_with(g, denominator), average_clustering(g))
}

pub fn extract_features(
    snapshots: &[SnapshotGraph],
    denominator: DegreeDenominator,
) -> Result<FeatureSeries> {
    if snapshots.is_empty() {
        return Err(Error::Validation(
            "cannot extract features from zero snapshots".into(),
        ));
    }
    Ok(FeatureSeries::from_raw(
        snapshots
            .iter()
            .map(|g| snapshot_features(g, denominator))
            .collect(),
    ))
}

/// Compressed adjacency over active nodes, indexed in ascending node-id
/// order with each neighbor list sorted ascending.
struct Adjacency {
    nodes: Vec<NodeId>,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    weights: Vec<f64>,
}

impl Adjacency {
    fn new(g: &SnapshotGraph) -> Self {
        let nodes: Vec<NodeId> = g.active_nodes().iter().copied().collect();
        let index = |id: NodeId| nodes.binary_search(&id).expect("endpoint is active");
        let mut degree = vec![0usize; nodes.len()];
        let mut pairs = Vec::with_capacity(g.edge_count());
        for (&(u, v), &w) in g.edges() {
            let (a, b) = (index(u), index(v));
            degree[a] += 1;
            degree[b] += 1;
            pairs.push((a, b, w));
        }
        let mut offsets = Vec::with_capacity(nodes.len() + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..nodes.len()].to_vec();
        let mut neighbors = vec![0; 2 * pairs.len()];
        let mut weights = vec![0.0; 2 * pairs.len()];
        // pairs arrive sorted by (a, b) with a < b: placing every (b, a) before
        // every (a, b) leaves each list in ascending order
        for &(a, b, w) in &pairs {
            neighbors[fill[b]] = a;
            weights[fill[b]] = w;
            fill[b] += 1;
        }
        for &(a, b, w) in &pairs {
            neighbors[fill[a]] = b;
            weights[fill[a]] = w;
            fill[a] += 1;
        }
        debug_assert!(
            (0..nodes.len()).all(|i| neighbors[offsets[i]..offsets[i + 1]]
                .windows(2)
                .all(|w| w[0] < w[1]))
        );
        Self {
            nodes,
            offsets,
            neighbors,
            weights,
        }
    }

    fn len(&self) -> usize {
        self.nodes.len()
    }

    fn index_of(&self, id: NodeId) -> Option<usize> {
        self.nodes.binary_search(&id).ok()
    }

    fn list(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.offsets[i]..self.offsets[i + 1];
        (&self.neighbors[r.clone()], &self.weights[r])
    }

    /// `scratch` must be all zeros on entry and is left all zeros.
    fn clustering_at(&self, v: usize, scratch: &mut [f64]) -> f64 {
        let (nbrs, wts) = self.list(v);
        if nbrs.len() < 2 {
            return 0.0;
        }
        for (&j, &w) in nbrs.iter().zip(wts) {
            scratch[j] = w;
        }
        let mut closed = 0.0;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for (&j, &w_vj) in nbrs.iter().zip(wts) {
            sum += w_vj;
            sum_sq += w_vj * w_vj;
            let (nj, wj) = self.list(j);
            let start = nj.partition_point(|&k| k <= j);
            for (&k, &w_jk) in nj[start..].iter().zip(&wj[start..]) {
                let w_vk = scratch[k];
                if w_vk > 0.0 {
                    closed += w_vj * w_vk * w_jk;
                }
            }
        }
        for &j in nbrs {
            scratch[j] = 0.0;
        }
        let wedges = 0.5 * (sum * sum - sum_sq);
        if wedges <= 0.0 {
            return 0.0;
        }
        (closed / wedges).clamp(0.0, 1.0)
    }
}
