//! Latent states: KMeans over per-timestep feature vectors.
//!
//! Cluster ids are renamed to letters so that `A` is always the cluster whose
//! centroid has the lowest average degree, which makes low-activity regimes
//! easy to spot and keeps labels comparable across runs.

pub mod kmeans;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureSeries, FeatureVector};
pub use kmeans::{kmeans, kmeans_best_of, kmeans_with, KMeansConfig, KMeansFit};

pub const MAX_STATES: usize = 26;

/// A latent state, displayed as a letter starting at `A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State(u8);

impl State {
    pub fn new(index: usize) -> Result<Self> {
        if index >= MAX_STATES {
            return Err(Error::InvalidParameter(format!(
                "state index {index} exceeds the {MAX_STATES} available letters"
            )));
        }
        Ok(Self(index as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn letter(self) -> char {
        (b'A' + self.0) as char
    }

    pub fn from_letter(c: char) -> Result<Self> {
        if c.is_ascii_uppercase() {
            Ok(Self(c as u8 - b'A'))
        } else {
            Err(Error::Validation(format!("`{c}` is not a state letter")))
        }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl Serialize for State {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

pub fn labels_to_string(labels: &[State]) -> String {
    labels.iter().map(|s| s.letter()).collect()
}

/// Column-wise z-score parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    /// Population standard deviation; 0 marks a constant column.
    pub std: Vec<f64>,
}

const MIN_STD: f64 = 1e-12;

impl Standardization {
    pub fn identity(d: usize) -> Self {
        Self {
            mean: vec![0.0; d],
            std: vec![1.0; d],
        }
    }

    pub fn apply(&self, point: &[f64]) -> Vec<f64> {
        point
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| if *s == 0.0 { 0.0 } else { (x - m) / s })
            .collect()
    }
}

/// Z-score every column; columns with standard deviation below 1e-12 become zero.
pub fn standardize(points: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, Standardization)> {
    let n = points.len();
    if n == 0 {
        return Err(Error::Validation("cannot standardize zero points".into()));
    }
    let d = points[0].len();
    if d == 0 || points.iter().any(|p| p.len() != d) {
        return Err(Error::Validation(
            "points must share a non-zero dimension".into(),
        ));
    }
    let mut mean = vec![0.0; d];
    for p in points {
        for (m, v) in mean.iter_mut().zip(p) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut std = vec![0.0; d];
    for p in points {
        for ((s, v), m) in std.iter_mut().zip(p).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    for s in std.iter_mut() {
        *s = (*s / n as f64).sqrt();
        if *s < MIN_STD {
            *s = 0.0;
        }
    }
    let params = Standardization { mean, std };
    let scaled = points.iter().map(|p| params.apply(p)).collect();
    Ok((scaled, params))
}

/// Clusters renamed to letters.
#[derive(Debug, Clone, PartialEq)]
pub struct Relabeled {
    /// Centroids in letter order.
    pub centroids: Vec<Vec<f64>>,
    pub labels: Vec<State>,
    /// `order[i]` is the original cluster id now called letter `i`.
    pub order: Vec<usize>,
}

/// Sort clusters by first centroid coordinate (average degree), breaking ties
/// by the second (average clustering), and rename them `A, B, ...`.
pub fn relabel_states(centroids: &[Vec<f64>], assignments: &[usize]) -> Result<Relabeled> {
    let k = centroids.len();
    if k == 0 || k > MAX_STATES {
        return Err(Error::InvalidParameter(format!(
            "cluster count {k} must lie in 1..={MAX_STATES}"
        )));
    }
    let coord = |c: usize, j: usize| centroids[c].get(j).copied().unwrap_or(0.0);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        coord(a, 0)
            .total_cmp(&coord(b, 0))
            .then(coord(a, 1).total_cmp(&coord(b, 1)))
            .then(a.cmp(&b))
    });
    let mut rank = vec![0; k];
    for (letter, &c) in order.iter().enumerate() {
        rank[c] = letter;
    }
    let labels = assignments
        .iter()
        .map(|&a| {
            rank.get(a)
                .ok_or_else(|| Error::Validation(format!("assignment {a} out of range for k={k}")))
                .and_then(|&r| State::new(r))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Relabeled {
        centroids: order.iter().map(|&c| centroids[c].clone()).collect(),
        labels,
        order,
    })
}

/// Counts of consecutive state pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionMatrix {
    pub k: usize,
    /// `counts[a][b]` = number of steps going from state `a` to state `b`.
    pub counts: Vec<Vec<u64>>,
    pub labels: Vec<State>,
}

impl TransitionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn label_string(&self) -> String {
        labels_to_string(&self.labels)
    }
}

pub fn transition_matrix(labels: &[State], k: usize) -> Result<TransitionMatrix> {
    if labels.len() < 2 {
        return Err(Error::Validation(format!(
            "a transition matrix needs at least 2 labels, got {}",
            labels.len()
        )));
    }
    if let Some(bad) = labels.iter().find(|s| s.index() >= k) {
        return Err(Error::Validation(format!(
            "state {bad} outside the first {k} letters"
        )));
    }
    let mut counts = vec![vec![0u64; k]; k];
    for w in labels.windows(2) {
        counts[w[0].index()][w[1].index()] += 1;
    }
    Ok(TransitionMatrix {
        k,
        counts,
        labels: labels.to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClusterOn {
    #[default]
    Detrended,
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateConfig {
    pub k: usize,
    pub seed: u64,
    pub restarts: usize,
    pub cluster_on: ClusterOn,
    pub standardize: bool,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for StateConfig {
    fn default() -> Self {
        Self {
            k: 7,
            seed: 42,
            restarts: 1,
            cluster_on: ClusterOn::Detrended,
            standardize: true,
            max_iter: 300,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateModel {
    pub k: usize,
    /// Seed of the winning run.
    pub seed: u64,
    /// Centroids in the clustering space, in letter order.
    pub centroids: Vec<Vec<f64>>,
    /// Original KMeans cluster id of each letter.
    pub centroid_order: Vec<usize>,
    pub labels: Vec<State>,
    pub inertia: f64,
    pub standardization: Standardization,
}

/// Standardize, cluster, relabel and count transitions.
pub fn fit_state_space(
    series: &FeatureSeries,
    cfg: &StateConfig,
) -> Result<(StateModel, TransitionMatrix)> {
    let vectors: &[FeatureVector] = match cfg.cluster_on {
        ClusterOn::Raw => &series.raw,
        ClusterOn::Detrended => series
            .detrended
            .as_deref()
            .ok_or_else(|| Error::Validation("series has not been detrended".into()))?,
    };
    if cfg.k == 0 || cfg.k > MAX_STATES {
        return Err(Error::InvalidParameter(format!(
            "k must lie in 1..={MAX_STATES}, got {}",
            cfg.k
        )));
    }
    let required = cfg.k.max(2);
    if vectors.len() < required {
        return Err(Error::InsufficientSnapshots {
            available: vectors.len(),
            required,
        });
    }
    let points: Vec<Vec<f64>> = vectors.iter().map(|f| f.to_array().to_vec()).collect();
    let (points, standardization) = if cfg.standardize {
        standardize(&points)?
    } else {
        (points, Standardization::identity(2))
    };
    let kcfg = KMeansConfig {
        k: cfg.k,
        seed: cfg.seed,
        max_iter: cfg.max_iter,
        tol: cfg.tol,
    };
    let fit = kmeans_best_of(&points, &kcfg, cfg.restarts)?;
    let relabeled = relabel_states(&fit.centroids, &fit.assignments)?;
    let transitions = transition_matrix(&relabeled.labels, cfg.k)?;
    Ok((
        StateModel {
            k: cfg.k,
            seed: fit.seed,
            centroids: relabeled.centroids,
            centroid_order: relabeled.order,
            labels: relabeled.labels,
            inertia: fit.inertia,
            standardization,
        },
        transitions,
    ))
}
