//! Lloyd's algorithm with seeded k-means++ initialization.
//!
//! Everything is deterministic for a fixed seed: the PRNG is ChaCha8, ties in
//! assignment go to the lowest centroid index, and all reductions run in
//! point-index order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Stop once no centroid moves farther than this.
    pub tol: f64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            max_iter: 300,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    pub seed: u64,
    pub iterations: usize,
    /// Inertia after every assignment step, ending with the final one.
    pub inertia_history: Vec<f64>,
}

impl KMeansFit {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centroids.len()];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest centroid and its squared distance; ties go to the
/// lower index.
pub fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = squared_distance(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

pub fn inertia(points: &[Vec<f64>], centroids: &[Vec<f64>], assignments: &[usize]) -> f64 {
    points
        .iter()
        .zip(assignments)
        .map(|(p, &a)| squared_distance(p, &centroids[a]))
        .sum()
}

fn validate(points: &[Vec<f64>], k: usize) -> Result<usize> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    if points.len() < k {
        return Err(Error::InsufficientSnapshots {
            available: points.len(),
            required: k,
        });
    }
    let d = points[0].len();
    if d == 0 {
        return Err(Error::Validation(
            "points must have at least one coordinate".into(),
        ));
    }
    for (i, p) in points.iter().enumerate() {
        if p.len() != d {
            return Err(Error::Validation(format!(
                "point {i} has {} coordinates, expected {d}",
                p.len()
            )));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "point {i} has a non-finite coordinate"
            )));
        }
    }
    Ok(d)
}

fn kmeans_plus_plus(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.gen_range(0..n)].clone());
    let mut dist: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &d) in dist.iter().enumerate() {
                if d <= 0.0 {
                    continue;
                }
                acc += d;
                chosen = Some(i);
                if acc > target {
                    break;
                }
            }
            chosen.expect("positive total has a positive entry")
        } else {
            rng.gen_range(0..n)
        };
        let c = points[pick].clone();
        for (d, p) in dist.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let mut total = 0.0;
    let labels = points
        .iter()
        .map(|p| {
            let (c, d) = nearest(p, centroids);
            total += d;
            c
        })
        .collect();
    (labels, total)
}

/// Give every empty cluster the point lying farthest from its own centroid,
/// taken from a cluster that can spare it.
fn repair_empty(points: &[Vec<f64>], centroids: &[Vec<f64>], labels: &mut [usize]) {
    let k = centroids.len();
    loop {
        let mut sizes = vec![0usize; k];
        for &l in labels.iter() {
            sizes[l] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let mut best: Option<(usize, f64)> = None;
        for (i, p) in points.iter().enumerate() {
            if sizes[labels[i]] < 2 {
                continue;
            }
            let d = squared_distance(p, &centroids[labels[i]]);
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((i, d));
            }
        }
        let (i, _) = best.expect("n >= k leaves a cluster with a spare point");
        labels[i] = empty;
    }
}

fn means(points: &[Vec<f64>], labels: &[usize], k: usize, d: usize) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(p) {
            *s += v;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        debug_assert!(c > 0);
        for v in s.iter_mut() {
            *v /= c as f64;
        }
    }
    sums
}

/// Cluster `points` into `k` groups with default iteration limits.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeansFit> {
    kmeans_with(points, &KMeansConfig::new(k, seed))
}

pub fn kmeans_with(points: &[Vec<f64>], cfg: &KMeansConfig) -> Result<KMeansFit> {
    let d = validate(points, cfg.k)?;
    if cfg.tol.is_nan() || cfg.tol < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tol must be >= 0, got {}",
            cfg.tol
        )));
    }
    let k = cfg.k;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut centroids = kmeans_plus_plus(points, k, &mut rng);
    let (mut labels, first) = assign(points, &centroids);
    let mut history = vec![first];
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        iterations += 1;
        repair_empty(points, &centroids, &mut labels);
        let updated = means(points, &labels, k, d);
        let shift = centroids
            .iter()
            .zip(&updated)
            .map(|(a, b)| squared_distance(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = updated;
        let (next, total) = assign(points, &centroids);
        history.push(total);
        let stable = next == labels;
        labels = next;
        let all_used = {
            let mut used = vec![false; k];
            labels.iter().for_each(|&l| used[l] = true);
            used.into_iter().all(|u| u)
        };
        if (stable || shift < cfg.tol) && all_used {
            break;
        }
    }

    let inertia = *history.last().expect("at least one assignment");
    Ok(KMeansFit {
        centroids,
        assignments: labels,
        inertia,
        seed: cfg.seed,
        iterations,
        inertia_history: history,
    })
}

/// Run with seeds `seed, seed+1, ..., seed+restarts-1` and keep the lowest
/// inertia (earliest seed on ties).
pub fn kmeans_best_of(
    points: &[Vec<f64>],
    cfg: &KMeansConfig,
    restarts: usize,
) -> Result<KMeansFit> {
    if restarts == 0 {
        return Err(Error::InvalidParameter("restarts must be >= 1".into()));
    }
    let mut best: Option<KMeansFit> = None;
    for r in 0..restarts as u64 {
        let run = kmeans_with(
            points,
            &KMeansConfig {
                seed: cfg.seed.wrapping_add(r),
                ..*cfg
            },
        )?;
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("restarts >= 1"))
}
