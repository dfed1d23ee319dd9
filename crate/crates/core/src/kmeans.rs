//! One-dimensional k-means for BRAM vulnerability clustering.
//!
//! Lloyd's algorithm with k-means++ seeding over per-tile fault rates.
//! Clusters come back ordered by ascending centroid, so index 0 is always
//! the low-vulnerability class. Seeding draws by normalized squared
//! distance, which makes label assignment invariant under uniform positive
//! scaling of the input (bit-exactly so for power-of-two factors).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fvm::FaultVariationMap;
use crate::seed;

/// Iteration cap for Lloyd's loop.
pub const MAX_ITERATIONS: u32 = 300;

/// Clustering outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    /// Ascending cluster centers.
    pub centroids: Vec<f64>,
    /// Cluster index per input point, aligned with `centroids`.
    pub labels: Vec<u8>,
    /// Points per cluster.
    pub sizes: Vec<usize>,
    /// `sizes` normalized by the input length.
    pub shares: Vec<f64>,
    pub iterations: u32,
    pub converged: bool,
    /// Set when the input had fewer distinct values than requested
    /// clusters; the report then carries that smaller cluster count.
    pub degenerate: bool,
}

/// Clusters `points` into (at most) `k` groups.
pub fn kmeans(points: &[f64], k: usize, seed_value: u64) -> Result<ClusterReport> {
    if points.is_empty() || k == 0 {
        return Err(Error::InvalidConfig {
            reason: "clustering needs at least one point and one cluster".into(),
        });
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidConfig { reason: "clustering input must be finite".into() });
    }

    let mut distinct: Vec<f64> = points.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    let (k, degenerate) = if distinct.len() < k { (distinct.len(), true) } else { (k, false) };

    let mut rng = seed::stream(seed::derive(seed_value, seed::TAG_KMEANS, 0));
    let mut centroids = seed_centroids(points, k, &mut rng);

    let mut labels = vec![0u8; points.len()];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let l = nearest(&centroids, *p);
            if labels[i] != l {
                labels[i] = l;
                changed = true;
            }
        }

        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for (p, l) in points.iter().zip(labels.iter()) {
            sums[*l as usize] += p;
            counts[*l as usize] += 1;
        }
        for c in 0..k {
            if counts[c] == 0 {
                // Re-seed a starved cluster at the point farthest from its
                // nearest centroid.
                let dist = |p: f64| (p - centroids[nearest(&centroids, p) as usize]).abs();
                let far = points
                    .iter()
                    .enumerate()
                    .max_by(|(_, a), (_, b)| dist(**a).partial_cmp(&dist(**b)).unwrap())
                    .map(|(i, _)| i)
                    .expect("points nonempty");
                centroids[c] = points[far];
                changed = true;
            } else {
                centroids[c] = sums[c] / counts[c] as f64;
            }
        }

        if !changed {
            converged = true;
            break;
        }
    }

    // Canonical order: ascending centroids, labels remapped to match.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|a, b| centroids[*a].partial_cmp(&centroids[*b]).unwrap());
    let mut remap = vec![0u8; k];
    for (new, old) in order.iter().enumerate() {
        remap[*old] = new as u8;
    }
    let centroids: Vec<f64> = order.iter().map(|i| centroids[*i]).collect();
    let labels: Vec<u8> = labels.iter().map(|l| remap[*l as usize]).collect();

    let mut sizes = vec![0usize; k];
    for l in &labels {
        sizes[*l as usize] += 1;
    }
    let shares = sizes.iter().map(|s| *s as f64 / points.len() as f64).collect();

    Ok(ClusterReport { centroids, labels, sizes, shares, iterations, converged, degenerate })
}

/// k-means++ seeding: first center uniform, later centers by normalized
/// squared distance to the nearest existing center.
fn seed_centroids(points: &[f64], k: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..points.len())]);
    while centroids.len() < k {
        let d2: Vec<f64> = points
            .iter()
            .map(|p| {
                let d = p - centroids[nearest(&centroids, *p) as usize];
                d * d
            })
            .collect();
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            // All remaining mass sits on existing centers; grab any point
            // not already chosen (the caller capped k at distinct count).
            let extra = points
                .iter()
                .find(|p| !centroids.contains(p))
                .expect("distinct point available");
            centroids.push(*extra);
            continue;
        }
        let r: f64 = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = points.len() - 1;
        for (i, w) in d2.iter().enumerate() {
            acc += w;
            if r < acc {
                chosen = i;
                break;
            }
        }
        centroids.push(points[chosen]);
    }
    centroids
}

fn nearest(centroids: &[f64], p: f64) -> u8 {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = (p - c).abs();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best as u8
}

/// Clusters a map's per-tile crash fault rates into three classes.
pub fn cluster_fvm(fvm: &FaultVariationMap, seed_value: u64) -> Result<ClusterReport> {
    kmeans(&fvm.crash_rates(), 3, seed_value)
}
