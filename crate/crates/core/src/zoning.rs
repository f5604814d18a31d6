//! Position-based zone partitioning.
//!
//! Zones are learned with k-means on ground-plane UE positions
//! (k-means++ seeding followed by Lloyd iterations) and positions are
//! classified to the nearest centroid. Zone identifiers are stable values
//! `0..B` ordered by centroid (x, then y); display labels are 1-based.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;
use crate::scene::ChannelSample;

/// Index of a zone, `0..B`. Displayed 1-based via [`ZoneId::label`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ZoneId(pub usize);

impl ZoneId {
    /// 1-based display label.
    pub fn label(&self) -> usize {
        self.0 + 1
    }
}

impl std::fmt::Display for ZoneId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// A learned partition of the ground plane into `B` zones.
#[derive(Debug, Clone, PartialEq)]
pub struct ZonePartition {
    /// Centroids in (x, y), sorted by x then y.
    centroids: Vec<[f64; 2]>,
}

impl ZonePartition {
    pub fn new(mut centroids: Vec<[f64; 2]>) -> Result<Self> {
        if centroids.is_empty() {
            return Err(Error::config("a partition needs at least one zone"));
        }
        if centroids
            .iter()
            .any(|c| !c[0].is_finite() || !c[1].is_finite())
        {
            return Err(Error::data("centroids must be finite"));
        }
        centroids.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self { centroids })
    }

    pub fn num_zones(&self) -> usize {
        self.centroids.len()
    }

    pub fn centroids(&self) -> &[[f64; 2]] {
        &self.centroids
    }
}

fn dist_sq(p: [f64; 2], q: [f64; 2]) -> f64 {
    let dx = p[0] - q[0];
    let dy = p[1] - q[1];
    dx * dx + dy * dy
}

fn ground(p: [f64; 3]) -> [f64; 2] {
    [p[0], p[1]]
}

/// Nearest-centroid zone for a position; ties break to the smallest id.
pub fn classify_position(partition: &ZonePartition, position: [f64; 3]) -> ZoneId {
    let p = ground(position);
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, &c) in partition.centroids.iter().enumerate() {
        let d = dist_sq(p, c);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    ZoneId(best)
}

/// Sum of squared distances from each point to its assigned centroid.
fn inertia(points: &[[f64; 2]], centroids: &[[f64; 2]], assign: &[usize]) -> f64 {
    points
        .iter()
        .zip(assign)
        .map(|(&p, &a)| dist_sq(p, centroids[a]))
        .sum()
}

fn assign_points(points: &[[f64; 2]], centroids: &[[f64; 2]]) -> Vec<usize> {
    points
        .iter()
        .map(|&p| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (i, &c) in centroids.iter().enumerate() {
                let d = dist_sq(p, c);
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
            best
        })
        .collect()
}

/// k-means++ seeding: first centroid uniform, the rest sampled with
/// probability proportional to squared distance from the chosen set.
fn seed_centroids(points: &[[f64; 2]], b: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = rng::stream(seed);
    let mut centroids = Vec::with_capacity(b);
    centroids.push(points[rng.gen_range(0..points.len())]);
    let mut d2: Vec<f64> = points.iter().map(|&p| dist_sq(p, centroids[0])).collect();
    while centroids.len() < b {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            // All mass collapsed (duplicate points): fall back to uniform.
            points[rng.gen_range(0..points.len())]
        } else {
            let mut target = rng.gen_range(0.0..total);
            let mut chosen = points.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            points[chosen]
        };
        centroids.push(next);
        for (i, &p) in points.iter().enumerate() {
            d2[i] = d2[i].min(dist_sq(p, next));
        }
    }
    centroids
}

/// Learns a `B`-zone partition from sample positions with k-means.
///
/// Runs Lloyd iterations to convergence (assignment fixpoint or 300
/// iterations); an empty cluster is reseeded to the point farthest from
/// its centroid. The objective is verified non-increasing across
/// iterations.
pub fn learn_partition(positions: &[[f64; 3]], b: usize, seed: u64) -> Result<ZonePartition> {
    if b == 0 {
        return Err(Error::config("zone count must be at least 1"));
    }
    if positions.len() < b {
        return Err(Error::data(format!(
            "need at least {} positions to learn {} zones, got {}",
            b,
            b,
            positions.len()
        )));
    }
    if positions
        .iter()
        .any(|p| !p[0].is_finite() || !p[1].is_finite())
    {
        return Err(Error::data("positions must be finite"));
    }
    let points: Vec<[f64; 2]> = positions.iter().map(|&p| ground(p)).collect();

    let mut centroids = seed_centroids(&points, b, seed);
    let mut assign = assign_points(&points, &centroids);
    let mut last_inertia = inertia(&points, &centroids, &assign);
    for _ in 0..300 {
        // Update step: mean of each cluster.
        let mut sums = vec![[0.0f64; 2]; b];
        let mut counts = vec![0usize; b];
        for (&p, &a) in points.iter().zip(&assign) {
            sums[a][0] += p[0];
            sums[a][1] += p[1];
            counts[a] += 1;
        }
        for i in 0..b {
            if counts[i] > 0 {
                centroids[i] = [sums[i][0] / counts[i] as f64, sums[i][1] / counts[i] as f64];
            }
        }
        // Reseed any empty cluster to the globally farthest point.
        for i in 0..b {
            if counts[i] == 0 {
                let far = points
                    .iter()
                    .zip(&assign)
                    .max_by(|(p1, a1), (p2, a2)| {
                        dist_sq(**p1, centroids[**a1])
                            .partial_cmp(&dist_sq(**p2, centroids[**a2]))
                            .unwrap()
                    })
                    .map(|(&p, _)| p)
                    .unwrap();
                centroids[i] = far;
            }
        }

        let new_assign = assign_points(&points, &centroids);
        let new_inertia = inertia(&points, &centroids, &new_assign);
        debug_assert!(
            new_inertia <= last_inertia + 1e-9 * last_inertia.max(1.0),
            "k-means objective increased: {last_inertia} -> {new_inertia}"
        );
        let converged = new_assign == assign;
        assign = new_assign;
        last_inertia = new_inertia;
        if converged {
            break;
        }
    }
    ZonePartition::new(centroids)
}

/// Splits a dataset by classified zone. The returned buckets are disjoint
/// and cover the input exactly; bucket `i` belongs to `ZoneId(i)`.
pub fn partition_dataset(
    partition: &ZonePartition,
    samples: &[ChannelSample],
) -> Vec<Vec<ChannelSample>> {
    let mut buckets: Vec<Vec<ChannelSample>> = vec![Vec::new(); partition.num_zones()];
    for s in samples {
        let z = classify_position(partition, s.position);
        buckets[z.0].push(s.clone());
    }
    debug_assert_eq!(
        buckets.iter().map(Vec::len).sum::<usize>(),
        samples.len(),
        "partition buckets must cover the dataset"
    );
    buckets
}

/// Best zone in hindsight for one encoded sample: the zone whose
/// reconstruction error is smallest. `errors[i]` is the reconstruction
/// error of zone `i`'s model on the sample; ties break to the smallest id.
pub fn oracle_zone_assignment(errors: &[f64]) -> Result<ZoneId> {
    if errors.is_empty() {
        return Err(Error::data("oracle assignment needs at least one zone error"));
    }
    if errors.iter().any(|e| e.is_nan()) {
        return Err(Error::numeric("oracle assignment received NaN error"));
    }
    let mut best = 0;
    for (i, &e) in errors.iter().enumerate() {
        if e < errors[best] {
            best = i;
        }
    }
    Ok(ZoneId(best))
}

/// Convenience: mean ground-plane position of a sample set.
pub fn mean_position(samples: &[ChannelSample]) -> Option<[f64; 2]> {
    if samples.is_empty() {
        return None;
    }
    let mut sum = [0.0f64; 2];
    for s in samples {
        sum[0] += s.position[0];
        sum[1] += s.position[1];
    }
    Some([sum[0] / samples.len() as f64, sum[1] / samples.len() as f64])
}
