//! k-means on reduced embeddings and centroid-nearest selection.

use ndarray::{Array2, ArrayView1};
use rand::Rng;

use crate::reduce::squared_distance;
use crate::rng;
use crate::{Error, Result};

pub const MAX_ITERATIONS: usize = 300;
pub const SHIFT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// `k × d`.
    pub centroids: Array2<f64>,
    pub labels: Vec<usize>,
    pub inertia: f64,
}

fn nearest_centroid(centroids: &Array2<f64>, x: ArrayView1<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, row) in centroids.rows().into_iter().enumerate() {
        let d = squared_distance(x, row);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Nearest centroid per row, ties to the lowest centroid index.
pub fn assign_labels(clustering: &Clustering, points: &Array2<f64>) -> Result<Vec<usize>> {
    if points.ncols() != clustering.centroids.ncols() {
        return Err(Error::shape(format!(
            "points have {} columns, centroids {}",
            points.ncols(),
            clustering.centroids.ncols()
        )));
    }
    Ok(points.rows().into_iter().map(|r| nearest_centroid(&clustering.centroids, r).0).collect())
}

pub fn inertia(points: &Array2<f64>, centroids: &Array2<f64>, labels: &[usize]) -> f64 {
    points
        .rows()
        .into_iter()
        .zip(labels)
        .map(|(r, &l)| squared_distance(r, centroids.row(l)))
        .sum()
}

fn plus_plus(points: &Array2<f64>, k: usize, rng: &mut rng::Rng) -> Array2<f64> {
    let n = points.nrows();
    let mut centroids = Array2::zeros((k, points.ncols()));
    let first = rng.random_range(0..n);
    centroids.row_mut(0).assign(&points.row(first));
    let mut d2: Vec<f64> = points.rows().into_iter().map(|r| squared_distance(r, points.row(first))).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if u < d {
                    pick = i;
                    break;
                }
                u -= d;
            }
            // Guard against rounding landing on a zero-weight point.
            if d2[pick] == 0.0 {
                pick = d2.iter().rposition(|&d| d > 0.0).unwrap_or(pick);
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).assign(&points.row(pick));
        for (i, r) in points.rows().into_iter().enumerate() {
            d2[i] = d2[i].min(squared_distance(r, points.row(pick)));
        }
    }
    centroids
}

/// k-means++ seeding followed by Lloyd iterations. Also returns the inertia
/// after every assignment step.
pub fn kmeans_traced(points: &Array2<f64>, k: usize, seed: u64) -> Result<(Clustering, Vec<f64>)> {
    let (n, dim) = points.dim();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k must satisfy 1 <= k <= n ({k} vs {n})")));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("points contain non-finite values"));
    }
    let mut rng = rng::seeded(seed);
    let mut centroids = plus_plus(points, k, &mut rng);
    let mut labels = vec![0; n];
    let mut trace = Vec::new();

    for _ in 0..MAX_ITERATIONS {
        for (i, r) in points.rows().into_iter().enumerate() {
            labels[i] = nearest_centroid(&centroids, r).0;
        }
        trace.push(inertia(points, &centroids, &labels));

        let mut sums = Array2::<f64>::zeros((k, dim));
        let mut counts = vec![0usize; k];
        for (r, &l) in points.rows().into_iter().zip(&labels) {
            sums.row_mut(l).scaled_add(1.0, &r);
            counts[l] += 1;
        }
        let mut updated = centroids.clone();
        for (c, &n) in counts.iter().enumerate() {
            if n > 0 {
                updated.row_mut(c).assign(&(&sums.row(c) / n as f64));
            }
        }
        // Reseed each empty cluster at the point farthest from its own centroid.
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let far = (0..n)
                .filter(|&i| counts[labels[i]] > 1)
                .max_by(|&i, &j| {
                    let di = squared_distance(points.row(i), updated.row(labels[i]));
                    let dj = squared_distance(points.row(j), updated.row(labels[j]));
                    di.total_cmp(&dj).then(j.cmp(&i))
                });
            if let Some(i) = far {
                counts[labels[i]] -= 1;
                labels[i] = c;
                counts[c] = 1;
                updated.row_mut(c).assign(&points.row(i));
            }
        }
        let shift = centroids
            .rows()
            .into_iter()
            .zip(updated.rows())
            .map(|(a, b)| squared_distance(a, b))
            .fold(0.0, f64::max)
            .sqrt();
        centroids = updated;
        if shift < SHIFT_TOLERANCE {
            break;
        }
    }
    for (i, r) in points.rows().into_iter().enumerate() {
        labels[i] = nearest_centroid(&centroids, r).0;
    }
    let inertia = inertia(points, &centroids, &labels);
    trace.push(inertia);
    Ok((Clustering { centroids, labels, inertia }, trace))
}

pub fn kmeans(points: &Array2<f64>, k: usize, seed: u64) -> Result<Clustering> {
    kmeans_traced(points, k, seed).map(|(c, _)| c)
}

/// For each centroid in index order, the closest not-yet-chosen candidate.
/// `candidates[i]` is the sample id of `points` row `i`.
pub fn nearest_to_centroids(clustering: &Clustering, points: &Array2<f64>, candidates: &[usize]) -> Result<Vec<usize>> {
    let k = clustering.centroids.nrows();
    if candidates.len() != points.nrows() {
        return Err(Error::shape(format!(
            "{} candidate ids for {} points",
            candidates.len(),
            points.nrows()
        )));
    }
    if candidates.len() < k {
        return Err(Error::invalid(format!("{} candidates for {k} centroids", candidates.len())));
    }
    if points.ncols() != clustering.centroids.ncols() {
        return Err(Error::shape("points and centroids differ in dimension"));
    }
    let mut taken = vec![false; candidates.len()];
    let mut out = Vec::with_capacity(k);
    for c in clustering.centroids.rows() {
        let best = (0..candidates.len())
            .filter(|&i| !taken[i])
            .min_by(|&i, &j| {
                squared_distance(points.row(i), c)
                    .total_cmp(&squared_distance(points.row(j), c))
                    .then(candidates[i].cmp(&candidates[j]))
            })
            .expect("candidates >= k");
        taken[best] = true;
        out.push(candidates[best]);
    }
    Ok(out)
}
