//! UMAP: exact kNN graph → smooth-kNN membership strengths → fuzzy union →
//! negative-sampling SGD layout.

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::curve::fit_ab;
use super::knn::{knn_excluding_self, knn_query, Neighbors};
use crate::rng;
use crate::{Error, Result};

const SIGMA_ITERATIONS: usize = 64;
const SIGMA_TOLERANCE: f64 = 1e-5;
const MIN_SIGMA_SCALE: f64 = 1e-3;
const TRANSFORM_EPOCHS: usize = 30;
const GRAD_CLIP: f64 = 4.0;
const INIT_RANGE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Euclidean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UmapConfig {
    /// Neighbourhood size, counting the point itself.
    pub n_neighbors: usize,
    pub min_dist: f64,
    pub n_components: usize,
    pub metric: Metric,
    pub n_epochs: usize,
    pub negative_sample_rate: usize,
    pub initial_lr: f64,
    pub seed: u64,
}

impl Default for UmapConfig {
    fn default() -> Self {
        UmapConfig {
            n_neighbors: 15,
            min_dist: 0.1,
            n_components: 2,
            metric: Metric::Euclidean,
            n_epochs: 500,
            negative_sample_rate: 5,
            initial_lr: 1.0,
            seed: 0,
        }
    }
}

impl UmapConfig {
    /// Defaults, with `n_neighbors` shrunk for pools smaller than 16 points.
    pub fn for_points(n_points: usize, seed: u64) -> Self {
        let mut cfg = UmapConfig { seed, ..Default::default() };
        cfg.n_neighbors = cfg.n_neighbors.min(n_points.saturating_sub(1)).max(2);
        cfg
    }

    pub fn validate(&self, n_points: usize) -> Result<()> {
        if self.n_neighbors < 2 || self.n_neighbors >= n_points {
            return Err(Error::invalid(format!(
                "n_neighbors must satisfy 2 <= n_neighbors < n_points ({} vs {n_points})",
                self.n_neighbors
            )));
        }
        if self.n_components == 0 {
            return Err(Error::invalid("n_components must be >= 1"));
        }
        if !(self.min_dist > 0.0 && self.min_dist < 1.0) {
            return Err(Error::invalid(format!("min_dist must be in (0, 1), got {}", self.min_dist)));
        }
        if self.n_epochs == 0 || self.negative_sample_rate == 0 || self.initial_lr.is_nan() || self.initial_lr <= 0.0 {
            return Err(Error::invalid("n_epochs, negative_sample_rate and initial_lr must be positive"));
        }
        Ok(())
    }
}

/// Directed edge `head → tail` of the fuzzy graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub head: usize,
    pub tail: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UmapModel {
    pub config: UmapConfig,
    pub training: Array2<f64>,
    /// Symmetric: every `(i, j, w)` has a matching `(j, i, w)`. Sorted by
    /// `(head, tail)`, no self-edges.
    pub graph: Vec<Edge>,
    pub embedding: Array2<f64>,
    pub a: f64,
    pub b: f64,
}

/// Probabilistic t-conorm used to symmetrise the graph.
pub fn fuzzy_union(w1: f64, w2: f64) -> f64 {
    w1 + w2 - w1 * w2
}

/// Per-point `(ρ, σ)`: ρ is the distance to the nearest neighbour and σ is
/// found by bisection so that `Σⱼ exp(−max(0, dⱼ − ρ)/σ) = log2(n_neighbors)`.
pub fn smooth_knn(distances: &[f64], n_neighbors: usize) -> (f64, f64) {
    let target = (n_neighbors as f64).log2();
    let rho = distances.first().copied().unwrap_or(0.0);
    let (mut lo, mut hi, mut mid) = (0.0f64, f64::INFINITY, 1.0f64);
    for _ in 0..SIGMA_ITERATIONS {
        let psum: f64 = distances.iter().map(|&d| (-(d - rho).max(0.0) / mid).exp()).sum();
        if (psum - target).abs() < SIGMA_TOLERANCE {
            break;
        }
        if psum > target {
            hi = mid;
            mid = (lo + hi) / 2.0;
        } else {
            lo = mid;
            mid = if hi.is_infinite() { mid * 2.0 } else { (lo + hi) / 2.0 };
        }
    }
    let mean = distances.iter().sum::<f64>() / distances.len().max(1) as f64;
    if rho > 0.0 {
        mid = mid.max(MIN_SIGMA_SCALE * mean);
    }
    (rho, mid.max(f64::MIN_POSITIVE))
}

fn membership(nn: &Neighbors, n_neighbors: usize) -> Vec<Vec<f64>> {
    nn.distances
        .iter()
        .map(|ds| {
            let (rho, sigma) = smooth_knn(ds, n_neighbors);
            ds.iter().map(|&d| (-(d - rho).max(0.0) / sigma).exp()).collect()
        })
        .collect()
}

fn symmetric_graph(nn: &Neighbors, weights: &[Vec<f64>]) -> Vec<Edge> {
    use std::collections::BTreeMap;
    let mut directed: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (i, (idx, ws)) in nn.indices.iter().zip(weights).enumerate() {
        for (&j, &w) in idx.iter().zip(ws) {
            directed.insert((i, j), w);
        }
    }
    let mut sym: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (&(i, j), &w) in &directed {
        let back = directed.get(&(j, i)).copied().unwrap_or(0.0);
        let u = fuzzy_union(w, back);
        sym.insert((i, j), u);
        sym.insert((j, i), u);
    }
    sym.into_iter()
        .filter(|&(_, w)| w > 0.0)
        .map(|((head, tail), weight)| Edge { head, tail, weight })
        .collect()
}

struct Schedule {
    per_sample: Vec<f64>,
    next: Vec<f64>,
    per_negative: Vec<f64>,
    next_negative: Vec<f64>,
}

impl Schedule {
    fn new(edges: &[Edge], n_epochs: usize, negative_rate: usize) -> (Vec<Edge>, Self) {
        let max_w = edges.iter().map(|e| e.weight).fold(0.0, f64::max);
        let kept: Vec<Edge> = edges
            .iter()
            .copied()
            .filter(|e| e.weight >= max_w / n_epochs as f64)
            .collect();
        let per_sample: Vec<f64> = kept.iter().map(|e| max_w / e.weight).collect();
        let per_negative: Vec<f64> = per_sample.iter().map(|p| p / negative_rate as f64).collect();
        let s = Schedule {
            next: per_sample.clone(),
            next_negative: per_negative.clone(),
            per_sample,
            per_negative,
        };
        (kept, s)
    }
}

#[allow(clippy::too_many_arguments)]
fn sgd_layout(
    head_emb: &mut Array2<f64>,
    tail_emb: Option<&Array2<f64>>,
    edges: &[Edge],
    n_epochs: usize,
    negative_rate: usize,
    initial_lr: f64,
    a: f64,
    b: f64,
    rng: &mut rng::Rng,
) {
    let move_other = tail_emb.is_none();
    let n_tail = tail_emb.map_or(head_emb.nrows(), |t| t.nrows());
    let dim = head_emb.ncols();
    let (edges, mut sched) = Schedule::new(edges, n_epochs, negative_rate);
    let mut current = vec![0.0; dim];
    let mut other = vec![0.0; dim];

    for epoch in 0..n_epochs {
        let n = epoch as f64;
        let alpha = initial_lr * (1.0 - n / n_epochs as f64);
        for (e, edge) in edges.iter().enumerate() {
            if sched.next[e] > n {
                continue;
            }
            let (j, k) = (edge.head, edge.tail);
            for d in 0..dim {
                current[d] = head_emb[[j, d]];
                other[d] = match tail_emb {
                    Some(t) => t[[k, d]],
                    None => head_emb[[k, d]],
                };
            }
            let dist2: f64 = current.iter().zip(&other).map(|(c, o)| (c - o) * (c - o)).sum();
            let coeff = if dist2 > 0.0 {
                -2.0 * a * b * dist2.powf(b - 1.0) / (a * dist2.powf(b) + 1.0)
            } else {
                0.0
            };
            for d in 0..dim {
                let g = (coeff * (current[d] - other[d])).clamp(-GRAD_CLIP, GRAD_CLIP);
                head_emb[[j, d]] += g * alpha;
                if move_other {
                    head_emb[[k, d]] -= g * alpha;
                }
            }
            sched.next[e] += sched.per_sample[e];

            let n_neg = ((n - sched.next_negative[e]) / sched.per_negative[e]).floor().max(0.0) as usize;
            for _ in 0..n_neg {
                let s = rng.random_range(0..n_tail);
                let mut dist2 = 0.0;
                for d in 0..dim {
                    current[d] = head_emb[[j, d]];
                    other[d] = match tail_emb {
                        Some(t) => t[[s, d]],
                        None => head_emb[[s, d]],
                    };
                    dist2 += (current[d] - other[d]).powi(2);
                }
                if dist2 == 0.0 && move_other && s == j {
                    continue;
                }
                let coeff = if dist2 > 0.0 {
                    2.0 * b / ((0.001 + dist2) * (a * dist2.powf(b) + 1.0))
                } else {
                    0.0
                };
                for d in 0..dim {
                    let g = if coeff > 0.0 {
                        (coeff * (current[d] - other[d])).clamp(-GRAD_CLIP, GRAD_CLIP)
                    } else {
                        GRAD_CLIP
                    };
                    head_emb[[j, d]] += g * alpha;
                }
            }
            sched.next_negative[e] += n_neg as f64 * sched.per_negative[e];
        }
    }
}

pub fn umap_fit(features: &Array2<f64>, config: &UmapConfig) -> Result<UmapModel> {
    let n = features.nrows();
    config.validate(n)?;
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("features contain non-finite values"));
    }
    let nn = knn_excluding_self(features, config.n_neighbors - 1);
    let weights = membership(&nn, config.n_neighbors);
    let graph = symmetric_graph(&nn, &weights);
    let (a, b) = fit_ab(config.min_dist);

    let mut rng = rng::seeded(config.seed);
    let mut embedding = Array2::from_shape_simple_fn((n, config.n_components), || {
        rng.random_range(-INIT_RANGE..INIT_RANGE)
    });
    sgd_layout(
        &mut embedding,
        None,
        &graph,
        config.n_epochs,
        config.negative_sample_rate,
        config.initial_lr,
        a,
        b,
        &mut rng,
    );
    Ok(UmapModel { config: config.clone(), training: features.clone(), graph, embedding, a, b })
}

/// Embed new points against a fitted model: weighted mean of neighbour
/// embeddings, then SGD with the training embedding held fixed.
pub fn umap_transform(model: &UmapModel, features: &Array2<f64>) -> Result<Array2<f64>> {
    let dim = model.config.n_components;
    if features.nrows() == 0 {
        return Ok(Array2::zeros((0, dim)));
    }
    if features.ncols() != model.training.ncols() {
        return Err(Error::shape(format!(
            "features have {} columns, model was fitted on {}",
            features.ncols(),
            model.training.ncols()
        )));
    }
    let k = model.config.n_neighbors.min(model.training.nrows());
    let nn = knn_query(&model.training, features, k);
    let weights = membership(&nn, model.config.n_neighbors);

    let m = features.nrows();
    let mut emb = Array2::zeros((m, dim));
    let mut edges = Vec::new();
    for i in 0..m {
        let total: f64 = weights[i].iter().sum();
        for (&j, &w) in nn.indices[i].iter().zip(&weights[i]) {
            for d in 0..dim {
                emb[[i, d]] += w / total * model.embedding[[j, d]];
            }
            edges.push(Edge { head: i, tail: j, weight: w });
        }
    }
    let mut rng = rng::seeded(rng::derive(model.config.seed, 0x7A45));
    sgd_layout(
        &mut emb,
        Some(&model.embedding),
        &edges,
        TRANSFORM_EPOCHS,
        model.config.negative_sample_rate,
        model.config.initial_lr / 4.0,
        model.a,
        model.b,
        &mut rng,
    );
    Ok(emb)
}
