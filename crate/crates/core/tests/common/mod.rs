//! Brute-force oracles and fixtures shared by the integration tests. Nothing
//! here calls into the library's own implementations of the quantities it
//! checks.
#![allow(dead_code)]

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `per_blob` points around each of `n_blobs` centres `10·e_k` in `dim`
/// dimensions (centres are 10√2 apart), with isotropic noise `sd`.
pub fn blobs(n_blobs: usize, per_blob: usize, dim: usize, sd: f64, seed: u64) -> (Array2<f64>, Vec<usize>) {
    let mut r = rng(seed);
    let noise = Normal::new(0.0, sd).unwrap();
    let n = n_blobs * per_blob;
    let labels: Vec<usize> = (0..n).map(|i| i / per_blob).collect();
    let x = Array2::from_shape_fn((n, dim), |(i, d)| {
        let c = if d == labels[i] { 10.0 } else { 0.0 };
        c + noise.sample(&mut r)
    });
    (x, labels)
}

fn choose2(n: usize) -> f64 {
    (n * n.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index from the contingency table.
pub fn adjusted_rand(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0usize; kb]; ka];
    for (&i, &j) in a.iter().zip(b) {
        table[i][j] += 1;
    }
    let sum_ij: f64 = table.iter().flatten().map(|&n| choose2(n)).sum();
    let sum_a: f64 = table.iter().map(|row| choose2(row.iter().sum())).sum();
    let sum_b: f64 = (0..kb).map(|j| choose2(table.iter().map(|r| r[j]).sum())).sum();
    let total = choose2(a.len());
    let expected = sum_a * sum_b / total;
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        return 1.0;
    }
    (sum_ij - expected) / (max - expected)
}

fn sq(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Other points ordered by distance from `i`, ties by index.
fn ranking(x: &Array2<f64>, i: usize) -> Vec<usize> {
    let mut others: Vec<usize> = (0..x.nrows()).filter(|&j| j != i).collect();
    others.sort_by(|&a, &b| sq(x.row(i), x.row(a)).total_cmp(&sq(x.row(i), x.row(b))).then(a.cmp(&b)));
    others
}

/// Trustworthiness of embedding `y` of `x` at neighbourhood size `k`:
/// `1 − 2/(nk(2n−3k−1)) Σᵢ Σ_{j ∈ Uₖ(i)} (r(i,j) − k)`, where `Uₖ(i)` are
/// the embedded neighbours of `i` that are not among its `k` nearest in the
/// input space and `r(i,j)` is the input-space rank.
pub fn trustworthiness(x: &Array2<f64>, y: &Array2<f64>, k: usize) -> f64 {
    let n = x.nrows();
    let mut penalty = 0.0;
    for i in 0..n {
        let hi = ranking(x, i);
        let mut rank = vec![0usize; n];
        for (r, &j) in hi.iter().enumerate() {
            rank[j] = r + 1;
        }
        for &j in ranking(y, i).iter().take(k) {
            if rank[j] > k {
                penalty += (rank[j] - k) as f64;
            }
        }
    }
    let (n, k) = (n as f64, k as f64);
    1.0 - 2.0 / (n * k * (2.0 * n - 3.0 * k - 1.0)) * penalty
}

/// Mean silhouette coefficient.
pub fn silhouette(x: &Array2<f64>, labels: &[usize]) -> f64 {
    let n = x.nrows();
    let k = labels.iter().max().unwrap() + 1;
    let mut total = 0.0;
    for i in 0..n {
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for j in 0..n {
            if j != i {
                sums[labels[j]] += sq(x.row(i), x.row(j)).sqrt();
                counts[labels[j]] += 1;
            }
        }
        let own = labels[i];
        if counts[own] == 0 {
            continue;
        }
        let a = sums[own] / counts[own] as f64;
        let b = (0..k)
            .filter(|&c| c != own && counts[c] > 0)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        total += (b - a) / a.max(b);
    }
    total / n as f64
}

pub fn random_mask(h: usize, w: usize, density: f64, r: &mut ChaCha8Rng) -> Array2<u8> {
    Array2::from_shape_fn((h, w), |_| u8::from(r.random_bool(density)))
}

/// Foreground pixels with a background (or out-of-image) 4-neighbour.
pub fn boundary_oracle(m: &Array2<u8>) -> Vec<(usize, usize)> {
    let (h, w) = m.dim();
    let bg = |y: isize, x: isize| y < 0 || x < 0 || y >= h as isize || x >= w as isize || m[[y as usize, x as usize]] == 0;
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let (yi, xi) = (y as isize, x as isize);
            if m[[y, x]] == 1 && (bg(yi - 1, xi) || bg(yi + 1, xi) || bg(yi, xi - 1) || bg(yi, xi + 1)) {
                out.push((y, x));
            }
        }
    }
    out
}

/// All-pairs directed distances from each point of `a` to the set `b`.
fn directed(a: &[(usize, usize)], b: &[(usize, usize)], spacing: f64) -> Vec<f64> {
    a.iter()
        .map(|&(y, x)| {
            b.iter()
                .map(|&(v, u)| ((y as f64 - v as f64).powi(2) + (x as f64 - u as f64).powi(2)).sqrt() * spacing)
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// `(avg_hausdorff, mean_surface_distance, hd95)` by brute force, or `None`
/// when either boundary is empty.
pub fn distance_oracle(pred: &Array2<u8>, gt: &Array2<u8>, spacing: f64) -> Option<(f64, f64, f64)> {
    let (p, g) = (boundary_oracle(pred), boundary_oracle(gt));
    if p.is_empty() || g.is_empty() {
        return None;
    }
    let dpg = directed(&p, &g, spacing);
    let dgp = directed(&g, &p, spacing);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let avg_h = mean(&dpg).max(mean(&dgp));
    let msd = (dpg.iter().sum::<f64>() + dgp.iter().sum::<f64>()) / (dpg.len() + dgp.len()) as f64;
    let mut all: Vec<f64> = dpg.into_iter().chain(dgp).collect();
    all.sort_by(f64::total_cmp);
    let rank = (0.95 * all.len() as f64).ceil() as usize;
    Some((avg_h, msd, all[rank.max(1) - 1]))
}

/// 8-connected foreground components by flood fill.
pub fn components_oracle(m: &Array2<u8>) -> usize {
    let (h, w) = m.dim();
    let mut seen = Array2::<bool>::from_elem((h, w), false);
    let mut count = 0;
    for y in 0..h {
        for x in 0..w {
            if m[[y, x]] == 0 || seen[[y, x]] {
                continue;
            }
            count += 1;
            let mut stack = vec![(y, x)];
            seen[[y, x]] = true;
            while let Some((cy, cx)) = stack.pop() {
                for dy in -1isize..=1 {
                    for dx in -1isize..=1 {
                        let (ny, nx) = (cy as isize + dy, cx as isize + dx);
                        if ny < 0 || nx < 0 || ny >= h as isize || nx >= w as isize {
                            continue;
                        }
                        let (ny, nx) = (ny as usize, nx as usize);
                        if m[[ny, nx]] == 1 && !seen[[ny, nx]] {
                            seen[[ny, nx]] = true;
                            stack.push((ny, nx));
                        }
                    }
                }
            }
        }
    }
    count
}

/// Dice, precision, sensitivity and volumetric similarity by counting cells.
pub fn overlap_oracle(pred: &Array2<u8>, gt: &Array2<u8>) -> [f64; 4] {
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&p, &g) in pred.iter().zip(gt.iter()) {
        match (p, g) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            (0, 1) => fn_ += 1,
            _ => {}
        }
    }
    let both_empty = tp + fp + fn_ == 0;
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            if both_empty {
                1.0
            } else {
                0.0
            }
        } else {
            num as f64 / den as f64
        }
    };
    let (vp, vg) = ((tp + fp) as f64, (tp + fn_) as f64);
    let vs = if vp + vg == 0.0 { 1.0 } else { 1.0 - (vp - vg).abs() / (vp + vg) };
    [ratio(2 * tp, 2 * tp + fp + fn_), ratio(tp, tp + fp), ratio(tp, tp + fn_), vs]
}

/// Per-pixel binary entropy summed over the map, natural log.
pub fn entropy_oracle(probs: &Array2<f64>) -> f64 {
    let mut h = 0.0;
    for &p in probs.iter() {
        if p > 0.0 {
            h -= p * p.ln();
        }
        if p < 1.0 {
            h -= (1.0 - p) * (1.0 - p).ln();
        }
    }
    h
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Largest distance from any point to its nearest center.
pub fn covering_radius(points: &[Vec<f64>], centers: &[usize]) -> f64 {
    points
        .iter()
        .map(|p| centers.iter().map(|&c| dist(p, &points[c])).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Optimal covering radius over every choice of `k` extra centers from
/// `unlabeled`, with `labeled` always centers.
pub fn kcenter_optimum(points: &[Vec<f64>], labeled: &[usize], unlabeled: &[usize], k: usize) -> f64 {
    fn rec(points: &[Vec<f64>], chosen: &mut Vec<usize>, pool: &[usize], k: usize, best: &mut f64) {
        if k == 0 {
            *best = best.min(covering_radius(points, chosen));
            return;
        }
        for (i, &c) in pool.iter().enumerate() {
            chosen.push(c);
            rec(points, chosen, &pool[i + 1..], k - 1, best);
            chosen.pop();
        }
    }
    let mut best = f64::INFINITY;
    rec(points, &mut labeled.to_vec(), unlabeled, k, &mut best);
    best
}
