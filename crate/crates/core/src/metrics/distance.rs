use serde::{Deserialize, Serialize};

use super::Surface;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceMetrics {
    pub avg_hausdorff: f64,
    pub mean_surface_distance: f64,
    pub hd95: f64,
}

const FAR: f64 = 1e20;

/// Exact 1D squared distance transform (lower envelope of parabolas).
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    let cross = |q: usize, p: usize| {
        ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64))
    };
    for q in 1..n {
        let mut s = cross(q, v[k]);
        // z[0] is -inf, so this never underflows k
        while s <= z[k] {
            k -= 1;
            s = cross(q, v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Squared Euclidean distance from every pixel to the nearest site.
fn squared_edt(h: usize, w: usize, sites: &[(usize, usize)]) -> Vec<f64> {
    let mut grid = vec![FAR; h * w];
    for &(y, x) in sites {
        grid[y * w + x] = 0.0;
    }
    let n = h.max(w);
    let (mut f, mut out) = (vec![0.0; n], vec![0.0; n]);
    let (mut v, mut z) = (vec![0usize; n], vec![0.0; n + 1]);
    for x in 0..w {
        for y in 0..h {
            f[y] = grid[y * w + x];
        }
        edt_1d(&f[..h], &mut out[..h], &mut v, &mut z);
        for y in 0..h {
            grid[y * w + x] = out[y];
        }
    }
    for y in 0..h {
        f[..w].copy_from_slice(&grid[y * w..(y + 1) * w]);
        edt_1d(&f[..w], &mut out[..w], &mut v, &mut z);
        grid[y * w..(y + 1) * w].copy_from_slice(&out[..w]);
    }
    grid
}

fn directed(from: &Surface, to: &Surface, spacing: f64) -> Vec<f64> {
    let field = squared_edt(to.height, to.width, &to.points);
    from.points
        .iter()
        .map(|&(y, x)| field[y * to.width + x].sqrt() * spacing)
        .collect()
}

/// Surface-distance metrics; `None` if either surface is empty.
pub fn distance_metrics(pred: &Surface, gt: &Surface, spacing: f64) -> Option<DistanceMetrics> {
    if pred.is_empty() || gt.is_empty() {
        return None;
    }
    assert_eq!((pred.height, pred.width), (gt.height, gt.width), "surface grids differ");
    let d_pg = directed(pred, gt, spacing);
    let d_gp = directed(gt, pred, spacing);
    let sum_pg: f64 = d_pg.iter().sum();
    let sum_gp: f64 = d_gp.iter().sum();
    let avg_hausdorff = (sum_pg / d_pg.len() as f64).max(sum_gp / d_gp.len() as f64);
    let mean_surface_distance = (sum_pg + sum_gp) / (d_pg.len() + d_gp.len()) as f64;

    let mut pooled: Vec<f64> = d_pg.into_iter().chain(d_gp).collect();
    pooled.sort_by(f64::total_cmp);
    let rank = (0.95 * pooled.len() as f64).ceil() as usize;
    let hd95 = pooled[rank.max(1) - 1];
    Some(DistanceMetrics { avg_hausdorff, mean_surface_distance, hd95 })
}
