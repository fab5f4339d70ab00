mod common;

use alseg::reduce::{
    embed_2d, fit_ab, fuzzy_union, knn_excluding_self, pca_fit, pca_transform, smooth_knn, umap_fit, umap_kernel,
    umap_transform, Reducer, UmapConfig,
};
use common::*;
use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{array, Array2, Axis};
use proptest::prelude::*;

fn matrix(n: std::ops::Range<usize>, d: std::ops::Range<usize>) -> impl Strategy<Value = Array2<f64>> {
    (n, d).prop_flat_map(|(n, d)| {
        prop::collection::vec(-10.0f64..10.0, n * d).prop_map(move |v| Array2::from_shape_vec((n, d), v).unwrap())
    })
}

/// Eigenpairs of the sample covariance, largest first.
fn covariance_eigen(x: &Array2<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let (n, d) = x.dim();
    let c = x - &x.mean_axis(Axis(0)).unwrap();
    let cov = c.t().dot(&c) / (n - 1) as f64;
    let m = DMatrix::from_fn(d, d, |i, j| cov[[i, j]]);
    let e = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| e.eigenvalues[j].total_cmp(&e.eigenvalues[i]));
    let vals = order.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(d, d, |r, k| e.eigenvectors[(r, order[k])]);
    (vals, vecs)
}

#[test]
fn line_data_first_component() {
    let x = Array2::from_shape_fn((9, 2), |(i, c)| (i as f64 - 4.0) * if c == 0 { 1.0 } else { 2.0 });
    let m = pca_fit(&x, 2).unwrap();
    let s = 5f64.sqrt();
    assert!((m.components[[0, 0]] - 1.0 / s).abs() < 1e-12);
    assert!((m.components[[0, 1]] - 2.0 / s).abs() < 1e-12);
    assert!(m.explained_variance[1].abs() < 1e-12);
}

#[test]
fn axis_aligned_variances() {
    let x = array![[2.0, 0.0], [-2.0, 0.0], [0.0, 1.0], [0.0, -1.0]];
    let m = pca_fit(&x, 2).unwrap();
    assert!((m.components[[0, 0]] - 1.0).abs() < 1e-12);
    assert!((m.components[[1, 1]] - 1.0).abs() < 1e-12);
}

#[test]
fn out_of_sample_projection() {
    // Three points on y = x; a new point on the same line projects to its
    // signed distance from the mean along (1, 1)/√2.
    let x = array![[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]];
    let m = pca_fit(&x, 1).unwrap();
    let y = pca_transform(&m, &array![[4.0, 4.0], [1.0, 1.0]]).unwrap();
    assert!((y[[0, 0]] - 3.0 * 2f64.sqrt()).abs() < 1e-12);
    assert!(y[[1, 0]].abs() < 1e-12);
}

#[test]
fn pca_argument_errors() {
    let x = array![[0.0, 1.0], [1.0, 0.0], [2.0, 2.0]];
    assert!(pca_fit(&x, 3).is_err());
    assert!(pca_fit(&array![[1.0, 2.0]], 1).is_err());
    let m = pca_fit(&x, 1).unwrap();
    assert!(pca_transform(&m, &array![[1.0, 2.0, 3.0]]).is_err());
    let flat = Array2::from_elem((5, 3), 2.0);
    let m = pca_fit(&flat, 2).unwrap();
    assert!(m.explained_variance.iter().all(|&v| v.abs() < 1e-20));
}

#[test]
fn curve_fit_matches_grid_search() {
    // Coarse grid then local refinement of the same least-squares target.
    let xs: Vec<f64> = (0..300).map(|i| 3.0 * i as f64 / 299.0).collect();
    let target = |x: f64| if x <= 0.1 { 1.0 } else { (-(x - 0.1)).exp() };
    let cost = |a: f64, b: f64| xs.iter().map(|&x| (1.0 / (1.0 + a * x.powf(2.0 * b)) - target(x)).powi(2)).sum::<f64>();
    let (mut best, mut step) = ((1.0, 1.0), 0.5);
    for _ in 0..40 {
        let mut cand = best;
        for da in -4..=4 {
            for db in -4..=4 {
                let (a, b) = (best.0 + da as f64 * step / 4.0, best.1 + db as f64 * step / 4.0);
                if a > 0.0 && b > 0.0 && cost(a, b) < cost(cand.0, cand.1) {
                    cand = (a, b);
                }
            }
        }
        if cand == best {
            step /= 2.0;
        }
        best = cand;
    }
    let (a, b) = fit_ab(0.1);
    assert!((a - 1.58).abs() < 0.05 && (b - 0.90).abs() < 0.05, "a={a} b={b}");
    assert!((a - best.0).abs() < 0.02 && (b - best.1).abs() < 0.02, "fit ({a}, {b}) vs grid {best:?}");
    assert_eq!(umap_kernel(0.0, a, b), 1.0);
    let ys: Vec<f64> = (0..100).map(|i| umap_kernel(i as f64 * 0.03, a, b)).collect();
    assert!(ys.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn union_and_smooth_knn() {
    assert_eq!(fuzzy_union(1.0, 1.0), 1.0);
    assert_eq!(fuzzy_union(0.0, 0.4), 0.4);
    let d = [0.5, 0.7, 1.0, 1.1, 2.0];
    let (rho, sigma) = smooth_knn(&d, 6);
    assert_eq!(rho, 0.5);
    let total: f64 = d.iter().map(|&v| (-(v - rho).max(0.0) / sigma).exp()).sum();
    assert!((total - 6f64.log2()).abs() < 1e-4, "{total}");
}

#[test]
fn knn_matches_sorting() {
    let (x, _) = blobs(2, 12, 3, 2.0, 3);
    let nn = knn_excluding_self(&x, 5);
    for i in 0..x.nrows() {
        let mut all: Vec<(f64, usize)> = (0..x.nrows())
            .filter(|&j| j != i)
            .map(|j| ((&x.row(i) - &x.row(j)).mapv(|v| v * v).sum().sqrt(), j))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let want: Vec<usize> = all[..5].iter().map(|p| p.1).collect();
        assert_eq!(nn.indices[i], want);
    }
}

#[test]
fn umap_blobs_separate() {
    let (x, truth) = blobs(3, 30, 50, 0.1, 77);
    let m = umap_fit(&x, &UmapConfig { seed: 4, ..Default::default() }).unwrap();
    assert!(silhouette(&m.embedding, &truth) >= 0.5);
    assert!(trustworthiness(&x, &m.embedding, 15) >= 0.95);
    assert!(m.graph.iter().all(|e| e.head != e.tail && e.weight > 0.0 && e.weight <= 1.0));
    assert!(m.embedding.iter().all(|v| v.is_finite()));
}

#[test]
fn umap_transform_lands_in_own_blob() {
    let (x, truth) = blobs(3, 30, 50, 0.1, 78);
    let m = umap_fit(&x, &UmapConfig { seed: 2, ..Default::default() }).unwrap();
    let centres: Vec<[f64; 2]> = (0..3)
        .map(|b| {
            let rows: Vec<usize> = (0..90).filter(|&i| truth[i] == b).collect();
            let mean = |c: usize| rows.iter().map(|&i| m.embedding[[i, c]]).sum::<f64>() / rows.len() as f64;
            [mean(0), mean(1)]
        })
        .collect();
    let t = umap_transform(&m, &x).unwrap();
    for i in 0..90 {
        let nearest = (0..3)
            .min_by(|&a, &b| {
                let d = |c: [f64; 2]| (t[[i, 0]] - c[0]).powi(2) + (t[[i, 1]] - c[1]).powi(2);
                d(centres[a]).total_cmp(&d(centres[b]))
            })
            .unwrap();
        assert_eq!(nearest, truth[i], "point {i}");
    }
    // fresh noisy copies of the blob centres
    let (y, ytruth) = blobs(3, 5, 50, 0.1, 79);
    let ty = umap_transform(&m, &y).unwrap();
    let spread = m.embedding.std_axis(Axis(0), 0.0).sum();
    for i in 0..y.nrows() {
        let c = centres[ytruth[i]];
        let d = ((ty[[i, 0]] - c[0]).powi(2) + (ty[[i, 1]] - c[1]).powi(2)).sqrt();
        assert!(d < spread, "new point {i} is {d} from its blob");
    }
}

#[test]
fn embed_2d_handles_tiny_pools() {
    let x = array![[1.0, 2.0], [3.0, 4.0]];
    assert_eq!(embed_2d(&x, Reducer::Umap, 0).unwrap(), Array2::<f64>::zeros((2, 2)));
    assert_eq!(embed_2d(&x, Reducer::Pca, 0).unwrap().dim(), (2, 1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pca_agrees_with_covariance_eigenvectors(x in matrix(6..30, 2..6)) {
        let (n, d) = x.dim();
        let k = d.min(n - 1);
        let (vals, vecs) = covariance_eigen(&x);
        prop_assume!((0..k).all(|i| vals[i] - vals.get(i + 1).copied().unwrap_or(0.0) > 1e-6 * vals[0].max(1.0)));
        let m = pca_fit(&x, k).unwrap();
        for i in 0..k {
            prop_assert!((m.explained_variance[i] - vals[i]).abs() < 1e-8 * vals[0].max(1.0));
            let dot: f64 = (0..d).map(|r| m.components[[i, r]] * vecs[(r, i)]).sum();
            prop_assert!((dot.abs() - 1.0).abs() < 1e-8, "component {} dot {}", i, dot);
        }
        prop_assert!(m.explained_variance.windows(2).all(|w| w[0] >= w[1]));
        let g = m.components.dot(&m.components.t());
        for i in 0..k {
            for j in 0..k {
                prop_assert!((g[[i, j]] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-8, "gram {} {}", i, j);
            }
        }
        let y = pca_transform(&m, &x).unwrap();
        for c in 0..k {
            prop_assert!((y.column(c).var(1.0) - m.explained_variance[c]).abs() < 1e-8 * vals[0].max(1.0));
        }
        let zero = pca_transform(&m, &m.mean.clone().insert_axis(Axis(0))).unwrap();
        prop_assert!(zero.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn full_rank_pca_preserves_distances(x in matrix(8..20, 2..5)) {
        let d = x.ncols();
        prop_assume!(covariance_eigen(&x).0[d - 1] > 1e-6);
        let y = pca_transform(&pca_fit(&x, d).unwrap(), &x).unwrap();
        for i in 0..x.nrows() {
            for j in 0..i {
                let dx = (&x.row(i) - &x.row(j)).mapv(|v| v * v).sum().sqrt();
                let dy = (&y.row(i) - &y.row(j)).mapv(|v| v * v).sum().sqrt();
                prop_assert!((dx - dy).abs() < 1e-8, "gram {} {}", i, j);
            }
        }
    }

    #[test]
    fn umap_graph_invariants(x in matrix(5..25, 1..6), seed in any::<u64>()) {
        let n = x.nrows();
        let cfg = UmapConfig { n_epochs: 50, ..UmapConfig::for_points(n, seed) };
        let m = umap_fit(&x, &cfg).unwrap();
        prop_assert!(m.embedding.iter().all(|v| v.is_finite()));
        let mut w = std::collections::BTreeMap::new();
        for e in &m.graph {
            prop_assert!(e.head != e.tail);
            prop_assert!(e.weight > 0.0 && e.weight <= 1.0);
            w.insert((e.head, e.tail), e.weight);
        }
        for (&(i, j), &v) in &w {
            prop_assert_eq!(w.get(&(j, i)), Some(&v));
        }
        prop_assert_eq!(umap_fit(&x, &cfg).unwrap(), m);
    }

    #[test]
    fn union_is_a_t_conorm(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let u = fuzzy_union(a, b);
        prop_assert!(u >= a.max(b) - 1e-15 && u <= 1.0);
        prop_assert_eq!(u, fuzzy_union(b, a));
    }
}
