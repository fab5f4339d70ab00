//! Exact brute-force nearest neighbours.

use ndarray::{Array2, ArrayView1};

use crate::exec;

#[inline]
pub fn squared_distance(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Row-wise neighbour lists, nearest first; ties resolved by lower index.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighbors {
    pub indices: Vec<Vec<usize>>,
    pub distances: Vec<Vec<f64>>,
}

fn k_smallest(mut cands: Vec<(f64, usize)>, k: usize) -> (Vec<usize>, Vec<f64>) {
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < cands.len() {
        cands.select_nth_unstable_by(k, cmp);
        cands.truncate(k);
    }
    cands.sort_by(cmp);
    cands.into_iter().map(|(d, j)| (j, d.sqrt())).unzip()
}

/// `k` nearest other rows of `data` for every row.
pub fn knn_excluding_self(data: &Array2<f64>, k: usize) -> Neighbors {
    let n = data.nrows();
    let rows = exec::map_range(n, |i| {
        let a = data.row(i);
        let cands = (0..n)
            .filter(|&j| j != i)
            .map(|j| (squared_distance(a, data.row(j)), j))
            .collect();
        k_smallest(cands, k)
    });
    let (indices, distances) = rows.into_iter().unzip();
    Neighbors { indices, distances }
}

/// `k` nearest rows of `reference` for every row of `queries`.
pub fn knn_query(reference: &Array2<f64>, queries: &Array2<f64>, k: usize) -> Neighbors {
    let rows = exec::map_range(queries.nrows(), |i| {
        let a = queries.row(i);
        let cands = (0..reference.nrows())
            .map(|j| (squared_distance(a, reference.row(j)), j))
            .collect();
        k_smallest(cands, k)
    });
    let (indices, distances) = rows.into_iter().unzip();
    Neighbors { indices, distances }
}
