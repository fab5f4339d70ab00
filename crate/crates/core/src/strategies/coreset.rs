use crate::{Error, Result};

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-center greedy: repeatedly take the unlabeled point farthest from the
/// current centers (labeled plus already picked). `points` is indexed by id.
pub fn coreset_greedy(points: &[Vec<f64>], labeled: &[usize], unlabeled: &[usize], n_u: usize) -> Result<Vec<usize>> {
    if labeled.is_empty() {
        return Err(Error::invalid("core-set needs a non-empty labeled set"));
    }
    if n_u > unlabeled.len() {
        return Err(Error::invalid(format!(
            "asked for {n_u} samples from a pool of {}",
            unlabeled.len()
        )));
    }
    if let Some(&i) = labeled.iter().chain(unlabeled).find(|&&i| i >= points.len()) {
        return Err(Error::invalid(format!("sample id {i} out of range")));
    }
    let mut order: Vec<usize> = unlabeled.to_vec();
    order.sort_unstable();
    let mut min_d: Vec<f64> = crate::exec::map(&order, |&u| {
        labeled
            .iter()
            .map(|&l| sq_dist(&points[u], &points[l]))
            .fold(f64::INFINITY, f64::min)
    });
    let mut picked = vec![false; order.len()];
    let mut out = Vec::with_capacity(n_u);
    for _ in 0..n_u {
        // strict > keeps the smallest id among ties since `order` is sorted
        let mut best: Option<usize> = None;
        for i in 0..order.len() {
            if !picked[i] && best.is_none_or(|b| min_d[i] > min_d[b]) {
                best = Some(i);
            }
        }
        let b = best.expect("n_u <= |unlabeled|");
        picked[b] = true;
        out.push(order[b]);
        let center = &points[order[b]];
        for i in 0..order.len() {
            if !picked[i] {
                min_d[i] = min_d[i].min(sq_dist(&points[order[i]], center));
            }
        }
    }
    Ok(out)
}
