use crate::exec;
use crate::learner::PredictionBundle;
use crate::{Error, Result};

/// `−p ln p − (1−p) ln(1−p)` with `0 ln 0 = 0`.
#[inline]
pub fn binary_entropy(p: f64) -> f64 {
    let term = |q: f64| if q > 0.0 { q * q.ln() } else { 0.0 };
    -(term(p) + term(1.0 - p))
}

/// Image-level entropy `H = Σᵢ h(Pᵢ)` per prediction, natural log.
pub fn entropy_scores(predictions: &[PredictionBundle]) -> Vec<f64> {
    exec::map(predictions, |p| p.probs.iter().map(|&q| binary_entropy(q)).sum())
}

/// The `k` highest-scoring ids in rank order; equal scores go to the smaller id.
pub fn top_k_entropy(ids: &[usize], scores: &[f64], k: usize) -> Result<Vec<usize>> {
    if ids.len() != scores.len() {
        return Err(Error::shape(format!("{} ids for {} scores", ids.len(), scores.len())));
    }
    if k > ids.len() {
        return Err(Error::invalid(format!("asked for {k} samples from a pool of {}", ids.len())));
    }
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]).then(ids[i].cmp(&ids[j])));
    Ok(order[..k].iter().map(|&i| ids[i]).collect())
}
