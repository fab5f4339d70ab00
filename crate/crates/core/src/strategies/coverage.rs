use rand::Rng;

use crate::rng;
use crate::{Error, Result};

/// Round-robin over cluster labels `0..n_u` from a random start, taking one
/// uniformly random remaining member of each label present, until `n_u`
/// members are collected.
///
/// Labels still present are recomputed from the remaining members on every
/// visit, so the loop terminates whenever `|members| ≥ n_u`.
pub fn label_coverage_select(ids: &[usize], labels: &[usize], n_u: usize, rng: &mut rng::Rng) -> Result<Vec<usize>> {
    if ids.len() != labels.len() {
        return Err(Error::shape(format!("{} ids for {} labels", ids.len(), labels.len())));
    }
    if n_u == 0 {
        return Err(Error::invalid("n_u must be positive"));
    }
    if ids.len() < n_u {
        return Err(Error::invalid(format!(
            "candidate set of {} is smaller than n_u = {n_u}",
            ids.len()
        )));
    }
    if let Some(&l) = labels.iter().find(|&&l| l >= n_u) {
        return Err(Error::invalid(format!("cluster label {l} outside 0..{n_u}")));
    }
    let mut remaining: Vec<(usize, usize)> = ids.iter().copied().zip(labels.iter().copied()).collect();
    let mut selected = Vec::with_capacity(n_u);
    let mut label = rng.random_range(0..n_u);
    while selected.len() < n_u {
        let members: Vec<usize> = (0..remaining.len()).filter(|&i| remaining[i].1 == label).collect();
        if !members.is_empty() {
            let pick = members[rng.random_range(0..members.len())];
            selected.push(remaining.remove(pick).0);
        }
        label = (label + 1) % n_u;
    }
    Ok(selected)
}
