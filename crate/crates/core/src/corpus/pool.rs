use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub iteration: usize,
    pub indices: Vec<usize>,
}

/// Partition of the train split into labeled and unlabeled positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolState {
    pub labeled: BTreeSet<usize>,
    pub unlabeled: BTreeSet<usize>,
    pub history: Vec<QueryRecord>,
}

/// Label `⌈fraction · |train|⌉` uniformly random members of `train`.
pub fn init_pool(train: &[usize], fraction: f64, seed: u64) -> Result<PoolState> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!("initial fraction must be in (0, 1], got {fraction}")));
    }
    let count = (fraction * train.len() as f64).ceil() as usize;
    init_pool_with_count(train, count, seed)
}

pub fn init_pool_with_count(train: &[usize], count: usize, seed: u64) -> Result<PoolState> {
    if train.is_empty() {
        return Err(Error::invalid("train split is empty"));
    }
    if count == 0 {
        return Err(Error::invalid("initial pool would contain 0 labeled samples"));
    }
    if count > train.len() {
        return Err(Error::invalid(format!(
            "initial pool of {count} exceeds train split of {}",
            train.len()
        )));
    }
    let mut order: Vec<usize> = train.to_vec();
    order.sort_unstable();
    order.shuffle(&mut rng::seeded(seed));
    Ok(PoolState {
        labeled: order[..count].iter().copied().collect(),
        unlabeled: order[count..].iter().copied().collect(),
        history: Vec::new(),
    })
}

impl PoolState {
    /// Move `queried` from the unlabeled to the labeled set. Validates the
    /// whole request before touching any state.
    pub fn apply_query(&mut self, queried: &[usize], iteration: usize) -> Result<()> {
        if queried.is_empty() {
            return Err(Error::invalid("empty query"));
        }
        let again: Vec<usize> = queried.iter().copied().filter(|i| self.labeled.contains(i)).collect();
        if !again.is_empty() {
            return Err(Error::DoubleQuery(again));
        }
        let mut seen = BTreeSet::new();
        for &i in queried {
            if !self.unlabeled.contains(&i) {
                return Err(Error::invalid(format!("index {i} is not in the unlabeled pool")));
            }
            if !seen.insert(i) {
                return Err(Error::invalid(format!("index {i} queried twice in one batch")));
            }
        }
        for &i in queried {
            self.unlabeled.remove(&i);
            self.labeled.insert(i);
        }
        self.history.push(QueryRecord {
            iteration,
            indices: queried.to_vec(),
        });
        Ok(())
    }

    pub fn labeled_vec(&self) -> Vec<usize> {
        self.labeled.iter().copied().collect()
    }

    pub fn unlabeled_vec(&self) -> Vec<usize> {
        self.unlabeled.iter().copied().collect()
    }

    /// Disjointness, conservation against `train`, and history accounting
    /// relative to an initial labeled count.
    pub fn check_invariants(&self, train: &[usize], initial_labeled: usize) -> Result<()> {
        if self.labeled.intersection(&self.unlabeled).next().is_some() {
            return Err(Error::Validation("labeled and unlabeled sets overlap".into()));
        }
        let union: BTreeSet<usize> = self.labeled.union(&self.unlabeled).copied().collect();
        let train: BTreeSet<usize> = train.iter().copied().collect();
        if union != train {
            return Err(Error::Validation("pool does not cover the train split".into()));
        }
        let queried: usize = self.history.iter().map(|r| r.indices.len()).sum();
        if queried + initial_labeled != self.labeled.len() {
            return Err(Error::Validation(format!(
                "history accounts for {queried} queries but labeled grew from {initial_labeled} to {}",
                self.labeled.len()
            )));
        }
        let mut all = BTreeSet::new();
        for i in self.history.iter().flat_map(|r| &r.indices) {
            if !all.insert(*i) {
                return Err(Error::Validation(format!("index {i} appears in two history entries")));
            }
        }
        Ok(())
    }
}
