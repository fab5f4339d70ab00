//! Acquisition functions: entropy, PCA/UMAP representativeness, their
//! hybrid compositions, random and core-set.
//!
//! Sample ids throughout are positions in the dataset's sample list, the same
//! indices [`PoolState`](crate::corpus::PoolState) stores.

mod coreset;
mod coverage;
mod entropy;

pub use coreset::coreset_greedy;
pub use coverage::label_coverage_select;
pub use entropy::{binary_entropy, entropy_scores, top_k_entropy};

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use ndarray::Array2;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cluster::{kmeans, nearest_to_centroids};
use crate::learner::PredictionBundle;
use crate::reduce::{embed_2d, Reducer};
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyName {
    Random,
    Entropy,
    Pca,
    Umap,
    EntropyUmap,
    EntropyRandom,
    EntropyPca,
    UmapEntropy,
    PcaEntropy,
    RandomEntropy,
    Coreset,
}

impl StrategyName {
    pub const ALL: [StrategyName; 11] = [
        StrategyName::Random,
        StrategyName::Entropy,
        StrategyName::Pca,
        StrategyName::Umap,
        StrategyName::EntropyUmap,
        StrategyName::EntropyRandom,
        StrategyName::EntropyPca,
        StrategyName::UmapEntropy,
        StrategyName::PcaEntropy,
        StrategyName::RandomEntropy,
        StrategyName::Coreset,
    ];

    /// Canonical name, e.g. `entropy_umap`.
    pub fn as_str(self) -> &'static str {
        match self {
            StrategyName::Random => "random",
            StrategyName::Entropy => "entropy",
            StrategyName::Pca => "pca",
            StrategyName::Umap => "umap",
            StrategyName::EntropyUmap => "entropy_umap",
            StrategyName::EntropyRandom => "entropy_random",
            StrategyName::EntropyPca => "entropy_pca",
            StrategyName::UmapEntropy => "umap_entropy",
            StrategyName::PcaEntropy => "pca_entropy",
            StrategyName::RandomEntropy => "random_entropy",
            StrategyName::Coreset => "coreset",
        }
    }

    /// Command-line spelling, e.g. `entropy-umap`.
    pub fn cli_name(self) -> String {
        self.as_str().replace('_', "-")
    }

    /// Whether the strategy reads model predictions (probabilities or features).
    pub fn needs_predictions(self) -> bool {
        !matches!(self, StrategyName::Random | StrategyName::Coreset)
    }

    pub fn is_hybrid(self) -> bool {
        matches!(
            self,
            StrategyName::EntropyUmap
                | StrategyName::EntropyRandom
                | StrategyName::EntropyPca
                | StrategyName::UmapEntropy
                | StrategyName::PcaEntropy
                | StrategyName::RandomEntropy
        )
    }
}

impl fmt::Display for StrategyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyName {
    type Err = Error;

    /// Accepts both `entropy_umap` and `entropy-umap`.
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        StrategyName::ALL.into_iter().find(|n| n.as_str() == norm).ok_or_else(|| {
            let names: Vec<String> = StrategyName::ALL.iter().map(|n| n.cli_name()).collect();
            Error::invalid(format!("unknown strategy `{s}`; valid names: {}", names.join(", ")))
        })
    }
}

impl<'de> Deserialize<'de> for StrategyName {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategySpec {
    pub name: StrategyName,
    #[serde(default = "default_n_u")]
    pub n_u: usize,
    /// Intermediate budget of the hybrids; ignored by single-stage strategies.
    #[serde(default = "default_n_c")]
    pub n_c: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_n_u() -> usize {
    6
}

fn default_n_c() -> usize {
    12
}

impl StrategySpec {
    pub fn new(name: StrategyName, n_c: usize, n_u: usize, seed: u64) -> Self {
        StrategySpec { name, n_u, n_c, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_u == 0 {
            return Err(Error::invalid("n_u must be positive"));
        }
        if self.n_c < self.n_u {
            return Err(Error::invalid(format!("n_c ({}) must be >= n_u ({})", self.n_c, self.n_u)));
        }
        Ok(())
    }

    /// Samples the strategy must be able to draw from `D_U`.
    fn required_pool(&self) -> usize {
        if self.name.is_hybrid() {
            self.n_c
        } else {
            self.n_u
        }
    }
}

/// Everything a query may look at.
#[derive(Debug, Clone, Copy)]
pub struct QueryContext<'a> {
    pub labeled: &'a [usize],
    pub unlabeled: &'a [usize],
    /// Aligned with `unlabeled`. Required unless the strategy is random or core-set.
    pub predictions: Option<&'a [PredictionBundle]>,
    /// Flattened raw images indexed by sample id. Required by core-set.
    pub pixels: Option<&'a [Vec<f64>]>,
}

/// Per-sample diagnostics over `D_U`, aligned with `ids`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    pub ids: Vec<usize>,
    pub entropy: Option<Vec<f64>>,
    pub cluster_labels: Option<Vec<usize>>,
    pub embedding: Option<Array2<f64>>,
    /// Output of the first stage of a hybrid.
    pub intermediate: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    pub selected: Vec<usize>,
    pub diagnostics: Diagnostics,
}

/// Stack feature vectors into an `n × D` matrix.
pub fn feature_matrix(predictions: &[PredictionBundle]) -> Result<Array2<f64>> {
    let dim = predictions.first().map_or(0, |p| p.features.len());
    if predictions.iter().any(|p| p.features.len() != dim) {
        return Err(Error::shape("feature vectors differ in length"));
    }
    let flat: Vec<f64> = predictions.iter().flat_map(|p| p.features.iter().copied()).collect();
    Array2::from_shape_vec((predictions.len(), dim), flat).map_err(|e| Error::shape(e.to_string()))
}

/// Reduce to 2D, cluster with `k` centers and return the candidate nearest
/// to each centroid. `features` rows are aligned with `ids`.
pub fn rep_select(features: &Array2<f64>, ids: &[usize], reducer: Reducer, k: usize, seed: u64) -> Result<Vec<usize>> {
    if ids.len() != features.nrows() {
        return Err(Error::shape(format!("{} ids for {} feature rows", ids.len(), features.nrows())));
    }
    if k == 0 || k > ids.len() {
        return Err(Error::invalid(format!("need 1 <= k <= {} candidates, got k = {k}", ids.len())));
    }
    let emb = embed_2d(features, reducer, rng::derive(seed, 1))?;
    let clustering = kmeans(&emb, k, rng::derive(seed, 2))?;
    nearest_to_centroids(&clustering, &emb, ids)
}

fn uniform(ids: &[usize], k: usize, rng: &mut rng::Rng) -> Result<Vec<usize>> {
    if k > ids.len() {
        return Err(Error::invalid(format!("asked for {k} samples from a pool of {}", ids.len())));
    }
    Ok(index::sample(rng, ids.len(), k).into_iter().map(|i| ids[i]).collect())
}

fn positions_of(ids: &[usize], subset: &[usize]) -> Vec<usize> {
    subset
        .iter()
        .map(|s| ids.iter().position(|i| i == s).expect("subset of ids"))
        .collect()
}

/// Run one query. All randomness comes from a single generator seeded with
/// `spec.seed`.
pub fn query(spec: &StrategySpec, ctx: &QueryContext<'_>) -> Result<QueryResult> {
    spec.validate()?;
    let ids = ctx.unlabeled;
    if spec.required_pool() > ids.len() {
        return Err(Error::invalid(format!(
            "{} needs {} unlabeled samples, pool has {}",
            spec.name,
            spec.required_pool(),
            ids.len()
        )));
    }
    let preds = if spec.name.needs_predictions() {
        let p = ctx
            .predictions
            .ok_or_else(|| Error::invalid(format!("{} needs predictions for the unlabeled pool", spec.name)))?;
        if p.len() != ids.len() {
            return Err(Error::shape(format!("{} predictions for {} unlabeled samples", p.len(), ids.len())));
        }
        p
    } else {
        &[]
    };
    let mut rng = rng::seeded(spec.seed);
    let mut diag = Diagnostics { ids: ids.to_vec(), ..Default::default() };
    let (n_u, n_c) = (spec.n_u, spec.n_c);

    let entropy = |diag: &mut Diagnostics| -> Vec<f64> {
        let e = entropy_scores(preds);
        diag.entropy = Some(e.clone());
        e
    };

    let selected = match spec.name {
        StrategyName::Random => uniform(ids, n_u, &mut rng)?,
        StrategyName::Entropy => {
            let e = entropy(&mut diag);
            top_k_entropy(ids, &e, n_u)?
        }
        StrategyName::Pca | StrategyName::Umap => {
            let reducer = if spec.name == StrategyName::Pca { Reducer::Pca } else { Reducer::Umap };
            let f = feature_matrix(preds)?;
            rep_select(&f, ids, reducer, n_u, rng.random())?
        }
        StrategyName::EntropyRandom => {
            let e = entropy(&mut diag);
            let d_int = top_k_entropy(ids, &e, n_c)?;
            let out = uniform(&d_int, n_u, &mut rng)?;
            diag.intermediate = Some(d_int);
            out
        }
        StrategyName::EntropyUmap | StrategyName::EntropyPca => {
            let reducer = if spec.name == StrategyName::EntropyPca { Reducer::Pca } else { Reducer::Umap };
            let f = feature_matrix(preds)?;
            let emb = embed_2d(&f, reducer, rng.random())?;
            let clustering = kmeans(&emb, n_u, rng.random())?;
            let e = entropy(&mut diag);
            let d_e = top_k_entropy(ids, &e, n_c)?;
            let d_e_labels: Vec<usize> = positions_of(ids, &d_e).into_iter().map(|p| clustering.labels[p]).collect();
            let out = label_coverage_select(&d_e, &d_e_labels, n_u, &mut rng)?;
            diag.cluster_labels = Some(clustering.labels);
            diag.embedding = Some(emb);
            diag.intermediate = Some(d_e);
            out
        }
        StrategyName::UmapEntropy | StrategyName::PcaEntropy => {
            let reducer = if spec.name == StrategyName::PcaEntropy { Reducer::Pca } else { Reducer::Umap };
            let f = feature_matrix(preds)?;
            let d_int = rep_select(&f, ids, reducer, n_c, rng.random())?;
            let e = entropy(&mut diag);
            let pos = positions_of(ids, &d_int);
            let sub: Vec<f64> = pos.iter().map(|&p| e[p]).collect();
            let out = top_k_entropy(&d_int, &sub, n_u)?;
            diag.intermediate = Some(d_int);
            out
        }
        StrategyName::RandomEntropy => {
            let d_int = uniform(ids, n_c, &mut rng)?;
            let e = entropy(&mut diag);
            let pos = positions_of(ids, &d_int);
            let sub: Vec<f64> = pos.iter().map(|&p| e[p]).collect();
            let out = top_k_entropy(&d_int, &sub, n_u)?;
            diag.intermediate = Some(d_int);
            out
        }
        StrategyName::Coreset => {
            let px = ctx.pixels.ok_or_else(|| Error::invalid("core-set needs raw pixel vectors"))?;
            coreset_greedy(px, ctx.labeled, ids, n_u)?
        }
    };
    Ok(QueryResult { selected, diagnostics: diag })
}

/// Diagnostics CSV: `sample_id,entropy,cluster_label,selected`. Missing
/// values are left empty.
pub fn write_diagnostics_csv<W: Write>(mut out: W, result: &QueryResult) -> std::io::Result<()> {
    writeln!(out, "sample_id,entropy,cluster_label,selected")?;
    let d = &result.diagnostics;
    for (i, id) in d.ids.iter().enumerate() {
        let e = d.entropy.as_ref().map(|e| format!("{}", e[i])).unwrap_or_default();
        let l = d.cluster_labels.as_ref().map(|l| l[i].to_string()).unwrap_or_default();
        let s = u8::from(result.selected.contains(id));
        writeln!(out, "{id},{e},{l},{s}")?;
    }
    Ok(())
}
