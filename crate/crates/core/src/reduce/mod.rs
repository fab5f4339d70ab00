//! Dimension reduction of feature vectors: exact PCA and UMAP.

mod curve;
mod knn;
mod pca;
mod umap;

pub use curve::{fit_ab, umap_kernel};
pub use knn::{knn_excluding_self, knn_query, squared_distance, Neighbors};
pub use pca::{pca_fit, pca_transform, PcaModel};
pub use umap::{fuzzy_union, smooth_knn, umap_fit, umap_transform, Edge, Metric, UmapConfig, UmapModel};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reducer {
    Pca,
    Umap,
}

/// Fit the reducer on `features` and return their 2D embedding.
///
/// Pools too small for the reducer (one point for PCA, fewer than three for
/// UMAP) get a zero embedding: every downstream clustering of them is trivial.
pub fn embed_2d(features: &Array2<f64>, reducer: Reducer, seed: u64) -> Result<Array2<f64>> {
    let n = features.nrows();
    let too_small = match reducer {
        Reducer::Pca => n < 2 || features.ncols() == 0,
        Reducer::Umap => n < 3,
    };
    if too_small {
        return Ok(Array2::zeros((n, 2)));
    }
    match reducer {
        Reducer::Pca => {
            let d = 2.min(features.nrows().saturating_sub(1)).min(features.ncols());
            let model = pca_fit(features, d)?;
            pca_transform(&model, features)
        }
        Reducer::Umap => {
            let cfg = UmapConfig::for_points(features.nrows(), seed);
            Ok(umap_fit(features, &cfg)?.embedding)
        }
    }
}
