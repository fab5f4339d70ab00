use nalgebra::{DMatrix, SVD};
use ndarray::{Array1, Array2, Axis};

use crate::{Error, Result};

/// Top principal directions of a centred feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Array1<f64>,
    /// `d × D`, orthonormal rows.
    pub components: Array2<f64>,
    /// Sample variance along each component, non-increasing.
    pub explained_variance: Vec<f64>,
}

/// PCA through the SVD of the centred matrix. Each component is signed so
/// that its largest-magnitude entry is positive.
pub fn pca_fit(features: &Array2<f64>, d: usize) -> Result<PcaModel> {
    let (n, dim) = features.dim();
    if n < 2 {
        return Err(Error::invalid(format!("PCA needs at least 2 points, got {n}")));
    }
    if d == 0 || d > (n - 1).min(dim) {
        return Err(Error::invalid(format!(
            "requested {d} components but at most min(n-1, D) = {} are available",
            (n - 1).min(dim)
        )));
    }
    let mean = features.mean_axis(Axis(0)).expect("n >= 2");
    let centered = features - &mean;
    let mat = DMatrix::from_row_iterator(n, dim, centered.iter().copied());
    let svd = SVD::new(mat, false, true);
    let v_t = svd.v_t.expect("requested V^T");

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]).then(i.cmp(&j)));

    let mut components = Array2::zeros((d, dim));
    let mut explained_variance = Vec::with_capacity(d);
    for (r, &k) in order.iter().take(d).enumerate() {
        let row = v_t.row(k);
        let pivot = (0..dim)
            .max_by(|&i, &j| row[i].abs().total_cmp(&row[j].abs()).then(j.cmp(&i)))
            .expect("dim > 0");
        let sign = if row[pivot] < 0.0 { -1.0 } else { 1.0 };
        for c in 0..dim {
            components[[r, c]] = sign * row[c];
        }
        let s = svd.singular_values[k];
        explained_variance.push(s * s / (n - 1) as f64);
    }
    Ok(PcaModel { mean, components, explained_variance })
}

/// `(x − mean) · componentsᵀ`.
pub fn pca_transform(model: &PcaModel, features: &Array2<f64>) -> Result<Array2<f64>> {
    if features.ncols() != model.mean.len() {
        return Err(Error::shape(format!(
            "features have {} columns, model expects {}",
            features.ncols(),
            model.mean.len()
        )));
    }
    Ok((features - &model.mean).dot(&model.components.t()))
}
