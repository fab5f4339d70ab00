//! Segmentation metrics on binary masks.
//!
//! Overlap family (from the confusion counts):
//!
//! * Dice `2tp / (2tp + fp + fn)`
//! * precision `tp / (tp + fp)`
//! * sensitivity `tp / (tp + fn)`
//! * volumetric similarity `1 − |Vp − Vg| / (Vp + Vg)`
//!
//! 0/0 gives 1 when both masks are empty and 0 otherwise.
//!
//! Distance family, on 4-neighbour boundary pixels with `d(a, B)` the
//! Euclidean distance from `a` to the nearest pixel of `B` times the spacing:
//!
//! * average Hausdorff: `max(mean_P d(·,G), mean_G d(·,P))`
//! * mean surface distance: `(Σ_P d(·,G) + Σ_G d(·,P)) / (|P| + |G|)`
//! * HD95: nearest-rank 95th percentile of both directed distance sets pooled

mod distance;
mod surface;

pub use distance::{distance_metrics, DistanceMetrics};
pub use surface::{extract_surface, Surface};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `probs >= threshold`.
pub fn binarize(probs: &Array2<f64>, threshold: f64) -> Array2<u8> {
    probs.mapv(|p| u8::from(p >= threshold))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn from_masks(pred: &Array2<u8>, gt: &Array2<u8>) -> Result<Self> {
        if pred.dim() != gt.dim() {
            return Err(Error::shape(format!("pred {:?} vs gt {:?}", pred.dim(), gt.dim())));
        }
        let mut c = ConfusionCounts::default();
        for (&p, &g) in pred.iter().zip(gt.iter()) {
            match (p != 0, g != 0) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapMetrics {
    pub dice: f64,
    pub precision: f64,
    pub sensitivity: f64,
    pub volumetric_similarity: f64,
}

fn ratio(num: usize, den: usize, both_empty: bool) -> f64 {
    if den == 0 {
        if both_empty { 1.0 } else { 0.0 }
    } else {
        num as f64 / den as f64
    }
}

pub fn overlap_from_counts(c: &ConfusionCounts) -> OverlapMetrics {
    let vp = c.tp + c.fp;
    let vg = c.tp + c.fn_;
    let both_empty = vp == 0 && vg == 0;
    let volumetric_similarity = if vp + vg == 0 {
        1.0
    } else {
        1.0 - (vp as f64 - vg as f64).abs() / (vp + vg) as f64
    };
    OverlapMetrics {
        dice: ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_, both_empty),
        precision: ratio(c.tp, vp, both_empty),
        sensitivity: ratio(c.tp, vg, both_empty),
        volumetric_similarity,
    }
}

pub fn overlap_metrics(pred: &Array2<u8>, gt: &Array2<u8>) -> Result<OverlapMetrics> {
    Ok(overlap_from_counts(&ConfusionCounts::from_masks(pred, gt)?))
}

/// The seven reported metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Dice,
    Precision,
    Sensitivity,
    VolumetricSimilarity,
    MeanSurfaceDistance,
    AvgHausdorff,
    Hd95,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::Dice,
        Metric::Precision,
        Metric::Sensitivity,
        Metric::VolumetricSimilarity,
        Metric::MeanSurfaceDistance,
        Metric::AvgHausdorff,
        Metric::Hd95,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Dice => "dice",
            Metric::Precision => "precision",
            Metric::Sensitivity => "sensitivity",
            Metric::VolumetricSimilarity => "volumetric_similarity",
            Metric::MeanSurfaceDistance => "mean_surface_distance",
            Metric::AvgHausdorff => "avg_hausdorff",
            Metric::Hd95 => "hd95",
        }
    }

    pub fn is_distance(self) -> bool {
        matches!(self, Metric::MeanSurfaceDistance | Metric::AvgHausdorff | Metric::Hd95)
    }

    /// Direction in which the metric improves.
    pub fn higher_is_better(self) -> bool {
        !self.is_distance()
    }
}

/// All metrics for one prediction/ground-truth pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleMetrics {
    pub overlap: OverlapMetrics,
    /// `None` when either boundary is empty.
    pub distance: Option<DistanceMetrics>,
    /// The prediction is a single connected component.
    pub single_contour: bool,
}

impl SampleMetrics {
    pub fn get(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::Dice => Some(self.overlap.dice),
            Metric::Precision => Some(self.overlap.precision),
            Metric::Sensitivity => Some(self.overlap.sensitivity),
            Metric::VolumetricSimilarity => Some(self.overlap.volumetric_similarity),
            Metric::MeanSurfaceDistance => self.distance.map(|d| d.mean_surface_distance),
            Metric::AvgHausdorff => self.distance.map(|d| d.avg_hausdorff),
            Metric::Hd95 => self.distance.map(|d| d.hd95),
        }
    }

    /// Value entering aggregates: distance metrics only count for
    /// single-contour predictions.
    pub fn reported(&self, m: Metric) -> Option<f64> {
        if m.is_distance() && !self.single_contour {
            None
        } else {
            self.get(m)
        }
    }
}

pub fn evaluate(pred: &Array2<u8>, gt: &Array2<u8>, spacing: f64) -> Result<SampleMetrics> {
    let overlap = overlap_metrics(pred, gt)?;
    let sp = extract_surface(pred);
    let sg = extract_surface(gt);
    Ok(SampleMetrics {
        overlap,
        distance: distance_metrics(&sp, &sg, spacing),
        single_contour: sp.components == 1,
    })
}
