//! Dataset container, on-disk manifests, the synthetic generator and the
//! labeled/unlabeled pool.

mod manifest;
mod pool;
mod synth;

pub use manifest::{load_manifest, save_manifest, MANIFEST_FORMAT};
pub use pool::{init_pool, init_pool_with_count, PoolState, QueryRecord};
pub use synth::{synth_dataset, SynthOptions};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::{Error, Result};
use rand::seq::SliceRandom;

/// One 2D grayscale slice with its binary ground-truth mask.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceSample {
    pub id: usize,
    pub subject_id: usize,
    pub image: Array2<f32>,
    pub mask: Array2<u8>,
}

impl SliceSample {
    pub fn dims(&self) -> (usize, usize) {
        self.image.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let (h, w) = self.image.dim();
        if self.mask.dim() != (h, w) {
            return Err(Error::Validation(format!(
                "sample {}: image is {}x{} but mask is {:?}",
                self.id,
                h,
                w,
                self.mask.dim()
            )));
        }
        if h < 8 || w < 8 {
            return Err(Error::Validation(format!(
                "sample {}: dimensions {}x{} below the 8x8 minimum",
                self.id, h, w
            )));
        }
        if let Some(v) = self.mask.iter().find(|&&v| v > 1) {
            return Err(Error::Validation(format!(
                "sample {}: mask value {} is not binary",
                self.id, v
            )));
        }
        if self.image.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "sample {}: non-finite intensity",
                self.id
            )));
        }
        Ok(())
    }

    /// Image as f64, row-major.
    pub fn pixels(&self) -> Vec<f64> {
        self.image.iter().map(|&v| v as f64).collect()
    }
}

/// Train / hold-out partition, as positions into [`DatasetManifest::samples`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<usize>,
    pub holdout: Vec<usize>,
}

impl Splits {
    /// Hold out whole subjects until `fraction` of the slices are covered.
    /// Falls back to a slice-level split when no subject fits the target.
    pub fn by_subject(samples: &[SliceSample], fraction: f64, seed: u64) -> Self {
        let n = samples.len();
        let target = (fraction * n as f64).round() as usize;
        let mut subjects: Vec<usize> = samples.iter().map(|s| s.subject_id).collect();
        subjects.sort_unstable();
        subjects.dedup();
        let mut rng = rng::seeded(seed);
        subjects.shuffle(&mut rng);

        let mut held = vec![false; n];
        let mut count = 0;
        for subject in subjects {
            let members: Vec<usize> = (0..n).filter(|&i| samples[i].subject_id == subject).collect();
            if count + members.len() <= target {
                count += members.len();
                for i in members {
                    held[i] = true;
                }
            }
        }
        if count == 0 && target > 0 {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            for &i in order.iter().take(target) {
                held[i] = true;
            }
        }
        let train = (0..n).filter(|&i| !held[i]).collect();
        let holdout = (0..n).filter(|&i| held[i]).collect();
        Splits { train, holdout }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub name: String,
    pub samples: Vec<SliceSample>,
    pub splits: Splits,
    pub pixel_spacing: f64,
}

impl DatasetManifest {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pixel_spacing > 0.0 && self.pixel_spacing.is_finite()) {
            return Err(Error::Validation(format!(
                "pixel_spacing must be positive, got {}",
                self.pixel_spacing
            )));
        }
        let mut seen_ids = std::collections::HashSet::new();
        for s in &self.samples {
            s.validate()?;
            if !seen_ids.insert(s.id) {
                return Err(Error::Validation(format!("duplicate sample id {}", s.id)));
            }
        }
        let n = self.samples.len();
        let mut seen = vec![0u8; n];
        for &i in self.splits.train.iter().chain(&self.splits.holdout) {
            if i >= n {
                return Err(Error::Validation(format!("split index {i} out of range (n = {n})")));
            }
            seen[i] += 1;
        }
        if let Some(i) = seen.iter().position(|&c| c != 1) {
            return Err(Error::Validation(format!(
                "splits must partition the samples; index {i} appears {} times",
                seen[i]
            )));
        }
        Ok(())
    }
}
