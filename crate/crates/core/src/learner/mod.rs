//! Segmentation learner: a small encoder-decoder with hand-written
//! backpropagation, the focal-Dice and Dice-BCE losses, and Adam.

mod checkpoint;
mod gradcheck;
mod loss;
mod net;
mod tensor;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use gradcheck::{gradcheck, GradcheckReport};
pub use loss::{loss_dice_bce, loss_focal_dice, LossKind, LossValue, PROB_EPS};
pub use net::{forward, Activation, AdamState, Architecture, ModelState};

use ndarray::Array2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::SliceSample;
use crate::{exec, rng};
use crate::{Error, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnerConfig {
    pub learning_rate: f64,
    pub loss: LossKind,
    /// Focal exponent, used by [`LossKind::FocalDice`].
    pub gamma: f64,
    /// Divide the Dice-BCE cross-entropy sum by the pixel count.
    pub normalize_bce: bool,
    pub channels: [usize; 3],
    pub activation: Activation,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            learning_rate: 1e-4,
            loss: LossKind::FocalDice,
            gamma: 3.0,
            normalize_bce: false,
            channels: [8, 16, 32],
            activation: Activation::Relu,
            batch_size: 8,
            seed: 0,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!("learning_rate must be > 0, got {}", self.learning_rate)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if self.channels.contains(&0) {
            return Err(Error::invalid("channel counts must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be positive"));
        }
        Ok(())
    }

    pub fn architecture(&self) -> Architecture {
        Architecture { channels: self.channels, activation: self.activation }
    }

    pub fn init_model(&self) -> ModelState {
        ModelState::init(self.architecture(), self.seed)
    }
}

/// Per-sample output of a learner.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionBundle {
    pub probs: Array2<f64>,
    pub features: Vec<f64>,
}

/// A training pair flattened to f64, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub pixels: Vec<f64>,
    pub target: Vec<f64>,
    pub height: usize,
    pub width: usize,
}

impl Example {
    pub fn from_sample(s: &SliceSample) -> Self {
        let (height, width) = s.dims();
        Example {
            pixels: s.pixels(),
            target: s.mask.iter().map(|&v| v as f64).collect(),
            height,
            width,
        }
    }

    pub fn image(&self) -> Array2<f64> {
        Array2::from_shape_vec((self.height, self.width), self.pixels.clone()).expect("shape")
    }
}

pub(crate) fn loss_and_grad_probs(config: &LearnerConfig, probs: &[f64], target: &[f64]) -> (LossValue, Vec<f64>) {
    match config.loss {
        LossKind::FocalDice => loss::focal_dice_with_grad(probs, target, config.gamma),
        LossKind::DiceBce => loss::dice_bce_with_grad(probs, target, config.normalize_bce),
    }
}

/// Loss and parameter gradient for one example.
pub fn sample_gradient(model: &ModelState, ex: &Example, config: &LearnerConfig) -> Result<(f64, Vec<f64>)> {
    let trace = net::forward_trace(model, &ex.pixels, ex.height, ex.width)?;
    let (loss, gprobs) = loss_and_grad_probs(config, &trace.probs, &ex.target);
    Ok((loss.value, net::backward(model, &trace, &gprobs)))
}

/// One bias-corrected Adam update.
pub fn adam_step(model: &mut ModelState, grads: &[f64], learning_rate: f64) {
    let st = &mut model.adam;
    st.step += 1;
    let t = st.step as i32;
    let c1 = 1.0 - ADAM_BETA1.powi(t);
    let c2 = 1.0 - ADAM_BETA2.powi(t);
    for (((w, m), v), &g) in model.params.iter_mut().zip(&mut st.m).zip(&mut st.v).zip(grads) {
        *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
        *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
        *w -= learning_rate * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
    }
}

/// Mini-batch training with per-epoch shuffling. Returns the mean loss of
/// each epoch. The shuffle order depends only on `config.seed` and the
/// number of epochs the model has already seen.
pub fn train(model: &mut ModelState, examples: &[&Example], epochs: usize, config: &LearnerConfig) -> Result<Vec<f64>> {
    config.validate()?;
    if examples.is_empty() {
        return Err(Error::invalid("cannot train on an empty labeled set"));
    }
    let mut trace = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let mut order: Vec<usize> = (0..examples.len()).collect();
        order.shuffle(&mut rng::seeded(rng::derive(config.seed, model.epochs_done)));
        let mut epoch_loss = 0.0;
        for (batch_idx, batch) in order.chunks(config.batch_size).enumerate() {
            let model_ref: &ModelState = model;
            let results = exec::map(batch, |&i| sample_gradient(model_ref, examples[i], config));
            let mut total = vec![0.0; model.params.len()];
            let mut batch_loss = 0.0;
            for r in results {
                let (l, g) = r?;
                batch_loss += l;
                total.iter_mut().zip(&g).for_each(|(t, gi)| *t += gi);
            }
            let scale = 1.0 / batch.len() as f64;
            total.iter_mut().for_each(|g| *g *= scale);
            if !batch_loss.is_finite() || total.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged { epoch: epoch + 1, batch: batch_idx + 1, loss: batch_loss * scale });
            }
            adam_step(model, &total, config.learning_rate);
            if model.params.iter().any(|w| !w.is_finite()) {
                return Err(Error::Diverged { epoch: epoch + 1, batch: batch_idx + 1, loss: batch_loss * scale });
            }
            epoch_loss += batch_loss;
        }
        model.epochs_done += 1;
        trace.push(epoch_loss / examples.len() as f64);
    }
    Ok(trace)
}

pub fn predict(model: &ModelState, ex: &Example) -> Result<PredictionBundle> {
    let trace = net::forward_trace(model, &ex.pixels, ex.height, ex.width)?;
    Ok(PredictionBundle {
        features: trace.features().to_vec(),
        probs: Array2::from_shape_vec((ex.height, ex.width), trace.probs.clone()).expect("shape"),
    })
}

/// Predictions for many examples, in input order.
pub fn predict_many(model: &ModelState, examples: &[&Example]) -> Result<Vec<PredictionBundle>> {
    exec::map(examples, |ex| predict(model, ex)).into_iter().collect()
}

/// Mean hard Dice (threshold 0.5) of the model over `examples`.
pub fn mean_dice(model: &ModelState, examples: &[&Example]) -> Result<f64> {
    let preds = predict_many(model, examples)?;
    let mut sum = 0.0;
    for (p, ex) in preds.iter().zip(examples) {
        let pred = crate::metrics::binarize(&p.probs, 0.5);
        let gt = Array2::from_shape_fn((ex.height, ex.width), |(y, x)| ex.target[y * ex.width + x] as u8);
        sum += crate::metrics::overlap_metrics(&pred, &gt)?.dice;
    }
    Ok(sum / examples.len().max(1) as f64)
}
