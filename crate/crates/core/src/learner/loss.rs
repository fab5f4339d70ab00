//! Soft-Dice family losses on probability maps.
//!
//! With `I = Σ tᵢpᵢ` and `S = Σ (tᵢ + pᵢ)` the soft Dice ratio is `r = 2I/S`
//! (the `1/N` factors cancel). Focal Dice is `1 − r^γ`; Dice-BCE is
//! `1 − r − ½ Σ [tᵢ ln pᵢ + (1 − tᵢ) ln(1 − pᵢ)]`, with the cross-entropy
//! summed over pixels unless `normalize_bce` divides it by `N`.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Clamp applied to probabilities before any logarithm.
pub const PROB_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    FocalDice,
    DiceBce,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub value: f64,
    /// Set when the Dice ratio is 0/0 (empty mask and all-zero prediction).
    pub degenerate: bool,
}

/// Neumaier-compensated running sum. Loss values feed finite-difference
/// gradient checks, where summation roundoff is divided by the step size.
#[derive(Default)]
struct Sum {
    s: f64,
    c: f64,
}

impl Sum {
    fn add(&mut self, x: f64) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }

    fn value(&self) -> f64 {
        self.s + self.c
    }
}

fn soft_dice_parts(probs: &[f64], mask: &[f64]) -> (f64, f64) {
    let mut inter = Sum::default();
    let mut total = Sum::default();
    for (&p, &t) in probs.iter().zip(mask) {
        inter.add(t * p);
        total.add(t + p);
    }
    (inter.value(), total.value())
}

pub(crate) fn focal_dice_with_grad(probs: &[f64], mask: &[f64], gamma: f64) -> (LossValue, Vec<f64>) {
    let (inter, total) = soft_dice_parts(probs, mask);
    if total == 0.0 {
        return (LossValue { value: 1.0, degenerate: true }, vec![0.0; probs.len()]);
    }
    let ratio = 2.0 * inter / total;
    let value = 1.0 - ratio.powf(gamma);
    let outer = -gamma * ratio.max(1e-300).powf(gamma - 1.0);
    let s2 = total * total;
    let grad = mask
        .iter()
        .map(|&t| outer * (2.0 * t * total - 2.0 * inter) / s2)
        .collect();
    (LossValue { value, degenerate: false }, grad)
}

pub(crate) fn dice_bce_with_grad(probs: &[f64], mask: &[f64], normalize_bce: bool) -> (LossValue, Vec<f64>) {
    let (inter, total) = soft_dice_parts(probs, mask);
    let degenerate = total == 0.0;
    let (ratio, s2) = if degenerate { (0.0, 1.0) } else { (2.0 * inter / total, total * total) };
    let scale = if normalize_bce { 1.0 / probs.len() as f64 } else { 1.0 };

    let mut bce = Sum::default();
    let mut grad = Vec::with_capacity(probs.len());
    for (&p, &t) in probs.iter().zip(mask) {
        let pc = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
        bce.add(t * pc.ln() + (1.0 - t) * (1.0 - pc).ln());
        let dice_grad = if degenerate { 0.0 } else { -(2.0 * t * total - 2.0 * inter) / s2 };
        let bce_grad = if p == pc { -0.5 * scale * (t / pc - (1.0 - t) / (1.0 - pc)) } else { 0.0 };
        grad.push(dice_grad + bce_grad);
    }
    let value = 1.0 - ratio - 0.5 * scale * bce.value();
    (LossValue { value, degenerate }, grad)
}

fn flatten(probs: &Array2<f64>, mask: &Array2<u8>) -> Result<(Vec<f64>, Vec<f64>)> {
    if probs.dim() != mask.dim() {
        return Err(Error::shape(format!(
            "probs {:?} vs mask {:?}",
            probs.dim(),
            mask.dim()
        )));
    }
    Ok((
        probs.iter().copied().collect(),
        mask.iter().map(|&v| v as f64).collect(),
    ))
}

pub fn loss_focal_dice(probs: &Array2<f64>, mask: &Array2<u8>, gamma: f64) -> Result<LossValue> {
    let (p, t) = flatten(probs, mask)?;
    Ok(focal_dice_with_grad(&p, &t, gamma).0)
}

pub fn loss_dice_bce(probs: &Array2<f64>, mask: &Array2<u8>, normalize_bce: bool) -> Result<LossValue> {
    let (p, t) = flatten(probs, mask)?;
    Ok(dice_bce_with_grad(&p, &t, normalize_bce).0)
}
