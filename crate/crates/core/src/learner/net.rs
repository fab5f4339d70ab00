use ndarray::Array2;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::tensor::{
    conv_backward, conv_forward, maxpool_backward, maxpool_forward, relu_backward, relu_inplace,
    upsample_backward, upsample_forward, ConvSpec, Tensor,
};
use super::PredictionBundle;
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Relu,
    /// Linear hidden layers; only useful for testing the backward pass.
    Identity,
}

/// Encoder-decoder layout: conv(c1) → pool → conv(c2) → pool →
/// conv(c_bottleneck) → up → conv(c2) → up → conv(c1) → conv1×1 → sigmoid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub channels: [usize; 3],
    pub activation: Activation,
}

pub(crate) const LAYER_NAMES: [&str; 6] = ["enc1", "enc2", "bottleneck", "dec2", "dec1", "head"];

impl Architecture {
    pub(crate) fn layers(&self) -> [ConvSpec; 6] {
        let [c1, c2, cb] = self.channels;
        let dims = [(1, c1, 3), (c1, c2, 3), (c2, cb, 3), (cb, c2, 3), (c2, c1, 3), (c1, 1, 1)];
        let mut off = 0;
        dims.map(|(cin, cout, k)| {
            let w_off = off;
            let b_off = w_off + cout * cin * k * k;
            off = b_off + cout;
            ConvSpec { cin, cout, k, w_off, b_off }
        })
    }

    pub fn n_params(&self) -> usize {
        let last = self.layers()[5];
        last.b_off + last.cout
    }

    pub fn feature_len(&self, h: usize, w: usize) -> usize {
        self.channels[2] * (h / 4) * (w / 4)
    }

    /// Names and shapes of every parameter tensor, in storage order.
    pub fn tensor_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        for (name, l) in LAYER_NAMES.iter().zip(self.layers()) {
            out.push((format!("{name}.weight"), vec![l.cout, l.cin, l.k, l.k]));
            out.push((format!("{name}.bias"), vec![l.cout]));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    pub fn reset(&mut self) {
        *self = AdamState::new(self.m.len());
    }
}

/// Weights (flat, in [`Architecture::tensor_shapes`] order) plus optimizer
/// state and the number of epochs trained so far.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub arch: Architecture,
    pub params: Vec<f64>,
    pub adam: AdamState,
    pub epochs_done: u64,
}

impl ModelState {
    /// He-normal weights, zero biases.
    pub fn init(arch: Architecture, seed: u64) -> Self {
        let mut rng = rng::seeded(rng::derive(seed, 0xD1CE));
        let mut params = vec![0.0; arch.n_params()];
        for l in arch.layers() {
            let fan_in = (l.cin * l.k * l.k) as f64;
            let dist = Normal::new(0.0, (2.0 / fan_in).sqrt()).expect("positive sd");
            for p in &mut params[l.w_off..l.w_off + l.n_weights()] {
                *p = dist.sample(&mut rng);
            }
        }
        Self::from_params(arch, params)
    }

    pub fn zeros(arch: Architecture) -> Self {
        Self::from_params(arch, vec![0.0; arch.n_params()])
    }

    pub fn from_params(arch: Architecture, params: Vec<f64>) -> Self {
        let n = params.len();
        ModelState {
            arch,
            params,
            adam: AdamState::new(n),
            epochs_done: 0,
        }
    }
}

/// Activations kept for the backward pass.
pub(crate) struct Trace {
    x0: Tensor,
    a1: Tensor,
    pool1: Vec<usize>,
    p1: Tensor,
    a2: Tensor,
    pool2: Vec<usize>,
    p2: Tensor,
    a3: Tensor,
    u1: Tensor,
    a4: Tensor,
    u2: Tensor,
    a5: Tensor,
    pub probs: Vec<f64>,
}

impl Trace {
    pub(crate) fn features(&self) -> &[f64] {
        &self.a3.data
    }

    /// ReLU on/off pattern and pooling winners; used to detect kinks.
    pub(crate) fn pattern(&self) -> (Vec<bool>, Vec<usize>) {
        let act = [&self.a1, &self.a2, &self.a3, &self.a4, &self.a5]
            .iter()
            .flat_map(|t| t.data.iter().map(|&v| v > 0.0))
            .collect();
        let pools = self.pool1.iter().chain(&self.pool2).copied().collect();
        (act, pools)
    }
}

fn check_dims(h: usize, w: usize) -> Result<()> {
    if h == 0 || w == 0 || !h.is_multiple_of(4) || !w.is_multiple_of(4) {
        return Err(Error::shape(format!(
            "image dimensions {h}x{w} must be positive multiples of 4"
        )));
    }
    Ok(())
}

fn activate(arch: &Architecture, t: &mut Tensor) {
    if arch.activation == Activation::Relu {
        relu_inplace(t);
    }
}

fn deactivate(arch: &Architecture, a: &Tensor, g: &mut Tensor) {
    if arch.activation == Activation::Relu {
        relu_backward(a, g);
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn forward_trace(model: &ModelState, image: &[f64], h: usize, w: usize) -> Result<Trace> {
    check_dims(h, w)?;
    if image.len() != h * w {
        return Err(Error::shape(format!("image has {} pixels, expected {}", image.len(), h * w)));
    }
    let arch = &model.arch;
    let p = &model.params;
    let [l1, l2, l3, l4, l5, l6] = arch.layers();
    let x0 = Tensor { c: 1, h, w, data: image.to_vec() };

    let mut a1 = conv_forward(&l1, p, &x0);
    activate(arch, &mut a1);
    let (p1, pool1) = maxpool_forward(&a1);
    let mut a2 = conv_forward(&l2, p, &p1);
    activate(arch, &mut a2);
    let (p2, pool2) = maxpool_forward(&a2);
    let mut a3 = conv_forward(&l3, p, &p2);
    activate(arch, &mut a3);
    let u1 = upsample_forward(&a3);
    let mut a4 = conv_forward(&l4, p, &u1);
    activate(arch, &mut a4);
    let u2 = upsample_forward(&a4);
    let mut a5 = conv_forward(&l5, p, &u2);
    activate(arch, &mut a5);
    let logits = conv_forward(&l6, p, &a5);
    let probs = logits.data.iter().map(|&z| sigmoid(z)).collect();

    Ok(Trace { x0, a1, pool1, p1, a2, pool2, p2, a3, u1, a4, u2, a5, probs })
}

/// Back-propagate dL/d(probs) through the network; returns flat gradients.
pub(crate) fn backward(model: &ModelState, trace: &Trace, grad_probs: &[f64]) -> Vec<f64> {
    let arch = &model.arch;
    let p = &model.params;
    let [l1, l2, l3, l4, l5, l6] = arch.layers();
    let mut grads = vec![0.0; p.len()];
    let (h, w) = (trace.x0.h, trace.x0.w);

    let dz6 = Tensor {
        c: 1,
        h,
        w,
        data: grad_probs
            .iter()
            .zip(&trace.probs)
            .map(|(g, &q)| g * q * (1.0 - q))
            .collect(),
    };
    let mut g5 = conv_backward(&l6, p, &trace.a5, &dz6, &mut grads, true).expect("input grad");
    deactivate(arch, &trace.a5, &mut g5);
    let gu2 = conv_backward(&l5, p, &trace.u2, &g5, &mut grads, true).expect("input grad");
    let mut g4 = upsample_backward(&gu2);
    deactivate(arch, &trace.a4, &mut g4);
    let gu1 = conv_backward(&l4, p, &trace.u1, &g4, &mut grads, true).expect("input grad");
    let mut g3 = upsample_backward(&gu1);
    deactivate(arch, &trace.a3, &mut g3);
    let gp2 = conv_backward(&l3, p, &trace.p2, &g3, &mut grads, true).expect("input grad");
    let mut g2 = maxpool_backward(&trace.pool2, &gp2, trace.a2.c, trace.a2.h, trace.a2.w);
    deactivate(arch, &trace.a2, &mut g2);
    let gp1 = conv_backward(&l2, p, &trace.p1, &g2, &mut grads, true).expect("input grad");
    let mut g1 = maxpool_backward(&trace.pool1, &gp1, trace.a1.c, trace.a1.h, trace.a1.w);
    deactivate(arch, &trace.a1, &mut g1);
    conv_backward(&l1, p, &trace.x0, &g1, &mut grads, false);
    grads
}

/// Probability map and flattened bottleneck activations for one image.
pub fn forward(model: &ModelState, image: &Array2<f64>) -> Result<PredictionBundle> {
    let (h, w) = image.dim();
    let pixels: Vec<f64> = image.iter().copied().collect();
    let trace = forward_trace(model, &pixels, h, w)?;
    Ok(PredictionBundle {
        features: trace.features().to_vec(),
        probs: Array2::from_shape_vec((h, w), trace.probs).expect("shape"),
    })
}
