//! Minimal channel-major feature maps and the layer kernels used by the
//! encoder-decoder. Each kernel has an explicit backward pass.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, ArrayView2, ArrayViewMut2};

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Tensor {
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(c: usize, h: usize, w: usize) -> Self {
        Tensor {
            c,
            h,
            w,
            data: vec![0.0; c * h * w],
        }
    }

    pub fn plane(&self, ch: usize) -> &[f64] {
        let n = self.h * self.w;
        &self.data[ch * n..(ch + 1) * n]
    }

    pub fn plane_mut(&mut self, ch: usize) -> &mut [f64] {
        let n = self.h * self.w;
        &mut self.data[ch * n..(ch + 1) * n]
    }
}

/// Shape and parameter offsets of one convolution (stride 1, "same" padding).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ConvSpec {
    pub cin: usize,
    pub cout: usize,
    pub k: usize,
    pub w_off: usize,
    pub b_off: usize,
}

impl ConvSpec {
    pub fn n_weights(&self) -> usize {
        self.cout * self.cin * self.k * self.k
    }
}

/// Iterate over the valid (dst, src) row/column ranges for a kernel offset.
#[inline]
fn span(n: usize, d: isize) -> (usize, usize) {
    let lo = if d < 0 { (-d) as usize } else { 0 };
    let hi = if d > 0 { n - d as usize } else { n };
    (lo, hi)
}

/// Unfold `input` into a `(cin·k·k) × (h·w)` patch matrix, zero padded.
fn im2col(spec: &ConvSpec, input: &Tensor) -> Array2<f64> {
    let (h, w) = (input.h, input.w);
    let r = (spec.k / 2) as isize;
    let mut cols = Array2::zeros((spec.cin * spec.k * spec.k, h * w));
    for ci in 0..spec.cin {
        let src = input.plane(ci);
        for ky in 0..spec.k {
            let dy = ky as isize - r;
            let (y0, y1) = span(h, dy);
            for kx in 0..spec.k {
                let dx = kx as isize - r;
                let (x0, x1) = span(w, dx);
                let sx0 = (x0 as isize + dx) as usize;
                let mut row = cols.row_mut((ci * spec.k + ky) * spec.k + kx);
                let row = row.as_slice_mut().expect("standard layout");
                for y in y0..y1 {
                    let sy = (y as isize + dy) as usize;
                    row[y * w + x0..y * w + x1].copy_from_slice(&src[sy * w + sx0..sy * w + sx0 + (x1 - x0)]);
                }
            }
        }
    }
    cols
}

/// Fold a patch-matrix gradient back onto the input grid (adjoint of [`im2col`]).
fn col2im(spec: &ConvSpec, cols: &Array2<f64>, h: usize, w: usize) -> Tensor {
    let r = (spec.k / 2) as isize;
    let mut out = Tensor::zeros(spec.cin, h, w);
    for ci in 0..spec.cin {
        let dst = out.plane_mut(ci);
        for ky in 0..spec.k {
            let dy = ky as isize - r;
            let (y0, y1) = span(h, dy);
            for kx in 0..spec.k {
                let dx = kx as isize - r;
                let (x0, x1) = span(w, dx);
                let sx0 = (x0 as isize + dx) as usize;
                let row = cols.row((ci * spec.k + ky) * spec.k + kx);
                let row = row.as_slice().expect("standard layout");
                for y in y0..y1 {
                    let sy = (y as isize + dy) as usize;
                    let d = &mut dst[sy * w + sx0..sy * w + sx0 + (x1 - x0)];
                    for (a, b) in d.iter_mut().zip(&row[y * w + x0..y * w + x1]) {
                        *a += b;
                    }
                }
            }
        }
    }
    out
}

fn weight_matrix<'a>(spec: &ConvSpec, params: &'a [f64]) -> ArrayView2<'a, f64> {
    let kk = spec.cin * spec.k * spec.k;
    ArrayView2::from_shape((spec.cout, kk), &params[spec.w_off..spec.w_off + spec.n_weights()]).expect("weight block")
}

pub(crate) fn conv_forward(spec: &ConvSpec, params: &[f64], input: &Tensor) -> Tensor {
    let (h, w) = (input.h, input.w);
    let mut out = Tensor::zeros(spec.cout, h, w);
    for co in 0..spec.cout {
        let bias = params[spec.b_off + co];
        out.plane_mut(co).iter_mut().for_each(|v| *v = bias);
    }
    let cols = im2col(spec, input);
    let mut dst = ArrayViewMut2::from_shape((spec.cout, h * w), &mut out.data).expect("output block");
    general_mat_mul(1.0, &weight_matrix(spec, params), &cols, 1.0, &mut dst);
    out
}

/// Accumulates parameter gradients into `grads` and returns dL/d(input).
pub(crate) fn conv_backward(
    spec: &ConvSpec,
    params: &[f64],
    input: &Tensor,
    grad_out: &Tensor,
    grads: &mut [f64],
    need_input_grad: bool,
) -> Option<Tensor> {
    let (h, w) = (input.h, input.w);
    let go = ArrayView2::from_shape((spec.cout, h * w), &grad_out.data).expect("grad block");
    for co in 0..spec.cout {
        grads[spec.b_off + co] += grad_out.plane(co).iter().sum::<f64>();
    }
    let cols = im2col(spec, input);
    let kk = spec.cin * spec.k * spec.k;
    let mut gw = ArrayViewMut2::from_shape((spec.cout, kk), &mut grads[spec.w_off..spec.w_off + spec.n_weights()])
        .expect("weight block");
    general_mat_mul(1.0, &go, &cols.t(), 1.0, &mut gw);
    need_input_grad.then(|| {
        let gcols = weight_matrix(spec, params).t().dot(&go);
        col2im(spec, &gcols, h, w)
    })
}

pub(crate) fn relu_inplace(t: &mut Tensor) {
    t.data.iter_mut().for_each(|v| *v = v.max(0.0));
}

/// Gate a gradient by the sign of the forward output of a ReLU.
pub(crate) fn relu_backward(activated: &Tensor, grad: &mut Tensor) {
    for (g, &a) in grad.data.iter_mut().zip(&activated.data) {
        if a <= 0.0 {
            *g = 0.0;
        }
    }
}

/// 2×2 max pooling. Returns the pooled map and, per output cell, the flat
/// input offset of the winner (first maximum in row-major order).
pub(crate) fn maxpool_forward(input: &Tensor) -> (Tensor, Vec<usize>) {
    let (h2, w2) = (input.h / 2, input.w / 2);
    let mut out = Tensor::zeros(input.c, h2, w2);
    let mut arg = Vec::with_capacity(input.c * h2 * w2);
    for c in 0..input.c {
        let base = c * input.h * input.w;
        for y in 0..h2 {
            for x in 0..w2 {
                let cands = [
                    base + (2 * y) * input.w + 2 * x,
                    base + (2 * y) * input.w + 2 * x + 1,
                    base + (2 * y + 1) * input.w + 2 * x,
                    base + (2 * y + 1) * input.w + 2 * x + 1,
                ];
                let mut best = cands[0];
                for &i in &cands[1..] {
                    if input.data[i] > input.data[best] {
                        best = i;
                    }
                }
                out.data[(c * h2 + y) * w2 + x] = input.data[best];
                arg.push(best);
            }
        }
    }
    (out, arg)
}

pub(crate) fn maxpool_backward(arg: &[usize], grad_out: &Tensor, c: usize, h: usize, w: usize) -> Tensor {
    let mut gi = Tensor::zeros(c, h, w);
    for (g, &i) in grad_out.data.iter().zip(arg) {
        gi.data[i] += g;
    }
    gi
}

/// Half-pixel bilinear taps for a 2× upsample along one axis, clamped at
/// the borders: output `o` reads `(o + 0.5) / 2 - 0.5` in input coordinates.
fn up_taps(n: usize) -> Vec<(usize, usize, f64, f64)> {
    (0..2 * n)
        .map(|o| {
            let src = (o as f64 + 0.5) / 2.0 - 0.5;
            let f = src.floor();
            let frac = src - f;
            let i0 = (f.max(0.0) as usize).min(n - 1);
            let i1 = ((f + 1.0).max(0.0) as usize).min(n - 1);
            (i0, i1, 1.0 - frac, frac)
        })
        .collect()
}

pub(crate) fn upsample_forward(input: &Tensor) -> Tensor {
    let (h, w) = (input.h, input.w);
    let ty = up_taps(h);
    let tx = up_taps(w);
    let mut out = Tensor::zeros(input.c, 2 * h, 2 * w);
    let mut rows = vec![0.0; 2 * h * w];
    for c in 0..input.c {
        let src = input.plane(c);
        for (oy, &(i0, i1, w0, w1)) in ty.iter().enumerate() {
            for x in 0..w {
                rows[oy * w + x] = w0 * src[i0 * w + x] + w1 * src[i1 * w + x];
            }
        }
        let dst = out.plane_mut(c);
        for oy in 0..2 * h {
            for (ox, &(j0, j1, v0, v1)) in tx.iter().enumerate() {
                dst[oy * 2 * w + ox] = v0 * rows[oy * w + j0] + v1 * rows[oy * w + j1];
            }
        }
    }
    out
}

pub(crate) fn upsample_backward(grad_out: &Tensor) -> Tensor {
    let (h, w) = (grad_out.h / 2, grad_out.w / 2);
    let ty = up_taps(h);
    let tx = up_taps(w);
    let mut gi = Tensor::zeros(grad_out.c, h, w);
    let mut rows = vec![0.0; 2 * h * w];
    for c in 0..grad_out.c {
        let go = grad_out.plane(c);
        rows.iter_mut().for_each(|v| *v = 0.0);
        for oy in 0..2 * h {
            for (ox, &(j0, j1, v0, v1)) in tx.iter().enumerate() {
                let g = go[oy * 2 * w + ox];
                rows[oy * w + j0] += v0 * g;
                rows[oy * w + j1] += v1 * g;
            }
        }
        let dst = gi.plane_mut(c);
        for (oy, &(i0, i1, w0, w1)) in ty.iter().enumerate() {
            for x in 0..w {
                let g = rows[oy * w + x];
                dst[i0 * w + x] += w0 * g;
                dst[i1 * w + x] += w1 * g;
            }
        }
    }
    gi
}
