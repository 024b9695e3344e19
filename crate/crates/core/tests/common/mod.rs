//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use ndarray::{Array1, Array2};
use prosody_core::net::ModelParams;
use prosody_core::Geometry;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Small geometry for exhaustive checks: kernels 3/2, strides 2/1.
pub fn tiny_geometry(
    rows: usize,
    width: usize,
    kernels: usize,
    pool_out: usize,
    n_classes: usize,
) -> Geometry {
    Geometry {
        input_rows: rows,
        input_width: width,
        conv1_kernels: kernels,
        conv1_width: 3,
        conv1_stride: 2,
        conv2_kernels: kernels,
        conv2_width: 2,
        conv2_stride: 1,
        pool_out,
        n_classes,
    }
}

pub fn random_input(rng: &mut impl Rng, rows: usize, width: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, width), |_| rng.random_range(-1.0..1.0))
}

/// Parameters with every entry (biases included) drawn uniformly, so no
/// path through the network is trivially zero.
pub fn random_params(rng: &mut impl Rng, geometry: Geometry, scale: f64) -> ModelParams {
    let mut p = ModelParams::zeros(geometry);
    let flat: Vec<f64> = (0..p.num_params())
        .map(|_| rng.random_range(-scale..scale))
        .collect();
    p.set_flat(&flat).unwrap();
    p
}

/// Direct loop transcription of one strided valid convolution with ReLU.
/// `input[c][t]`, kernels indexed `[k][c][j]` via the closure.
fn conv_relu(
    input: &[Vec<f64>],
    n_kernels: usize,
    width: usize,
    stride: usize,
    kernel: impl Fn(usize, usize, usize) -> f64,
    bias: impl Fn(usize) -> f64,
) -> Vec<Vec<f64>> {
    let len = input[0].len();
    let out_len = (len - width) / stride + 1;
    let mut out = vec![vec![0.0; out_len]; n_kernels];
    for k in 0..n_kernels {
        for t in 0..out_len {
            let mut acc = bias(k);
            for (c, row) in input.iter().enumerate() {
                for j in 0..width {
                    acc += kernel(k, c, j) * row[t * stride + j];
                }
            }
            out[k][t] = acc.max(0.0);
        }
    }
    out
}

pub struct NaiveOutput {
    pub pooled: Vec<f64>,
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
}

/// Reference forward pass. `mask` multiplies the pooled vector (already
/// scaled for inverted dropout).
pub fn naive_forward(
    input: &Array2<f64>,
    p: &ModelParams,
    mask: Option<&Array1<f64>>,
) -> NaiveOutput {
    let g = p.geometry;
    let x: Vec<Vec<f64>> = input.rows().into_iter().map(|r| r.to_vec()).collect();
    let a1 = conv_relu(
        &x,
        g.conv1_kernels,
        g.conv1_width,
        g.conv1_stride,
        |k, c, j| p.conv1.kernels[[k, c, j]],
        |k| p.conv1.biases[k],
    );
    let a2 = conv_relu(
        &a1,
        g.conv2_kernels,
        g.conv2_width,
        g.conv2_stride,
        |k, c, j| p.conv2.kernels[[k, c, j]],
        |k| p.conv2.biases[k],
    );
    // Regions: split L as evenly as possible, earlier regions one longer.
    let len = a2[0].len();
    let mut bounds = vec![0];
    for r in 0..g.pool_out {
        let size = len / g.pool_out + usize::from(r < len % g.pool_out);
        bounds.push(bounds[r] + size);
    }
    let mut pooled = Vec::new();
    for map in &a2 {
        for r in 0..g.pool_out {
            pooled.push(
                map[bounds[r]..bounds[r + 1]]
                    .iter()
                    .cloned()
                    .fold(f64::NEG_INFINITY, f64::max),
            );
        }
    }
    let dropped: Vec<f64> = match mask {
        Some(m) => pooled.iter().zip(m.iter()).map(|(a, b)| a * b).collect(),
        None => pooled.clone(),
    };
    let logits: Vec<f64> = (0..g.n_classes)
        .map(|c| {
            let mut z = p.softmax_bias[c];
            for (f, v) in dropped.iter().enumerate() {
                z += v * p.softmax_weights[[f, c]];
            }
            z
        })
        .collect();
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let s: f64 = e.iter().sum();
    NaiveOutput {
        pooled,
        logits,
        probs: e.iter().map(|v| v / s).collect(),
    }
}

pub fn naive_loss(
    input: &Array2<f64>,
    p: &ModelParams,
    mask: Option<&Array1<f64>>,
    target: usize,
) -> f64 {
    -(naive_forward(input, p, mask).probs[target] + 1e-12).ln()
}

/// Central finite differences of the loss with respect to every parameter.
pub fn numeric_gradient(
    input: &Array2<f64>,
    p: &ModelParams,
    mask: Option<&Array1<f64>>,
    target: usize,
    h: f64,
) -> Vec<f64> {
    let base = p.to_flat();
    let mut q = p.clone();
    let mut out = Vec::with_capacity(base.len());
    let mut flat = base.clone();
    for i in 0..base.len() {
        flat[i] = base[i] + h;
        q.set_flat(&flat).unwrap();
        let plus = naive_loss(input, &q, mask, target);
        flat[i] = base[i] - h;
        q.set_flat(&flat).unwrap();
        let minus = naive_loss(input, &q, mask, target);
        flat[i] = base[i];
        out.push((plus - minus) / (2.0 * h));
    }
    out
}

/// Relative error with a floor on the denominator so that gradients at the
/// level of finite-difference noise are compared absolutely.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}
