//! Two-layer CNN over word windows, trained from scratch.
//!
//! Layer 1 slides `conv1_kernels` full-height kernels (all `d'` input rows ×
//! `conv1_width` frames) along time with stride `conv1_stride`; layer 2
//! convolves the resulting maps with `conv2_width`-frame kernels spanning all
//! layer-1 maps. Both are followed by ReLU. Each layer-2 map is max-pooled
//! into `pool_out` regions, the pooled values are concatenated, passed
//! through inverted dropout during training, and classified by a softmax
//! layer.

mod adam;
mod checkpoint;
mod layers;
mod model;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{
    read_checkpoint, write_checkpoint, CheckpointMeta, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use layers::{conv_backward, conv_forward, maxpool_adaptive, pool_regions, softmax, ConvCache};
pub use model::{
    cross_entropy, model_backward, model_backward_into, model_forward, predict, ForwardTrace,
    DROPOUT_KEEP,
};

use ndarray::{Array1, Array2, Array3};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NetError {
    #[error("input of length {len} is shorter than kernel width {kernel}")]
    InputTooShort { len: usize, kernel: usize },
    #[error("cannot pool {len} values into {p_out} regions")]
    PoolTooSmall { len: usize, p_out: usize },
    #[error("shape mismatch: {0}")]
    ShapeError(String),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
}

/// `floor((s_in - k) / stride) + 1` for a valid (unpadded) convolution.
pub fn conv_output_length(s_in: usize, k: usize, stride: usize) -> Result<usize, NetError> {
    assert!(stride > 0 && k > 0);
    if s_in < k {
        return Err(NetError::InputTooShort {
            len: s_in,
            kernel: k,
        });
    }
    Ok((s_in - k) / stride + 1)
}

/// Layer sizes of the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Geometry {
    /// Rows of the input window (`d'`), the height of every layer-1 kernel.
    pub input_rows: usize,
    /// Padded window width the model is trained on.
    pub input_width: usize,
    pub conv1_kernels: usize,
    pub conv1_width: usize,
    pub conv1_stride: usize,
    pub conv2_kernels: usize,
    pub conv2_width: usize,
    pub conv2_stride: usize,
    pub pool_out: usize,
    pub n_classes: usize,
}

impl Geometry {
    pub const DEFAULT_POOL_OUT: usize = 2;

    /// 100 kernels of 6 frames, stride 4; then 100 kernels of 4, stride 2.
    pub fn standard(input_rows: usize, input_width: usize, n_classes: usize) -> Self {
        Self {
            input_rows,
            input_width,
            conv1_kernels: 100,
            conv1_width: 6,
            conv1_stride: 4,
            conv2_kernels: 100,
            conv2_width: 4,
            conv2_stride: 2,
            pool_out: Self::DEFAULT_POOL_OUT,
            n_classes,
        }
    }

    pub fn conv1_len(&self, width: usize) -> Result<usize, NetError> {
        conv_output_length(width, self.conv1_width, self.conv1_stride)
    }

    pub fn conv2_len(&self, width: usize) -> Result<usize, NetError> {
        conv_output_length(self.conv1_len(width)?, self.conv2_width, self.conv2_stride)
    }

    pub fn softmax_input_dim(&self) -> usize {
        self.conv2_kernels * self.pool_out
    }

    /// Smallest window width whose layer-2 maps can be pooled to `pool_out`.
    pub fn min_input_width(&self) -> usize {
        let l1 = self.conv2_width + self.conv2_stride * (self.pool_out - 1);
        self.conv1_width + self.conv1_stride * (l1 - 1)
    }

    pub fn validate(&self) -> Result<(), NetError> {
        let positive = [
            self.input_rows,
            self.conv1_kernels,
            self.conv1_width,
            self.conv1_stride,
            self.conv2_kernels,
            self.conv2_width,
            self.conv2_stride,
            self.pool_out,
        ];
        if positive.contains(&0) {
            return Err(NetError::InvalidGeometry("zero-sized layer".into()));
        }
        if !matches!(self.n_classes, 2 | 6) {
            return Err(NetError::InvalidGeometry(format!(
                "{} output classes (expected 2 or 6)",
                self.n_classes
            )));
        }
        if self.input_width < self.min_input_width() {
            return Err(NetError::InvalidGeometry(format!(
                "input width {} is below the minimum {}",
                self.input_width,
                self.min_input_width()
            )));
        }
        Ok(())
    }
}

/// Kernels are `(n_kernels, in_channels, width)`; layer 1 treats each input
/// row as a channel so its kernels span the full window height.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayerParams {
    pub kernels: Array3<f64>,
    pub biases: Array1<f64>,
    pub stride: usize,
}

impl ConvLayerParams {
    pub fn zeros(n_kernels: usize, in_channels: usize, width: usize, stride: usize) -> Self {
        Self {
            kernels: Array3::zeros((n_kernels, in_channels, width)),
            biases: Array1::zeros(n_kernels),
            stride,
        }
    }

    pub fn n_kernels(&self) -> usize {
        self.kernels.dim().0
    }

    pub fn in_channels(&self) -> usize {
        self.kernels.dim().1
    }

    pub fn width(&self) -> usize {
        self.kernels.dim().2
    }
}

/// All trainable parameters. Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub geometry: Geometry,
    pub conv1: ConvLayerParams,
    pub conv2: ConvLayerParams,
    /// `(conv2_kernels * pool_out) × n_classes`.
    pub softmax_weights: Array2<f64>,
    pub softmax_bias: Array1<f64>,
}

fn glorot_fill<R: Rng>(values: &mut [f64], fan_in: usize, fan_out: usize, rng: &mut R) {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for v in values {
        *v = rng.random_range(-limit..=limit);
    }
}

impl ModelParams {
    pub fn zeros(geometry: Geometry) -> Self {
        let g = geometry;
        Self {
            geometry,
            conv1: ConvLayerParams::zeros(
                g.conv1_kernels,
                g.input_rows,
                g.conv1_width,
                g.conv1_stride,
            ),
            conv2: ConvLayerParams::zeros(
                g.conv2_kernels,
                g.conv1_kernels,
                g.conv2_width,
                g.conv2_stride,
            ),
            softmax_weights: Array2::zeros((g.softmax_input_dim(), g.n_classes)),
            softmax_bias: Array1::zeros(g.n_classes),
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng>(geometry: Geometry, rng: &mut R) -> Self {
        let g = geometry;
        let mut p = Self::zeros(geometry);
        let r1 = g.input_rows * g.conv1_width;
        let r2 = g.conv1_kernels * g.conv2_width;
        let [k1, _, k2, _, w, _] = p.tensors_mut();
        // fan_out counts every output map a weight feeds, as in Keras
        glorot_fill(k1, r1, g.conv1_kernels * r1, rng);
        glorot_fill(k2, r2, g.conv2_kernels * g.conv2_width, rng);
        glorot_fill(w, g.softmax_input_dim(), g.n_classes, rng);
        p
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.geometry)
    }

    /// Parameter tensors in storage order: conv1 kernels, conv1 biases,
    /// conv2 kernels, conv2 biases, softmax weights, softmax bias.
    pub fn tensors(&self) -> [&[f64]; 6] {
        [
            self.conv1.kernels.as_slice().expect("standard layout"),
            self.conv1.biases.as_slice().expect("standard layout"),
            self.conv2.kernels.as_slice().expect("standard layout"),
            self.conv2.biases.as_slice().expect("standard layout"),
            self.softmax_weights.as_slice().expect("standard layout"),
            self.softmax_bias.as_slice().expect("standard layout"),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 6] {
        [
            self.conv1.kernels.as_slice_mut().expect("standard layout"),
            self.conv1.biases.as_slice_mut().expect("standard layout"),
            self.conv2.kernels.as_slice_mut().expect("standard layout"),
            self.conv2.biases.as_slice_mut().expect("standard layout"),
            self.softmax_weights
                .as_slice_mut()
                .expect("standard layout"),
            self.softmax_bias.as_slice_mut().expect("standard layout"),
        ]
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.iter().all(|v| v.is_finite()))
    }

    pub fn fill(&mut self, value: f64) {
        for t in self.tensors_mut() {
            t.fill(value);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= factor);
        }
    }

    /// Flat copy in storage order.
    pub fn to_flat(&self) -> Vec<f64> {
        self.tensors()
            .iter()
            .flat_map(|t| t.iter().copied())
            .collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<(), NetError> {
        if flat.len() != self.num_params() {
            return Err(NetError::ShapeError(format!(
                "{} values for {} parameters",
                flat.len(),
                self.num_params()
            )));
        }
        let mut offset = 0;
        for t in self.tensors_mut() {
            let n = t.len();
            t.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn conv_output_length_examples() {
        assert_eq!(conv_output_length(50, 6, 4), Ok(12));
        assert_eq!(conv_output_length(12, 4, 2), Ok(5));
        assert_eq!(conv_output_length(6, 6, 4), Ok(1));
        assert_eq!(
            conv_output_length(5, 6, 4),
            Err(NetError::InputTooShort { len: 5, kernel: 6 })
        );
    }

    #[test]
    fn standard_geometry() {
        let g = Geometry::standard(6, 50, 2);
        assert_eq!(g.conv1_len(50), Ok(12));
        assert_eq!(g.conv2_len(50), Ok(5));
        assert_eq!(g.softmax_input_dim(), 200);
        assert_eq!(g.min_input_width(), 26);
        assert_eq!(g.conv2_len(26), Ok(2));
        assert_eq!(g.conv2_len(25), Ok(1));
        assert!(g.validate().is_ok());
        assert!(Geometry::standard(6, 25, 2).validate().is_err());
        assert!(Geometry::standard(6, 50, 3).validate().is_err());
    }

    #[test]
    fn init_is_bounded_and_seeded() {
        let g = Geometry::standard(5, 40, 6);
        let a = ModelParams::init(g, &mut ChaCha8Rng::seed_from_u64(3));
        let b = ModelParams::init(g, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
        let limit = (6.0 / (30.0 + 3000.0f64)).sqrt();
        assert!(a.conv1.kernels.iter().all(|v| v.abs() <= limit));
        assert!(a.conv1.biases.iter().all(|&v| v == 0.0));
        assert_eq!(a.softmax_weights.dim(), (200, 6));
        let mut c = a.zeros_like();
        c.set_flat(&a.to_flat()).unwrap();
        assert_eq!(a, c);
    }
}
