use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use super::{conv_output_length, ConvLayerParams, NetError};

/// Values kept from a convolution forward pass for its backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvCache {
    /// Unfolded input, `(channels * width) × out_len`.
    pub cols: Array2<f64>,
    /// Pre-activations, `n_kernels × out_len`.
    pub pre: Array2<f64>,
}

fn unfold(input: ArrayView2<f64>, width: usize, stride: usize, out_len: usize) -> Array2<f64> {
    let channels = input.nrows();
    let mut cols = Array2::zeros((channels * width, out_len));
    for c in 0..channels {
        let row = input.row(c);
        for j in 0..width {
            let mut dst = cols.row_mut(c * width + j);
            for t in 0..out_len {
                dst[t] = row[t * stride + j];
            }
        }
    }
    cols
}

/// Strided multichannel convolution followed by ReLU.
///
/// `out[k, t] = relu(b[k] + sum_c sum_j K[k, c, j] * x[c, t * stride + j])`.
/// Returns the activations and the cache needed by [`conv_backward`].
pub fn conv_forward(
    input: ArrayView2<f64>,
    layer: &ConvLayerParams,
) -> Result<(Array2<f64>, ConvCache), NetError> {
    if input.nrows() != layer.in_channels() {
        return Err(NetError::ShapeError(format!(
            "input has {} rows, kernels expect {}",
            input.nrows(),
            layer.in_channels()
        )));
    }
    let width = layer.width();
    let out_len = conv_output_length(input.ncols(), width, layer.stride)?;
    let cols = unfold(input, width, layer.stride, out_len);
    let n = layer.n_kernels();
    let kernels = layer
        .kernels
        .view()
        .into_shape_with_order((n, layer.in_channels() * width))
        .expect("standard layout");
    let mut pre = Array2::zeros((n, out_len));
    for (mut row, &b) in pre.rows_mut().into_iter().zip(layer.biases.iter()) {
        row.fill(b);
    }
    general_mat_mul(1.0, &kernels, &cols, 1.0, &mut pre);
    let act = pre.mapv(|v| v.max(0.0));
    Ok((act, ConvCache { cols, pre }))
}

/// Backward pass of [`conv_forward`] given the gradient w.r.t. its output
/// activations. Accumulates kernel and bias gradients into `grad` and
/// returns the gradient w.r.t. the layer input when `want_input` is set.
pub fn conv_backward(
    d_act: &Array2<f64>,
    cache: &ConvCache,
    layer: &ConvLayerParams,
    grad: &mut ConvLayerParams,
    input_len: usize,
    want_input: bool,
) -> Option<Array2<f64>> {
    let n = layer.n_kernels();
    let channels = layer.in_channels();
    let width = layer.width();
    let out_len = cache.pre.ncols();
    // ReLU gate; the result is sparse once it has come through max pooling
    let mut nonzero: Vec<(usize, usize, f64)> = Vec::new();
    for k in 0..n {
        for t in 0..out_len {
            let g = d_act[[k, t]];
            if g != 0.0 && cache.pre[[k, t]] > 0.0 {
                nonzero.push((k, t, g));
            }
        }
    }
    let cw = channels * width;
    let mut gk = grad
        .kernels
        .view_mut()
        .into_shape_with_order((n, cw))
        .expect("standard layout");
    let kernels = layer
        .kernels
        .view()
        .into_shape_with_order((n, cw))
        .expect("standard layout");

    let dense = nonzero.len() * 4 > n * out_len;
    let mut d_cols = if want_input {
        Some(Array2::<f64>::zeros((cw, out_len)))
    } else {
        None
    };
    if dense {
        let mut d_pre = Array2::zeros((n, out_len));
        for &(k, t, g) in &nonzero {
            d_pre[[k, t]] = g;
        }
        general_mat_mul(1.0, &d_pre, &cache.cols.t(), 1.0, &mut gk);
        grad.biases += &d_pre.sum_axis(Axis(1));
        if let Some(dc) = d_cols.as_mut() {
            general_mat_mul(1.0, &kernels.t(), &d_pre, 0.0, dc);
        }
    } else {
        for &(k, t, g) in &nonzero {
            gk.row_mut(k).scaled_add(g, &cache.cols.column(t));
            grad.biases[k] += g;
            if let Some(dc) = d_cols.as_mut() {
                dc.column_mut(t).scaled_add(g, &kernels.row(k));
            }
        }
    }

    d_cols.map(|dc| {
        let mut d_in = Array2::zeros((channels, input_len));
        for c in 0..channels {
            for j in 0..width {
                let src = dc.row(c * width + j);
                for t in 0..out_len {
                    d_in[[c, t * layer.stride + j]] += src[t];
                }
            }
        }
        d_in
    })
}

/// Boundaries of `p_out` contiguous regions over `len` values; the first
/// `len % p_out` regions hold one extra value.
pub fn pool_regions(len: usize, p_out: usize) -> Result<Vec<(usize, usize)>, NetError> {
    if p_out == 0 || len < p_out {
        return Err(NetError::PoolTooSmall { len, p_out });
    }
    let base = len / p_out;
    let extra = len % p_out;
    let mut start = 0;
    Ok((0..p_out)
        .map(|r| {
            let size = base + usize::from(r < extra);
            let region = (start, start + size);
            start += size;
            region
        })
        .collect())
}

/// Max over each pooling region, with the index of the first maximum.
pub fn maxpool_adaptive(
    map: ArrayView1<f64>,
    p_out: usize,
) -> Result<(Vec<f64>, Vec<usize>), NetError> {
    let regions = pool_regions(map.len(), p_out)?;
    let mut pooled = Vec::with_capacity(p_out);
    let mut argmax = Vec::with_capacity(p_out);
    for (a, b) in regions {
        let mut best = a;
        for i in a + 1..b {
            if map[i] > map[best] {
                best = i;
            }
        }
        pooled.push(map[best]);
        argmax.push(best);
    }
    Ok((pooled, argmax))
}

pub fn softmax(logits: &Array1<f64>) -> Array1<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp = logits.mapv(|v| (v - max).exp());
    let sum = exp.sum();
    exp / sum
}
