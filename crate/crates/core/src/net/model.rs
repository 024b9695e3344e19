use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;

use super::layers::{conv_backward, conv_forward, maxpool_adaptive, softmax, ConvCache};
use super::{ModelParams, NetError};
use crate::seed;

/// Keep probability of the dropout in front of the softmax layer.
pub const DROPOUT_KEEP: f64 = 0.8;

/// Everything the backward pass needs from one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub input_width: usize,
    pub conv1: ConvCache,
    pub act1: Array2<f64>,
    pub conv2: ConvCache,
    pub act2: Array2<f64>,
    /// Concatenated pooled maps, `conv2_kernels * pool_out` long.
    pub pooled: Array1<f64>,
    /// Winning time index in `act2` for every pooled value.
    pub argmax: Vec<usize>,
    /// Inverted-dropout multipliers (0 or 1/keep); `None` at inference.
    pub dropout_mask: Option<Array1<f64>>,
    /// Softmax-layer input after dropout.
    pub dropped: Array1<f64>,
    pub logits: Array1<f64>,
    pub probs: Array1<f64>,
}

/// Runs the network on one `d' × S` window. With `dropout_seed` set,
/// inverted dropout is applied to the pooled vector using a mask drawn from
/// that seed.
pub fn model_forward(
    input: ArrayView2<f64>,
    params: &ModelParams,
    dropout_seed: Option<u64>,
) -> Result<ForwardTrace, NetError> {
    let g = &params.geometry;
    if input.nrows() != g.input_rows {
        return Err(NetError::ShapeError(format!(
            "window has {} rows, model expects {}",
            input.nrows(),
            g.input_rows
        )));
    }
    let (act1, conv1) = conv_forward(input, &params.conv1)?;
    let (act2, conv2) = conv_forward(act1.view(), &params.conv2)?;

    let p = g.pool_out;
    let mut pooled = Array1::zeros(g.softmax_input_dim());
    let mut argmax = Vec::with_capacity(g.softmax_input_dim());
    for (k, map) in act2.rows().into_iter().enumerate() {
        let (vals, idx) = maxpool_adaptive(map, p)?;
        for r in 0..p {
            pooled[k * p + r] = vals[r];
        }
        argmax.extend(idx);
    }

    let dropout_mask = dropout_seed.map(|s| {
        let mut rng = seed::rng(s, &[]);
        Array1::from_shape_fn(pooled.len(), |_| {
            if rng.random::<f64>() < DROPOUT_KEEP {
                1.0 / DROPOUT_KEEP
            } else {
                0.0
            }
        })
    });
    let dropped = match &dropout_mask {
        Some(m) => &pooled * m,
        None => pooled.clone(),
    };
    let logits = dropped.dot(&params.softmax_weights) + &params.softmax_bias;
    let probs = softmax(&logits);
    Ok(ForwardTrace {
        input_width: input.ncols(),
        conv1,
        act1,
        conv2,
        act2,
        pooled,
        argmax,
        dropout_mask,
        dropped,
        logits,
        probs,
    })
}

/// `-ln(p[target] + 1e-12)`.
pub fn cross_entropy(probs: &Array1<f64>, target: usize) -> f64 {
    -(probs[target] + 1e-12).ln()
}

/// Predicted class; ties go to the lowest index.
pub fn predict(probs: &Array1<f64>) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

/// Gradient of the cross-entropy loss of one example.
pub fn model_backward(trace: &ForwardTrace, target: usize, params: &ModelParams) -> ModelParams {
    let mut grads = params.zeros_like();
    model_backward_into(trace, target, params, &mut grads);
    grads
}

/// Adds the gradient of the cross-entropy loss of one example into `grads`.
///
/// The loss is taken as `-ln p[target]`; the 1e-12 guard in
/// [`cross_entropy`] is not differentiated.
pub fn model_backward_into(
    trace: &ForwardTrace,
    target: usize,
    params: &ModelParams,
    grads: &mut ModelParams,
) {
    let g = &params.geometry;
    let mut d_logits = trace.probs.clone();
    d_logits[target] -= 1.0;

    // softmax layer
    for (f, &x) in trace.dropped.iter().enumerate() {
        if x != 0.0 {
            grads.softmax_weights.row_mut(f).scaled_add(x, &d_logits);
        }
    }
    grads.softmax_bias += &d_logits;
    let mut d_pooled = params.softmax_weights.dot(&d_logits);
    if let Some(mask) = &trace.dropout_mask {
        d_pooled *= mask;
    }

    // route through the pooling argmaxes
    let mut d_act2 = Array2::zeros(trace.act2.dim());
    for (i, &d) in d_pooled.iter().enumerate() {
        let k = i / g.pool_out;
        d_act2[[k, trace.argmax[i]]] += d;
    }

    let d_act1 = conv_backward(
        &d_act2,
        &trace.conv2,
        &params.conv2,
        &mut grads.conv2,
        trace.act1.ncols(),
        true,
    )
    .expect("input gradient requested");
    conv_backward(
        &d_act1,
        &trace.conv1,
        &params.conv1,
        &mut grads.conv1,
        trace.input_width,
        false,
    );
}
