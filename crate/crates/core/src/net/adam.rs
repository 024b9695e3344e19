use serde::{Deserialize, Serialize};

use super::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// L2 coefficient, added to the gradient as `l2 * theta`.
    pub l2: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            alpha: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            l2: 1e-4,
        }
    }
}

/// First and second moment estimates, shaped like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: ModelParams,
    pub v: ModelParams,
    pub t: u64,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(params: &ModelParams, config: AdamConfig) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
            config,
        }
    }
}

/// One Adam update with L2 regularization folded into the gradient.
pub fn adam_step(params: &mut ModelParams, grads: &ModelParams, state: &mut AdamState) {
    state.t += 1;
    let AdamConfig {
        alpha,
        beta1,
        beta2,
        eps,
        l2,
    } = state.config;
    let bc1 = 1.0 - beta1.powi(state.t as i32);
    let bc2 = 1.0 - beta2.powi(state.t as i32);
    for (((theta, g), m), v) in params
        .tensors_mut()
        .into_iter()
        .zip(grads.tensors())
        .zip(state.m.tensors_mut())
        .zip(state.v.tensors_mut())
    {
        for i in 0..theta.len() {
            let g = g[i] + l2 * theta[i];
            m[i] = beta1 * m[i] + (1.0 - beta1) * g;
            v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            theta[i] -= alpha * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::Geometry;

    fn tiny() -> ModelParams {
        let mut g = Geometry::standard(1, 26, 2);
        g.conv1_kernels = 1;
        g.conv2_kernels = 1;
        ModelParams::zeros(g)
    }

    #[test]
    fn first_step_from_zero() {
        let mut params = tiny();
        let mut grads = params.zeros_like();
        grads.fill(1.0);
        let cfg = AdamConfig {
            l2: 0.0,
            ..AdamConfig::default()
        };
        let mut state = AdamState::new(&params, cfg);
        adam_step(&mut params, &grads, &mut state);
        assert_eq!(state.t, 1);
        // m_hat = v_hat = 1, so the step is alpha / (1 + eps)
        let expected = -1e-3 / (1.0 + 1e-8);
        for t in params.tensors() {
            assert!(t.iter().all(|&v| (v - expected).abs() < 1e-15));
        }
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut params = tiny();
        params.fill(0.5);
        let before = params.clone();
        let grads = params.zeros_like();
        let mut state = AdamState::new(
            &params,
            AdamConfig {
                l2: 0.0,
                ..AdamConfig::default()
            },
        );
        adam_step(&mut params, &grads, &mut state);
        assert_eq!(params, before);
    }

    #[test]
    fn quadratic_decreases() {
        // f(theta) = theta^2 on every parameter, gradient 2 theta
        let mut params = tiny();
        params.fill(1.0);
        let mut state = AdamState::new(
            &params,
            AdamConfig {
                l2: 0.0,
                ..AdamConfig::default()
            },
        );
        let f = |p: &ModelParams| p.to_flat()[0].powi(2);
        let mut last = f(&params);
        for _ in 0..2 {
            let mut grads = params.clone();
            grads.scale(2.0);
            adam_step(&mut params, &grads, &mut state);
            let now = f(&params);
            assert!(now < last);
            last = now;
        }
    }

    #[test]
    fn l2_pulls_towards_zero() {
        let mut params = tiny();
        params.fill(2.0);
        let grads = params.zeros_like();
        let mut state = AdamState::new(
            &params,
            AdamConfig {
                l2: 0.1,
                ..AdamConfig::default()
            },
        );
        adam_step(&mut params, &grads, &mut state);
        assert!(params.to_flat().iter().all(|&v| v < 2.0));
        assert!(state.v.to_flat().iter().all(|&v| v >= 0.0));
    }
}
