mod common;

use common::*;
use ndarray::Array2;
use prosody_core::net::{conv_output_length, model_backward, model_forward, ModelParams};
use prosody_core::Geometry;
use rand::Rng;

#[test]
fn forward_matches_naive_loops() {
    let mut r = rng(11);
    for case in 0..150 {
        let rows = r.random_range(1..7);
        let kernels = r.random_range(1..6);
        let pool = r.random_range(1..4);
        let classes = if case % 2 == 0 { 2 } else { 6 };
        let mut g = tiny_geometry(rows, 0, kernels, pool, classes);
        g.input_width = g.min_input_width() + r.random_range(0..30);
        let params = random_params(&mut r, g, 0.8);
        let x = random_input(&mut r, rows, g.input_width);
        let seed = (case % 3 == 0).then_some(case as u64);
        let trace = model_forward(x.view(), &params, seed).unwrap();
        let naive = naive_forward(&x, &params, trace.dropout_mask.as_ref());
        for (a, b) in trace.pooled.iter().zip(&naive.pooled) {
            assert!((a - b).abs() < 1e-12, "case {case}: pooled {a} vs {b}");
        }
        for (a, b) in trace.logits.iter().zip(&naive.logits) {
            assert!((a - b).abs() < 1e-12, "case {case}: logit {a} vs {b}");
        }
        for (a, b) in trace.probs.iter().zip(&naive.probs) {
            assert!((a - b).abs() < 1e-12, "case {case}: prob {a} vs {b}");
        }
    }
}

#[test]
fn standard_geometry_forward_matches_naive() {
    let mut r = rng(12);
    for case in 0..4 {
        let g = Geometry::standard(6, 50 + 7 * case, 2 + 4 * (case % 2));
        let mut params = ModelParams::init(g, &mut r);
        let flat: Vec<f64> = params
            .to_flat()
            .iter()
            .map(|v| v + r.random_range(-0.01..0.01))
            .collect();
        params.set_flat(&flat).unwrap();
        let x = random_input(&mut r, 6, g.input_width);
        let trace = model_forward(x.view(), &params, None).unwrap();
        let naive = naive_forward(&x, &params, None);
        for (a, b) in trace.logits.iter().zip(&naive.logits) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn gradients_match_finite_differences() {
    for seed in 0..12u64 {
        let mut r = rng(100 + seed);
        let rows = r.random_range(2..5);
        let width = r.random_range(8..17);
        let classes = if seed % 2 == 0 { 2 } else { 6 };
        let g = tiny_geometry(rows, width, 3, 2, classes);
        let params = random_params(&mut r, g, 0.5);
        let x = random_input(&mut r, rows, width);
        let target = r.random_range(0..classes);
        let trace = model_forward(x.view(), &params, (seed % 3 == 1).then_some(seed)).unwrap();
        let analytic = model_backward(&trace, target, &params).to_flat();
        let numeric = numeric_gradient(&x, &params, trace.dropout_mask.as_ref(), target, 1e-5);
        let worst = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, n)| rel_err(*a, *n))
            .fold(0.0, f64::max);
        assert!(worst < 1e-4, "seed {seed}: max relative error {worst:e}");
    }
}

#[test]
fn layer_lengths_for_standard_kernels() {
    assert_eq!(conv_output_length(50, 6, 4).unwrap(), 12);
    assert_eq!(conv_output_length(12, 4, 2).unwrap(), 5);
    let g = Geometry::standard(6, 50, 2);
    assert_eq!(g.conv2_len(50).unwrap(), 5);
    assert_eq!(g.softmax_input_dim(), 200);
    assert_eq!(g.min_input_width(), 26);
    let x = Array2::zeros((6, 50));
    let trace = model_forward(x.view(), &ModelParams::zeros(g), None).unwrap();
    assert_eq!(trace.act1.dim(), (100, 12));
    assert_eq!(trace.act2.dim(), (100, 5));
    assert_eq!(trace.pooled.len(), 200);
}
