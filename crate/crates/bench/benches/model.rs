use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use ndarray::Array2;
use prosody_core::net::{model_backward_into, model_forward};
use prosody_core::{Geometry, ModelParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn forward_backward(c: &mut Criterion) {
    let mut group = c.benchmark_group("model");
    for (rows, width) in [(6, 60), (6, 140), (33, 140)] {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = Geometry::standard(rows, width, 2);
        let params = ModelParams::init(g, &mut rng);
        let input = Array2::from_shape_fn((rows, width), |_| rng.random_range(-1.0..1.0));
        let id = format!("{rows}x{width}");
        group.bench_with_input(BenchmarkId::new("forward", &id), &input, |b, x| {
            b.iter(|| model_forward(black_box(x.view()), &params, None).unwrap())
        });
        let mut grads = params.zeros_like();
        group.bench_with_input(BenchmarkId::new("forward_backward", &id), &input, |b, x| {
            b.iter(|| {
                let trace = model_forward(black_box(x.view()), &params, Some(7)).unwrap();
                model_backward_into(&trace, 1, &params, &mut grads);
            })
        });
    }
    group.finish();
}

criterion_group!(benches, forward_backward);
criterion_main!(benches);
