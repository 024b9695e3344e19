use ndarray::Array2;
use prosody_core::corpus::FrameSpan;
use prosody_core::harness::{evaluate, train_model, Fold, ModelConfig};
use prosody_core::{InputWindow, RunConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ROWS: usize = 3;
const WIDTH: usize = 40;

/// Class 1 windows carry a raised plateau on row 0 at a random offset;
/// class 0 windows are noise only.
fn separable(n: usize, seed: u64) -> Vec<InputWindow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let class_index = i % 2;
            let mut matrix = Array2::from_shape_fn((ROWS, WIDTH), |_| rng.random_range(-0.3..0.3));
            if class_index == 1 {
                let at = rng.random_range(0..WIDTH - 8);
                for f in at..at + 8 {
                    matrix[[0, f]] += 1.0;
                }
            }
            InputWindow {
                matrix,
                current_span: FrameSpan {
                    start: 0,
                    end: WIDTH,
                },
                true_len: WIDTH,
                class_index,
            }
        })
        .collect()
}

fn config(epochs: usize) -> RunConfig {
    RunConfig {
        epochs,
        model: ModelConfig {
            conv1_kernels: 8,
            conv2_kernels: 8,
            pool_out: 2,
        },
        ..RunConfig::default()
    }
}

fn split(n: usize) -> Fold {
    Fold {
        train: (0..n / 2).collect(),
        val: (n / 2..3 * n / 4).collect(),
        test: (3 * n / 4..n).collect(),
        test_speaker: None,
        val_speaker: None,
    }
}

#[test]
fn learns_separable_data() {
    let windows = separable(600, 1);
    let fold = split(windows.len());
    let cfg = config(15);
    let g = cfg.model.geometry(ROWS, WIDTH, 2);
    let trained = train_model(&windows, &fold, g, &cfg, 3).unwrap();
    assert!(trained.best_val_accuracy >= 0.95, "{:?}", trained.log);
    let test = evaluate(&trained.params, fold.test.iter().map(|&i| &windows[i])).unwrap();
    assert!(test.accuracy >= 0.95, "test accuracy {}", test.accuracy);
    let first = trained.log.first().unwrap().train_loss;
    let last = trained.log.last().unwrap().train_loss;
    assert!(last < first, "loss went from {first} to {last}");
}

#[test]
fn single_epoch_keeps_that_epoch() {
    let windows = separable(80, 2);
    let fold = split(windows.len());
    let cfg = config(1);
    let trained =
        train_model(&windows, &fold, cfg.model.geometry(ROWS, WIDTH, 2), &cfg, 4).unwrap();
    assert_eq!(trained.best_epoch, 1);
    assert_eq!(trained.log.len(), 1);
    assert_eq!(trained.best_val_accuracy, trained.log[0].val_accuracy);
}

#[test]
fn training_is_reproducible() {
    let windows = separable(120, 3);
    let fold = split(windows.len());
    let cfg = config(3);
    let g = cfg.model.geometry(ROWS, WIDTH, 2);
    let a = train_model(&windows, &fold, g, &cfg, 11).unwrap();
    let b = train_model(&windows, &fold, g, &cfg, 11).unwrap();
    assert_eq!(a.params.to_flat(), b.params.to_flat());
    assert_eq!(a.log, b.log);
}
