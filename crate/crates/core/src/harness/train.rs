use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::experiment::RunConfig;
use super::metrics::evaluate;
use super::{Fold, HarnessError};
use crate::net::{
    adam_step, cross_entropy, model_backward_into, model_forward, AdamState, Geometry, ModelParams,
};
use crate::seed;
use crate::windows::InputWindow;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    /// Parameters after the epoch with the best validation accuracy.
    pub params: ModelParams,
    pub best_epoch: usize,
    pub best_val_accuracy: f64,
    pub log: Vec<EpochLog>,
}

/// Trains for `config.epochs` epochs of shuffled mini-batches and keeps the
/// parameters of the epoch with the highest validation accuracy, the
/// earliest one on ties. `windows[i]` is the input of entry `i`.
pub fn train_model(
    windows: &[InputWindow],
    fold: &Fold,
    geometry: Geometry,
    config: &RunConfig,
    run_seed: u64,
) -> Result<TrainedModel, HarnessError> {
    if fold.train.is_empty() {
        return Err(HarnessError::EmptySet("training"));
    }
    if fold.val.is_empty() {
        return Err(HarnessError::EmptySet("validation"));
    }
    geometry.validate()?;
    let mut params = ModelParams::init(geometry, &mut seed::rng(run_seed, &[10]));
    let mut adam = AdamState::new(&params, config.adam);
    let mut grads = params.zeros_like();
    let mut order = fold.train.clone();
    let mut best: Option<(usize, f64, ModelParams)> = None;
    let mut log = Vec::with_capacity(config.epochs);
    let batch = config.batch_size.max(1);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut seed::rng(run_seed, &[11, epoch as u64]));
        let mut loss_sum = 0.0;
        for (step, chunk) in order.chunks(batch).enumerate() {
            grads.fill(0.0);
            for (i, &id) in chunk.iter().enumerate() {
                let w = &windows[id];
                let dropout_seed =
                    seed::derive(run_seed, &[12, epoch as u64, step as u64, i as u64]);
                let trace = model_forward(w.matrix.view(), &params, Some(dropout_seed))?;
                loss_sum += cross_entropy(&trace.probs, w.class_index);
                model_backward_into(&trace, w.class_index, &params, &mut grads);
            }
            grads.scale(1.0 / chunk.len() as f64);
            adam_step(&mut params, &grads, &mut adam);
        }
        let train_loss = loss_sum / order.len() as f64;
        if !train_loss.is_finite() || !params.is_finite() {
            return Err(HarnessError::Diverged {
                epoch,
                loss: train_loss,
            });
        }
        let val_accuracy = evaluate(&params, fold.val.iter().map(|&i| &windows[i]))?.accuracy;
        log::debug!("epoch {epoch}: loss {train_loss:.4}, val acc {val_accuracy:.4}");
        log.push(EpochLog {
            epoch,
            train_loss,
            val_accuracy,
        });
        if best.as_ref().is_none_or(|(_, acc, _)| val_accuracy > *acc) {
            best = Some((epoch, val_accuracy, params.clone()));
        }
    }
    let (best_epoch, best_val_accuracy, params) =
        best.ok_or(HarnessError::InvalidConfig("zero epochs".into()))?;
    Ok(TrainedModel {
        params,
        best_epoch,
        best_val_accuracy,
        log,
    })
}
