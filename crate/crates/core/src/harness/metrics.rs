use serde::{Deserialize, Serialize};

use crate::corpus::Dataset;
use crate::net::{model_forward, predict, ModelParams, NetError};
use crate::windows::InputWindow;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub n_test: usize,
}

impl Metrics {
    pub fn from_confusion(confusion: Vec<Vec<usize>>) -> Self {
        let n_test: usize = confusion.iter().flatten().sum();
        let correct: usize = (0..confusion.len()).map(|i| confusion[i][i]).sum();
        let accuracy = if n_test == 0 {
            0.0
        } else {
            correct as f64 / n_test as f64
        };
        Self {
            accuracy,
            confusion,
            n_test,
        }
    }

    pub fn correct(&self) -> usize {
        (0..self.confusion.len())
            .map(|i| self.confusion[i][i])
            .sum()
    }
}

/// Accuracy and confusion matrix of argmax predictions.
pub fn evaluate<'a, I>(params: &ModelParams, windows: I) -> Result<Metrics, NetError>
where
    I: IntoIterator<Item = &'a InputWindow>,
{
    let n = params.geometry.n_classes;
    let mut confusion = vec![vec![0; n]; n];
    for w in windows {
        if w.class_index >= n {
            return Err(NetError::ShapeError(format!(
                "class {} outside a {n}-class model",
                w.class_index
            )));
        }
        let trace = model_forward(w.matrix.view(), params, None)?;
        confusion[w.class_index][predict(&trace.probs)] += 1;
    }
    Ok(Metrics::from_confusion(confusion))
}

/// Relative frequency of the most common class.
pub fn majority_baseline(dataset: &Dataset) -> f64 {
    majority_of(&dataset.class_counts())
}

pub(crate) fn majority_of(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    *counts.iter().max().unwrap() as f64 / total as f64
}
