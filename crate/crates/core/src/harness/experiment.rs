use std::borrow::Cow;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cv::{make_kfold, make_loso, CvPlan, SpeakerTag};
use super::metrics::{evaluate, majority_baseline};
use super::train::{train_model, EpochLog};
use super::HarnessError;
use crate::corpus::{Dataset, Gender, Task};
use crate::net::{AdamConfig, Geometry, ModelParams};
use crate::seed;
use crate::signal::FeatureSet;
use crate::windows::{assemble_entries, scan_max_frames, WindowConfig, WindowVariant};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CvSpec {
    Kfold { k: usize, val_size: usize },
    Loso { val_size: usize },
}

impl CvSpec {
    pub fn kfold() -> Self {
        CvSpec::Kfold {
            k: 10,
            val_size: 1000,
        }
    }

    pub fn loso() -> Self {
        CvSpec::Loso { val_size: 500 }
    }
}

/// Layer widths that may be shrunk for quick runs; kernel shapes and
/// strides are fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub conv1_kernels: usize,
    pub conv2_kernels: usize,
    pub pool_out: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            conv1_kernels: 100,
            conv2_kernels: 100,
            pool_out: Geometry::DEFAULT_POOL_OUT,
        }
    }
}

impl ModelConfig {
    pub fn geometry(&self, input_rows: usize, input_width: usize, n_classes: usize) -> Geometry {
        Geometry {
            conv1_kernels: self.conv1_kernels,
            conv2_kernels: self.conv2_kernels,
            pool_out: self.pool_out,
            ..Geometry::standard(input_rows, input_width, n_classes)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    pub feature_set: FeatureSet,
    pub variant: WindowVariant,
    pub cv: CvSpec,
    pub epochs: usize,
    pub repetitions: usize,
    pub zscore: bool,
    pub seed: u64,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub model: ModelConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            task: Task::PaDetect,
            feature_set: FeatureSet::Prosody,
            variant: WindowVariant::ThreeWordsPf,
            cv: CvSpec::loso(),
            epochs: 50,
            repetitions: 3,
            zscore: false,
            seed: 0,
            batch_size: 32,
            adam: AdamConfig::default(),
            model: ModelConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let mut problems = Vec::new();
        if self.epochs == 0 {
            problems.push("epochs must be at least 1".to_string());
        }
        if self.repetitions == 0 {
            problems.push("repetitions must be at least 1".to_string());
        }
        if self.batch_size == 0 {
            problems.push("batch_size must be at least 1".to_string());
        }
        if let CvSpec::Kfold { k, .. } = self.cv {
            if k < 2 {
                problems.push(format!("k-fold needs k >= 2, got {k}"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::InvalidConfig(problems.join("; ")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum FoldStatus {
    Ok,
    Diverged { epoch: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub repetition: usize,
    pub fold_id: usize,
    pub test_speaker: Option<String>,
    pub val_speaker: Option<String>,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub status: FoldStatus,
    pub accuracy: Option<f64>,
    pub confusion: Option<Vec<Vec<usize>>>,
    pub best_epoch: Option<usize>,
    pub best_val_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerRow {
    pub speaker: String,
    pub gender: Gender,
    pub n_test: usize,
    /// Mean over repetitions.
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: RunConfig,
    pub input_width: usize,
    pub classes: Vec<String>,
    pub class_counts: Vec<usize>,
    pub n_entries: usize,
    pub n_excluded: usize,
    pub per_fold: Vec<FoldResult>,
    pub per_speaker: Vec<SpeakerRow>,
    /// Mean of fold accuracies within a repetition, then over repetitions.
    pub mean: f64,
    /// Correct over tested words within a repetition, then mean over
    /// repetitions.
    pub pooled_accuracy: f64,
    /// Headline number: pooled for leave-one-speaker-out, fold mean for
    /// k-fold.
    pub accuracy: f64,
    pub baseline: f64,
    pub failed_folds: usize,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Training output of one (repetition, fold) pair.
#[derive(Debug, Clone)]
pub struct FoldArtifacts {
    pub repetition: usize,
    pub fold_id: usize,
    pub log: Vec<EpochLog>,
    pub params: Option<ModelParams>,
    pub window: WindowConfig,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: Report,
    pub artifacts: Vec<FoldArtifacts>,
}

fn make_plan(
    config: &RunConfig,
    dataset: &Dataset,
    plan_seed: u64,
) -> Result<CvPlan, HarnessError> {
    match config.cv {
        CvSpec::Kfold { k, val_size } => {
            let ids: Vec<usize> = (0..dataset.len()).collect();
            make_kfold(&ids, k, val_size, plan_seed)
        }
        CvSpec::Loso { val_size } => {
            make_loso(&SpeakerTag::from_dataset(dataset), val_size, plan_seed)
        }
    }
}

/// Runs every repetition of the configured cross-validation and aggregates
/// the results. Folds run in parallel on the current rayon pool; results do
/// not depend on scheduling.
pub fn run_experiment(
    config: &RunConfig,
    dataset: &Dataset,
) -> Result<ExperimentOutput, HarnessError> {
    config.validate()?;
    if dataset.feature_dim() != config.feature_set.dim() {
        return Err(HarnessError::InvalidConfig(format!(
            "dataset has {} feature rows, {} expects {}",
            dataset.feature_dim(),
            config.feature_set.name(),
            config.feature_set.dim()
        )));
    }
    if dataset.scheme.task != config.task {
        return Err(HarnessError::InvalidConfig(format!(
            "dataset labelled for {}, config asks for {}",
            dataset.scheme.task, config.task
        )));
    }
    let data: Cow<Dataset> = if config.zscore {
        Cow::Owned(dataset.zscored())
    } else {
        Cow::Borrowed(dataset)
    };
    let n_classes = data.scheme.n_classes();
    let probe = config.model.geometry(1, 1, n_classes);
    let width = scan_max_frames(&data, config.variant.context())?.max(probe.min_input_width());
    let window = WindowConfig::new(config.variant, width, data.feature_dim());
    let geometry = config.model.geometry(window.input_dim(), width, n_classes);
    let all_ids: Vec<usize> = (0..data.len()).collect();
    let windows = assemble_entries(&data, &all_ids, &window)?;

    let mut jobs = Vec::new();
    let mut plans = Vec::new();
    for rep in 0..config.repetitions {
        let plan = make_plan(config, &data, seed::derive(config.seed, &[rep as u64, 100]))?;
        for f in 0..plan.folds.len() {
            jobs.push((rep, f));
        }
        plans.push(plan);
    }

    let results: Vec<Result<(FoldResult, FoldArtifacts), HarnessError>> = jobs
        .par_iter()
        .map(|&(rep, f)| {
            let fold = &plans[rep].folds[f];
            let run_seed = seed::derive(config.seed, &[rep as u64, f as u64, 200]);
            let mut result = FoldResult {
                repetition: rep,
                fold_id: f,
                test_speaker: fold.test_speaker.clone(),
                val_speaker: fold.val_speaker.clone(),
                n_train: fold.train.len(),
                n_val: fold.val.len(),
                n_test: fold.test.len(),
                status: FoldStatus::Ok,
                accuracy: None,
                confusion: None,
                best_epoch: None,
                best_val_accuracy: None,
            };
            match train_model(&windows, fold, geometry, config, run_seed) {
                Ok(trained) => {
                    let metrics =
                        evaluate(&trained.params, fold.test.iter().map(|&i| &windows[i]))?;
                    result.accuracy = Some(metrics.accuracy);
                    result.confusion = Some(metrics.confusion);
                    result.best_epoch = Some(trained.best_epoch);
                    result.best_val_accuracy = Some(trained.best_val_accuracy);
                    Ok((
                        result,
                        FoldArtifacts {
                            repetition: rep,
                            fold_id: f,
                            log: trained.log,
                            params: Some(trained.params),
                            window,
                        },
                    ))
                }
                Err(HarnessError::Diverged { epoch, loss }) => {
                    log::error!(
                        "repetition {rep} fold {f} diverged at epoch {epoch} (loss {loss})"
                    );
                    result.status = FoldStatus::Diverged { epoch };
                    Ok((
                        result,
                        FoldArtifacts {
                            repetition: rep,
                            fold_id: f,
                            log: Vec::new(),
                            params: None,
                            window,
                        },
                    ))
                }
                Err(e) => Err(e),
            }
        })
        .collect();

    let mut per_fold = Vec::with_capacity(results.len());
    let mut artifacts = Vec::with_capacity(results.len());
    for r in results {
        let (res, art) = r?;
        per_fold.push(res);
        artifacts.push(art);
    }
    let report = aggregate(config, &data, width, per_fold);
    Ok(ExperimentOutput { report, artifacts })
}

fn aggregate(
    config: &RunConfig,
    data: &Dataset,
    width: usize,
    per_fold: Vec<FoldResult>,
) -> Report {
    let mut fold_means = Vec::new();
    let mut pooled = Vec::new();
    for rep in 0..config.repetitions {
        let ok: Vec<&FoldResult> = per_fold
            .iter()
            .filter(|f| f.repetition == rep && f.status == FoldStatus::Ok)
            .collect();
        if ok.is_empty() {
            continue;
        }
        fold_means.push(ok.iter().map(|f| f.accuracy.unwrap()).sum::<f64>() / ok.len() as f64);
        let correct: usize = ok
            .iter()
            .map(|f| {
                let c = f.confusion.as_ref().unwrap();
                (0..c.len()).map(|i| c[i][i]).sum::<usize>()
            })
            .sum();
        let tested: usize = ok.iter().map(|f| f.n_test).sum();
        pooled.push(correct as f64 / tested.max(1) as f64);
    }
    let avg = |v: &[f64]| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    let mean = avg(&fold_means);
    let pooled_accuracy = avg(&pooled);

    let mut per_speaker = Vec::new();
    if matches!(config.cv, CvSpec::Loso { .. }) {
        for (speaker, gender) in data.speakers() {
            let accs: Vec<f64> = per_fold
                .iter()
                .filter(|f| f.test_speaker.as_deref() == Some(speaker.as_str()))
                .filter_map(|f| f.accuracy)
                .collect();
            let n_test = per_fold
                .iter()
                .find(|f| f.test_speaker.as_deref() == Some(speaker.as_str()))
                .map_or(0, |f| f.n_test);
            if !accs.is_empty() {
                per_speaker.push(SpeakerRow {
                    speaker,
                    gender,
                    n_test,
                    accuracy: avg(&accs),
                });
            }
        }
    }
    let accuracy = match config.cv {
        CvSpec::Loso { .. } => pooled_accuracy,
        CvSpec::Kfold { .. } => mean,
    };
    Report {
        config: config.clone(),
        input_width: width,
        classes: data.scheme.classes.clone(),
        class_counts: data.class_counts(),
        n_entries: data.len(),
        n_excluded: data.exclusions.len(),
        failed_folds: per_fold
            .iter()
            .filter(|f| f.status != FoldStatus::Ok)
            .count(),
        per_fold,
        per_speaker,
        mean,
        pooled_accuracy,
        accuracy,
        baseline: majority_baseline(data),
    }
}

/// Runs the same experiment once per window variant, sharing fold plans
/// and model seeds across variants.
pub fn run_variants(
    config: &RunConfig,
    dataset: &Dataset,
    variants: &[WindowVariant],
) -> Result<Vec<ExperimentOutput>, HarnessError> {
    variants
        .iter()
        .map(|&v| {
            let cfg = RunConfig {
                variant: v,
                ..config.clone()
            };
            run_experiment(&cfg, dataset)
        })
        .collect()
}
