//! Experiment config file: a flat TOML table. Every problem (unknown key,
//! wrong type, bad value, missing path) is collected before reporting.

use std::path::{Path, PathBuf};

use prosody_core::harness::{CvSpec, ModelConfig, RunConfig};
use prosody_core::net::AdamConfig;
use prosody_core::signal::{FeatureSet, FrameSpec};
use prosody_core::windows::WindowVariant;
use prosody_core::Task;
use serde::Serialize;

const KEYS: &[&str] = &[
    "name",
    "audio_dir",
    "alignments",
    "labels",
    "output_dir",
    "task",
    "feature_set",
    "variants",
    "cv",
    "k",
    "val_size",
    "epochs",
    "repetitions",
    "zscore",
    "seed",
    "batch_size",
    "learning_rate",
    "l2",
    "conv1_kernels",
    "conv2_kernels",
    "pool_out",
    "frame_len_ms",
    "hop_ms",
];

/// Values given on the command line; each replaces the file's value.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub name: Option<String>,
    pub output_dir: Option<PathBuf>,
    pub task: Option<String>,
    pub feature_set: Option<String>,
    pub context: Option<String>,
    pub cv: Option<String>,
    pub k: Option<usize>,
    pub val_size: Option<usize>,
    pub epochs: Option<usize>,
    pub repetitions: Option<usize>,
    pub zscore: bool,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfigFile {
    pub name: String,
    pub audio_dir: PathBuf,
    pub alignments: PathBuf,
    pub labels: PathBuf,
    pub output_dir: PathBuf,
    pub variants: Vec<WindowVariant>,
    pub frame_spec: FrameSpec,
    /// `variant` is the first of `variants`; the run loops over all of them.
    pub run: RunConfig,
}

struct Reader<'a> {
    table: &'a toml::Table,
    errors: Vec<String>,
}

impl Reader<'_> {
    fn get<T>(
        &mut self,
        key: &str,
        kind: &str,
        conv: impl Fn(&toml::Value) -> Option<T>,
    ) -> Option<T> {
        let v = self.table.get(key)?;
        match conv(v) {
            Some(x) => Some(x),
            None => {
                self.errors.push(format!("`{key}` must be {kind}, got {v}"));
                None
            }
        }
    }

    fn string(&mut self, key: &str) -> Option<String> {
        self.get(key, "a string", |v| v.as_str().map(str::to_string))
    }

    fn count(&mut self, key: &str) -> Option<usize> {
        self.get(key, "a non-negative integer", |v| {
            v.as_integer().and_then(|i| usize::try_from(i).ok())
        })
    }

    fn float(&mut self, key: &str) -> Option<f64> {
        self.get(key, "a number", |v| {
            v.as_float().or_else(|| v.as_integer().map(|i| i as f64))
        })
    }

    fn parsed<T: std::str::FromStr<Err = String>>(
        &mut self,
        key: &str,
        text: Option<String>,
    ) -> Option<T> {
        let text = text?;
        match text.parse() {
            Ok(v) => Some(v),
            Err(e) => {
                self.errors.push(format!("`{key}`: {e}"));
                None
            }
        }
    }
}

fn parse_variants(text: &str) -> Result<Vec<WindowVariant>, String> {
    if text == "all" {
        return Ok(WindowVariant::ALL.to_vec());
    }
    text.split(',').map(|s| s.trim().parse()).collect()
}

/// Loads `path`, applies `over`, and validates the result.
pub fn load(path: &Path, over: &Overrides) -> Result<ExperimentConfigFile, Vec<String>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| vec![format!("{}: {e}", path.display())])?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| vec![format!("{}: {e}", path.display())])?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut r = Reader {
        table: &table,
        errors: Vec::new(),
    };
    for key in table.keys() {
        if !KEYS.contains(&key.as_str()) {
            r.errors.push(format!("unknown key `{key}`"));
        }
    }

    let resolve = |p: String| {
        let p = PathBuf::from(p);
        if p.is_absolute() {
            p
        } else {
            base.join(p)
        }
    };
    let input_path = |r: &mut Reader, key: &str| -> PathBuf {
        match r.string(key) {
            Some(p) => {
                let p = resolve(p);
                if !p.exists() {
                    r.errors
                        .push(format!("`{key}`: {} does not exist", p.display()));
                }
                p
            }
            None => {
                if !r.table.contains_key(key) {
                    r.errors.push(format!("missing required key `{key}`"));
                }
                PathBuf::new()
            }
        }
    };
    let audio_dir = input_path(&mut r, "audio_dir");
    let alignments = input_path(&mut r, "alignments");
    let labels = input_path(&mut r, "labels");
    let output_dir = match (&over.output_dir, r.string("output_dir")) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => resolve(p),
        (None, None) => base.join("runs"),
    };
    let name = over
        .name
        .clone()
        .or_else(|| r.string("name"))
        .unwrap_or_else(|| {
            path.file_stem()
                .map_or("experiment".into(), |s| s.to_string_lossy().into_owned())
        });
    if name.is_empty() || name.contains(['/', '\\']) || name == "." || name == ".." {
        r.errors
            .push(format!("`name` `{name}` is not usable as a directory name"));
    }

    let d = RunConfig::default();
    let task_text = over.task.clone().or_else(|| r.string("task"));
    let task: Task = r.parsed("task", task_text).unwrap_or(d.task);
    let set_text = over.feature_set.clone().or_else(|| r.string("feature_set"));
    let feature_set: FeatureSet = r.parsed("feature_set", set_text).unwrap_or(d.feature_set);

    let file_variants = r.get("variants", "an array of strings", |v| {
        v.as_array().and_then(|a| {
            a.iter()
                .map(|x| x.as_str().map(str::to_string))
                .collect::<Option<Vec<_>>>()
        })
    });
    let variants = match (&over.context, file_variants) {
        (Some(c), _) => parse_variants(c).unwrap_or_else(|e| {
            r.errors.push(format!("--context: {e}"));
            Vec::new()
        }),
        (None, Some(list)) => parse_variants(&list.join(",")).unwrap_or_else(|e| {
            r.errors.push(format!("`variants`: {e}"));
            Vec::new()
        }),
        (None, None) => WindowVariant::ALL.to_vec(),
    };
    if variants.is_empty()
        && !r
            .errors
            .iter()
            .any(|e| e.contains("context") || e.contains("variants"))
    {
        r.errors
            .push("`variants` must name at least one window variant".into());
    }

    let cv_kind = over
        .cv
        .clone()
        .or_else(|| r.string("cv"))
        .unwrap_or_else(|| "loso".into());
    let k = over.k.or_else(|| r.count("k"));
    let val_size = over.val_size.or_else(|| r.count("val_size"));
    let cv = match cv_kind.as_str() {
        "kfold" => {
            let CvSpec::Kfold {
                k: dk,
                val_size: dv,
            } = CvSpec::kfold()
            else {
                unreachable!()
            };
            CvSpec::Kfold {
                k: k.unwrap_or(dk),
                val_size: val_size.unwrap_or(dv),
            }
        }
        "loso" => {
            let CvSpec::Loso { val_size: dv } = CvSpec::loso() else {
                unreachable!()
            };
            if k.is_some() {
                r.errors.push("`k` only applies to cv = \"kfold\"".into());
            }
            CvSpec::Loso {
                val_size: val_size.unwrap_or(dv),
            }
        }
        other => {
            r.errors.push(format!(
                "`cv` must be \"kfold\" or \"loso\", got \"{other}\""
            ));
            d.cv
        }
    };

    let epochs = over
        .epochs
        .or_else(|| r.count("epochs"))
        .unwrap_or(d.epochs);
    let repetitions = over
        .repetitions
        .or_else(|| r.count("repetitions"))
        .unwrap_or(d.repetitions);
    let zscore = over.zscore
        || r.get("zscore", "a boolean", toml::Value::as_bool)
            .unwrap_or(d.zscore);
    let seed = over
        .seed
        .or_else(|| r.count("seed").map(|s| s as u64))
        .unwrap_or(d.seed);
    let batch_size = r.count("batch_size").unwrap_or(d.batch_size);
    let adam = AdamConfig {
        alpha: r.float("learning_rate").unwrap_or(d.adam.alpha),
        l2: r.float("l2").unwrap_or(d.adam.l2),
        ..d.adam
    };
    if adam.alpha.is_nan() || adam.alpha <= 0.0 {
        r.errors.push(format!(
            "`learning_rate` must be positive, got {}",
            adam.alpha
        ));
    }
    if adam.l2.is_nan() || adam.l2 < 0.0 {
        r.errors
            .push(format!("`l2` must be non-negative, got {}", adam.l2));
    }
    let model = ModelConfig {
        conv1_kernels: r.count("conv1_kernels").unwrap_or(d.model.conv1_kernels),
        conv2_kernels: r.count("conv2_kernels").unwrap_or(d.model.conv2_kernels),
        pool_out: r.count("pool_out").unwrap_or(d.model.pool_out),
    };
    if model.conv1_kernels == 0 || model.conv2_kernels == 0 || model.pool_out == 0 {
        r.errors
            .push("`conv1_kernels`, `conv2_kernels` and `pool_out` must be positive".into());
    }
    let dframe = FrameSpec::default();
    let frame_spec = FrameSpec {
        frame_len_ms: r.float("frame_len_ms").unwrap_or(dframe.frame_len_ms),
        hop_ms: r.float("hop_ms").unwrap_or(dframe.hop_ms),
    };
    if let Err(e) = frame_spec.validate() {
        r.errors.push(format!("frame spec: {e}"));
    }

    let run = RunConfig {
        task,
        feature_set,
        variant: variants.first().copied().unwrap_or(d.variant),
        cv,
        epochs,
        repetitions,
        zscore,
        seed,
        batch_size,
        adam,
        model,
    };
    if let Err(e) = run.validate() {
        r.errors.push(e.to_string());
    }
    if !r.errors.is_empty() {
        return Err(r.errors);
    }
    Ok(ExperimentConfigFile {
        name,
        audio_dir,
        alignments,
        labels,
        output_dir,
        variants,
        frame_spec,
        run,
    })
}
