use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use prosody_core::harness::{
    evaluate, majority_baseline, render_table, run_experiment, write_training_log, HarnessError,
    Report,
};
use prosody_core::io::{features_to_csv, read_wav, write_features_bin};
use prosody_core::net::{read_checkpoint, write_checkpoint, CheckpointMeta};
use prosody_core::signal::{extract_features, FeatureSet, FrameSpec};
use prosody_core::synth::{generate_corpus, SynthSpec};
use prosody_core::windows::assemble_entries;
use prosody_core::{LabelScheme, RunConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{self, Overrides};
use crate::data::load_dataset;
use crate::{CliError, EvalArgs, ExtractArgs, FeatureFormat, ReportArgs, RunArgs, SynthArgs};

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(vec![msg.into()])
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("value serializes") + "\n"
}

pub fn extract(args: &ExtractArgs) -> Result<(), CliError> {
    let set: FeatureSet = args.features.parse().map_err(input)?;
    let spec = FrameSpec::new(args.frame_ms, args.hop_ms).map_err(|e| input(e.to_string()))?;
    if !args.input.is_dir() {
        return Err(input(format!(
            "input directory {} does not exist",
            args.input.display()
        )));
    }
    let mut wavs: Vec<PathBuf> = fs::read_dir(&args.input)
        .map_err(|e| input(format!("{}: {e}", args.input.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
        .collect();
    wavs.sort();
    create_dir(&args.out)?;

    let results: Vec<_> = wavs
        .par_iter()
        .map(|path| {
            let id = path
                .file_stem()
                .expect("file has a name")
                .to_string_lossy()
                .into_owned();
            read_wav(path)
                .map_err(|e| e.to_string())
                .and_then(|a| {
                    extract_features(&a, &spec, set).map_err(|e| format!("{}: {e}", path.display()))
                })
                .map(|t| t.with_utterance_id(id))
        })
        .collect();
    let mut failures = Vec::new();
    let mut written = 0;
    for r in results {
        match r {
            Ok(track) => {
                let stem = args.out.join(&track.utterance_id);
                if matches!(args.format, FeatureFormat::Csv | FeatureFormat::Both) {
                    write_file(&stem.with_extension("csv"), features_to_csv(&track))?;
                }
                if matches!(args.format, FeatureFormat::Bin | FeatureFormat::Both) {
                    write_features_bin(&stem.with_extension("f32"), &track)
                        .map_err(|e| CliError::Failed(e.to_string()))?;
                }
                written += 1;
            }
            Err(e) => failures.push(e),
        }
    }
    log::info!("extracted {written} of {} files", wavs.len());
    if failures.is_empty() {
        Ok(())
    } else {
        for f in &failures {
            eprintln!("error: {f}");
        }
        Err(CliError::Failed(format!(
            "{} of {} files failed",
            failures.len(),
            wavs.len()
        )))
    }
}

pub fn synth(args: &SynthArgs) -> Result<(), CliError> {
    let mut spec = match &args.spec {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| input(format!("{}: {e}", p.display())))?;
            toml::from_str::<SynthSpec>(&text)
                .map_err(|e| input(format!("{}: {e}", p.display())))?
        }
        None => SynthSpec::default(),
    };
    if let Some(v) = args.speakers {
        spec.n_speakers = v;
    }
    if let Some(v) = args.utterances {
        spec.n_utterances_per_speaker = v;
    }
    if let Some(v) = args.seed {
        spec.seed = v;
    }
    if let Some(v) = args.noise {
        spec.noise_level = v;
    }
    if let Some(v) = args.accent_rate {
        spec.accent_rate = v;
    }
    if let Some(v) = args.boundary_rate {
        spec.boundary_rate = v;
    }
    if let Some(v) = args.distractor_prob {
        spec.distractor_prob = v;
    }
    let corpus = generate_corpus(&spec).map_err(|e| CliError::Input(e.0))?;
    corpus
        .write_to(&args.out)
        .map_err(|e| CliError::Failed(e.to_string()))?;
    println!(
        "wrote {} utterances, {} words, {} speakers to {}",
        corpus.utterances.len(),
        corpus.n_words(),
        corpus.speakers.len(),
        args.out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct RunManifest<'a> {
    tool: String,
    config: &'a config::ExperimentConfigFile,
    n_entries: usize,
    n_excluded: usize,
    speakers: Vec<String>,
    variants: Vec<VariantManifest>,
}

#[derive(Serialize)]
struct VariantManifest {
    variant: String,
    report: String,
    accuracy: f64,
    failed_folds: usize,
    folds: Vec<String>,
}

fn experiment_error(e: HarnessError) -> CliError {
    match e {
        HarnessError::InvalidConfig(m) => input(m),
        other => CliError::Failed(other.to_string()),
    }
}

pub fn run(args: &RunArgs) -> Result<(), CliError> {
    let over = Overrides {
        name: args.name.clone(),
        output_dir: args.out.clone(),
        task: args.task.clone(),
        feature_set: args.features.clone(),
        context: args.context.clone(),
        cv: args.cv.clone(),
        k: args.k,
        val_size: args.val_size,
        epochs: args.epochs,
        repetitions: args.repetitions,
        zscore: args.zscore,
        seed: args.seed,
    };
    let cfg = config::load(&args.config, &over).map_err(CliError::Input)?;
    let scheme = LabelScheme::new(cfg.run.task);
    let dataset = load_dataset(
        &cfg.audio_dir,
        &cfg.alignments,
        &cfg.labels,
        cfg.run.feature_set,
        &cfg.frame_spec,
        &scheme,
    )?;
    log::info!(
        "{} words ({} excluded) from {} utterances",
        dataset.len(),
        dataset.exclusions.len(),
        dataset.utterances.len()
    );
    let root = cfg.output_dir.join(&cfg.name);
    create_dir(&root)?;
    write_file(&root.join("exclusions.txt"), dataset.exclusion_report())?;

    let mut reports: Vec<Report> = Vec::new();
    let mut manifests = Vec::new();
    for &variant in &cfg.variants {
        let run_cfg = RunConfig {
            variant,
            ..cfg.run.clone()
        };
        log::info!("running {}", variant.label());
        let out = run_experiment(&run_cfg, &dataset).map_err(experiment_error)?;
        let dir_name = format!(
            "{}{}",
            variant.code(),
            if run_cfg.zscore { "-z" } else { "" }
        );
        let vdir = root.join(&dir_name);
        create_dir(&vdir)?;
        let mut folds = Vec::new();
        for art in &out.artifacts {
            let fold_dir = format!("rep{}_fold{}", art.repetition, art.fold_id);
            let fdir = vdir.join(&fold_dir);
            create_dir(&fdir)?;
            write_file(&fdir.join("train_log.csv"), write_training_log(&art.log))?;
            if let Some(params) = &art.params {
                let meta = CheckpointMeta::new(
                    params,
                    run_cfg.task,
                    run_cfg.feature_set,
                    cfg.frame_spec,
                    art.window,
                    run_cfg.zscore,
                    run_cfg.seed,
                );
                let path = fdir.join("model.ckpt");
                let file = fs::File::create(&path)
                    .map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))?;
                write_checkpoint(BufWriter::new(file), params, &meta)
                    .map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))?;
            }
            folds.push(format!("{dir_name}/{fold_dir}"));
        }
        write_file(&vdir.join("report.json"), out.report.to_json())?;
        manifests.push(VariantManifest {
            variant: variant.code().to_string(),
            report: format!("{dir_name}/report.json"),
            accuracy: out.report.accuracy,
            failed_folds: out.report.failed_folds,
            folds,
        });
        reports.push(out.report);
    }
    let table = render_table(&reports);
    write_file(&root.join("summary.txt"), &table)?;
    let manifest = RunManifest {
        tool: format!("prosody {}", env!("CARGO_PKG_VERSION")),
        config: &cfg,
        n_entries: dataset.len(),
        n_excluded: dataset.exclusions.len(),
        speakers: dataset.speakers().into_iter().map(|s| s.0).collect(),
        variants: manifests,
    };
    write_file(&root.join("manifest.json"), to_json(&manifest))?;
    print!("{table}");

    let failed: usize = reports.iter().map(|r| r.failed_folds).sum();
    if failed > 0 {
        return Err(CliError::Failed(format!(
            "{failed} fold(s) failed; see {}",
            root.display()
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct EvalOutput {
    checkpoint: String,
    task: String,
    accuracy: f64,
    n_test: usize,
    confusion: Vec<Vec<usize>>,
    baseline: f64,
}

pub fn eval(args: &EvalArgs) -> Result<(), CliError> {
    let file = fs::File::open(&args.checkpoint)
        .map_err(|e| input(format!("{}: {e}", args.checkpoint.display())))?;
    let (params, meta) = read_checkpoint(std::io::BufReader::new(file))
        .map_err(|e| input(format!("{}: {e}", args.checkpoint.display())))?;
    let scheme = LabelScheme::new(meta.task);
    let mut dataset = load_dataset(
        &args.audio_dir,
        &args.alignments,
        &args.labels,
        meta.feature_set,
        &meta.frame_spec,
        &scheme,
    )?;
    if meta.zscore {
        dataset = dataset.zscored();
    }
    let ids: Vec<usize> = (0..dataset.len()).collect();
    let windows = assemble_entries(&dataset, &ids, &meta.window)
        .map_err(|e| CliError::Failed(e.to_string()))?;
    let metrics = evaluate(&params, windows.iter()).map_err(|e| CliError::Failed(e.to_string()))?;
    let out = EvalOutput {
        checkpoint: args.checkpoint.display().to_string(),
        task: meta.task.code().to_string(),
        accuracy: metrics.accuracy,
        n_test: metrics.n_test,
        confusion: metrics.confusion,
        baseline: majority_baseline(&dataset),
    };
    let json = to_json(&out);
    if let Some(p) = &args.out {
        write_file(p, &json)?;
    }
    print!("{json}");
    Ok(())
}

pub fn report(args: &ReportArgs) -> Result<(), CliError> {
    let mut reports = Vec::new();
    let mut errors = Vec::new();
    for p in &args.reports {
        match fs::read_to_string(p)
            .map_err(|e| e.to_string())
            .and_then(|t| Report::from_json(&t).map_err(|e| e.to_string()))
        {
            Ok(r) => reports.push(r),
            Err(e) => errors.push(format!("{}: {e}", p.display())),
        }
    }
    if !errors.is_empty() {
        return Err(CliError::Input(errors));
    }
    print!("{}", render_table(&reports));
    Ok(())
}
