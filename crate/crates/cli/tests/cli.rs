use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn prosody(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prosody"))
        .args(args)
        .env("PROSODY_JOBS", "1")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn synth(dir: &Path, speakers: usize, seed: u64) -> PathBuf {
    let out = dir.join(format!("corpus_{speakers}_{seed}"));
    let o = prosody(&[
        "synth",
        "--speakers",
        &speakers.to_string(),
        "--utterances",
        "4",
        "--seed",
        &seed.to_string(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    out
}

fn read_tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((
                    p.strip_prefix(root).unwrap().display().to_string(),
                    fs::read(&p).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}

fn write_config(dir: &Path, corpus: &Path, extra: &str) -> PathBuf {
    let p = dir.join("exp.toml");
    let body = format!(
        "name = \"tiny\"\naudio_dir = \"{}\"\nalignments = \"{}\"\nlabels = \"{}\"\noutput_dir = \"{}\"\n\
         epochs = 2\nrepetitions = 1\nval_size = 10\nconv1_kernels = 6\nconv2_kernels = 6\n{extra}",
        corpus.join("wav").display(),
        corpus.join("alignments.tsv").display(),
        corpus.join("labels.tsv").display(),
        dir.join("runs").display(),
    );
    fs::write(&p, body).unwrap();
    p
}

#[test]
fn synth_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = synth(dir.path(), 2, 1);
    let tree = read_tree(&a);
    assert!(tree.iter().any(|(n, _)| n == "manifest.json"));
    assert!(tree.iter().any(|(n, _)| n == "alignments.tsv"));
    assert_eq!(tree.iter().filter(|(n, _)| n.ends_with(".wav")).count(), 8);
    let again = prosody(&[
        "synth",
        "--speakers",
        "2",
        "--utterances",
        "4",
        "--seed",
        "1",
        "--out",
        a.to_str().unwrap(),
    ]);
    assert!(again.status.success());
    assert_eq!(read_tree(&a), tree);
}

#[test]
fn synth_rejects_invalid_spec() {
    let dir = tempfile::tempdir().unwrap();
    let o = prosody(&[
        "synth",
        "--accent-rate",
        "2",
        "--noise=-1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(
        err.contains("accent_rate") && err.contains("noise_level"),
        "{err}"
    );
}

#[test]
fn extract_writes_one_file_per_wav() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), 1, 3);
    let wav = corpus.join("wav");
    for (set, d) in [("prosody", 5), ("prosody_mel", 32)] {
        let out = dir.path().join(set);
        let o = prosody(&[
            "extract",
            "--features",
            set,
            "--in",
            wav.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let files: Vec<_> = fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        assert_eq!(files.len(), 4);
        for f in files {
            let text = fs::read_to_string(&f).unwrap();
            let header = text.lines().next().unwrap();
            assert_eq!(header.split(',').count(), 2 + d);
            assert!(header.starts_with("utterance_id,frame_idx,"));
        }
    }
    let out = dir.path().join("bin");
    let o = prosody(&[
        "extract",
        "--format",
        "both",
        "--in",
        wav.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(fs::read_dir(&out).unwrap().count(), 12);
}

#[test]
fn extract_missing_dir_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("no_such_wavs");
    let o = prosody(&[
        "extract",
        "--in",
        missing.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no_such_wavs"));
}

#[test]
fn extract_reports_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("wav");
    fs::create_dir(&wav).unwrap();
    fs::write(wav.join("broken.wav"), b"not audio").unwrap();
    let o = prosody(&[
        "extract",
        "--in",
        wav.to_str().unwrap(),
        "--out",
        dir.path().join("f").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("broken.wav"));
}

#[test]
fn run_eval_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), 2, 2);
    let cfg = write_config(dir.path(), &corpus, "");
    let cfg_s = cfg.to_str().unwrap();
    let o = prosody(&[
        "run",
        "--config",
        cfg_s,
        "--cv",
        "loso",
        "--context",
        "3w-pf",
        "--seed",
        "7",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let root = dir.path().join("runs/tiny");
    let report_path = root.join("3w-pf/report.json");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["per_speaker"].as_array().unwrap().len(), 2);
    assert_eq!(report["per_fold"].as_array().unwrap().len(), 2);
    assert!(root.join("3w-pf/rep0_fold1/model.ckpt").exists());
    let log = fs::read_to_string(root.join("3w-pf/rep0_fold0/train_log.csv")).unwrap();
    assert_eq!(log.lines().next(), Some("epoch,train_loss,val_accuracy"));
    assert_eq!(log.lines().count(), 3);
    assert!(root.join("manifest.json").exists() && root.join("summary.txt").exists());
    let first = fs::read(&report_path).unwrap();

    let o = prosody(&[
        "run",
        "--config",
        cfg_s,
        "--cv",
        "loso",
        "--context",
        "3w-pf",
        "--seed",
        "7",
        "--name",
        "again",
    ]);
    assert!(o.status.success());
    assert_eq!(
        fs::read(dir.path().join("runs/again/3w-pf/report.json")).unwrap(),
        first
    );

    let o = prosody(&["run", "--config", cfg_s, "--context", "1w", "--zscore"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let z: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(root.join("1w-z/report.json")).unwrap()).unwrap();
    assert_eq!(z["config"]["zscore"], serde_json::Value::Bool(true));

    let ckpt = root.join("3w-pf/rep0_fold0/model.ckpt");
    let o = prosody(&[
        "eval",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--audio-dir",
        corpus.join("wav").to_str().unwrap(),
        "--alignments",
        corpus.join("alignments.tsv").to_str().unwrap(),
        "--labels",
        corpus.join("labels.tsv").to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let acc = m["accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));

    let o = prosody(&[
        "report",
        report_path.to_str().unwrap(),
        root.join("1w-z/report.json").to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(
        table.contains("3 words + PF") && table.contains("z-scored"),
        "{table}"
    );
}

#[test]
fn loso_needs_two_speakers() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), 1, 4);
    let cfg = write_config(dir.path(), &corpus, "");
    let o = prosody(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--cv",
        "loso",
        "--context",
        "1w",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("at least 2 speakers"), "{}", stderr(&o));
}

#[test]
fn config_errors_listed_together() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    fs::write(&p, "audio_dir = \"missing_wavs\"\nalignments = \"a.tsv\"\nlabels = \"l.tsv\"\nlearning_rte = 0.1\nepochs = 0\n").unwrap();
    let o = prosody(&["run", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    for needle in ["learning_rte", "missing_wavs", "a.tsv", "l.tsv", "epochs"] {
        assert!(err.contains(needle), "{needle} missing from {err}");
    }
}
