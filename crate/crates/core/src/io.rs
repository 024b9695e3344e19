//! File formats: WAV audio, feature tracks (CSV and binary with a JSON
//! sidecar) and window dumps.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::corpus::FrameSpan;
use crate::signal::{AudioBuffer, FeatureTrack, FrameSpec, SignalError};
use crate::windows::InputWindow;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: unsupported audio: {message}")]
    UnsupportedAudio { path: PathBuf, message: String },
    #[error("{path}: malformed feature file: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error(transparent)]
    Signal(#[from] SignalError),
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> IoError {
    IoError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Reads a mono WAV file holding integer PCM (8–32 bit) or 32-bit float
/// samples.
pub fn read_wav(path: &Path) -> Result<AudioBuffer, IoError> {
    let unsupported = |message: String| IoError::UnsupportedAudio {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = hound::WavReader::open(path).map_err(|e| unsupported(e.to_string()))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(unsupported(format!(
            "{} channels, expected mono",
            spec.channels
        )));
    }
    let samples: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => {
            if spec.bits_per_sample != 32 {
                return Err(unsupported(format!("{}-bit float", spec.bits_per_sample)));
            }
            reader
                .samples::<f32>()
                .map(|s| s.map(f64::from))
                .collect::<Result<_, _>>()
                .map_err(|e| unsupported(e.to_string()))?
        }
        hound::SampleFormat::Int => {
            let scale = 2f64.powi(i32::from(spec.bits_per_sample) - 1);
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| f64::from(v) / scale))
                .collect::<Result<_, _>>()
                .map_err(|e| unsupported(e.to_string()))?
        }
    };
    AudioBuffer::new(samples, spec.sample_rate).map_err(|e| unsupported(e.to_string()))
}

/// Writes 16-bit PCM, clipping to [-1, 1].
pub fn write_wav(path: &Path, audio: &AudioBuffer) -> Result<(), IoError> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: audio.sample_rate(),
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec).map_err(|e| io_err(path, e))?;
    for &s in audio.samples() {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        w.write_sample(v).map_err(|e| io_err(path, e))?;
    }
    w.finalize().map_err(|e| io_err(path, e))
}

/// Formats with 6 significant digits, switching to exponent notation for
/// very large or small magnitudes.
pub fn format_sig6(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..=9).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{v:.5e}")
    }
}

/// CSV with header `utterance_id,frame_idx,<feature names>`, one row per
/// frame.
pub fn features_to_csv(track: &FeatureTrack) -> String {
    let mut s = String::from("utterance_id,frame_idx");
    for n in &track.feature_names {
        s.push(',');
        s.push_str(n);
    }
    s.push('\n');
    for t in 0..track.num_frames() {
        s.push_str(&track.utterance_id);
        s.push(',');
        s.push_str(&t.to_string());
        for r in 0..track.dim() {
            s.push(',');
            s.push_str(&format_sig6(track.values[[r, t]]));
        }
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSidecar {
    pub utterance_id: String,
    pub feature_names: Vec<String>,
    pub rows: usize,
    pub frames: usize,
    pub frame_len_ms: f64,
    pub hop_ms: f64,
    /// Matrix element order in the blob.
    pub layout: String,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

fn write_f32_blob(path: &Path, values: &Array2<f64>) -> Result<(), IoError> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    for v in values.iter() {
        w.write_all(&(*v as f32).to_le_bytes())
            .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let text = serde_json::to_string_pretty(value).expect("sidecar serializes") + "\n";
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Writes the track as a row-major little-endian f32 matrix at `path` and
/// its metadata at `<path>.json`.
pub fn write_features_bin(path: &Path, track: &FeatureTrack) -> Result<(), IoError> {
    write_f32_blob(path, &track.values)?;
    write_json(
        &sidecar_path(path),
        &FeatureSidecar {
            utterance_id: track.utterance_id.clone(),
            feature_names: track.feature_names.clone(),
            rows: track.dim(),
            frames: track.num_frames(),
            frame_len_ms: track.frame_len_ms,
            hop_ms: track.hop_ms,
            layout: "row_major_features_by_frames".into(),
        },
    )
}

pub fn read_features_bin(path: &Path) -> Result<FeatureTrack, IoError> {
    let side = sidecar_path(path);
    let malformed = |message: String| IoError::Malformed {
        path: path.to_path_buf(),
        message,
    };
    let meta: FeatureSidecar =
        serde_json::from_str(&fs::read_to_string(&side).map_err(|e| io_err(&side, e))?)
            .map_err(|e| malformed(e.to_string()))?;
    if meta.feature_names.len() != meta.rows {
        return Err(malformed(format!(
            "{} names for {} rows",
            meta.feature_names.len(),
            meta.rows
        )));
    }
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    if bytes.len() != meta.rows * meta.frames * 4 {
        return Err(malformed(format!(
            "{} bytes, expected {}",
            bytes.len(),
            meta.rows * meta.frames * 4
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
        .collect();
    let values = Array2::from_shape_vec((meta.rows, meta.frames), values).expect("length checked");
    let spec = FrameSpec::new(meta.frame_len_ms, meta.hop_ms)?;
    Ok(FeatureTrack::new(
        values,
        meta.feature_names,
        &spec,
        meta.utterance_id,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSidecar {
    pub utterance_id: String,
    pub word_index: usize,
    pub span: FrameSpan,
    pub class_index: usize,
    pub rows: usize,
    pub frames: usize,
}

/// Debug dump of one assembled input window.
pub fn write_window_dump(
    path: &Path,
    window: &InputWindow,
    utterance_id: &str,
    word_index: usize,
) -> Result<(), IoError> {
    write_f32_blob(path, &window.matrix)?;
    write_json(
        &sidecar_path(path),
        &WindowSidecar {
            utterance_id: utterance_id.to_string(),
            word_index,
            span: window.current_span,
            class_index: window.class_index,
            rows: window.matrix.nrows(),
            frames: window.matrix.ncols(),
        },
    )
}
