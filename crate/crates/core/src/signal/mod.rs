//! Frame-based acoustic feature extraction.
//!
//! Two feature sets are produced from mono audio, both on the same frame grid:
//!
//! * the prosody set: smoothed f0, RMS energy, loudness, voicing probability
//!   and harmonics-to-noise ratio (5 rows), see [`prosody_features`];
//! * the Mel set: 27 log filterbank energies, see [`mel_features`].
//!
//! A [`FeatureTrack`] stores one utterance as a `d × s` matrix (features by
//! frames).

mod mel;
mod pitch;
mod prosody;

pub use mel::{hz_to_mel, mel_features, mel_to_hz, MelFilterbank, MEL_BANDS, MEL_EPSILON};
pub use pitch::{
    correct_octave_jumps, estimate_f0, median_smooth, PitchEstimate, PitchEstimator, F0_MAX_HZ,
    F0_MIN_HZ, HNR_CLAMP_DB, VOICING_THRESHOLD,
};
pub use prosody::{prosody_features, PROSODY_FEATURES};

use ndarray::{concatenate, Array2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lowest sample rate that still gives 160 samples in a 20 ms frame.
pub const MIN_SAMPLE_RATE: u32 = 8000;

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error(
        "signal of {num_samples} samples is shorter than one frame of {frame_samples} samples"
    )]
    SignalTooShort {
        num_samples: usize,
        frame_samples: usize,
    },
    #[error("audio buffer is empty")]
    EmptyAudio,
    #[error("sample rate {0} Hz is below the supported minimum of {MIN_SAMPLE_RATE} Hz")]
    SampleRateTooLow(u32),
    #[error("invalid frame spec: frame {frame_len_ms} ms, hop {hop_ms} ms")]
    InvalidFrameSpec { frame_len_ms: f64, hop_ms: f64 },
    #[error("feature tracks cannot be stacked: {0}")]
    TrackMismatch(String),
}

/// Mono audio with amplitudes nominally in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, SignalError> {
        if samples.is_empty() {
            return Err(SignalError::EmptyAudio);
        }
        if sample_rate < MIN_SAMPLE_RATE {
            return Err(SignalError::SampleRateTooLow(sample_rate));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Analysis frame length and hop, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameSpec {
    pub frame_len_ms: f64,
    pub hop_ms: f64,
}

impl Default for FrameSpec {
    fn default() -> Self {
        Self {
            frame_len_ms: 20.0,
            hop_ms: 10.0,
        }
    }
}

impl FrameSpec {
    pub fn new(frame_len_ms: f64, hop_ms: f64) -> Result<Self, SignalError> {
        let spec = Self {
            frame_len_ms,
            hop_ms,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SignalError> {
        let ok = self.hop_ms.is_finite()
            && self.frame_len_ms.is_finite()
            && self.hop_ms > 0.0
            && self.frame_len_ms >= self.hop_ms;
        if ok {
            Ok(())
        } else {
            Err(SignalError::InvalidFrameSpec {
                frame_len_ms: self.frame_len_ms,
                hop_ms: self.hop_ms,
            })
        }
    }

    pub fn frame_samples(&self, sample_rate: u32) -> usize {
        ms_to_samples(self.frame_len_ms, sample_rate)
    }

    pub fn hop_samples(&self, sample_rate: u32) -> usize {
        ms_to_samples(self.hop_ms, sample_rate).max(1)
    }
}

fn ms_to_samples(ms: f64, sample_rate: u32) -> usize {
    (ms * sample_rate as f64 / 1000.0).round() as usize
}

/// Number of complete frames that fit in `num_samples`.
pub fn frame_count(
    num_samples: usize,
    sample_rate: u32,
    spec: &FrameSpec,
) -> Result<usize, SignalError> {
    spec.validate()?;
    let frame = spec.frame_samples(sample_rate);
    let hop = spec.hop_samples(sample_rate);
    if num_samples < frame || frame == 0 {
        return Err(SignalError::SignalTooShort {
            num_samples,
            frame_samples: frame,
        });
    }
    Ok((num_samples - frame) / hop + 1)
}

/// Which acoustic feature rows make up the model input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    Prosody,
    Mel,
    ProsodyMel,
}

impl FeatureSet {
    pub fn dim(self) -> usize {
        match self {
            FeatureSet::Prosody => PROSODY_FEATURES.len(),
            FeatureSet::Mel => MEL_BANDS,
            FeatureSet::ProsodyMel => PROSODY_FEATURES.len() + MEL_BANDS,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureSet::Prosody => "prosody",
            FeatureSet::Mel => "mel",
            FeatureSet::ProsodyMel => "prosody_mel",
        }
    }
}

impl std::str::FromStr for FeatureSet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "prosody" => Ok(FeatureSet::Prosody),
            "mel" => Ok(FeatureSet::Mel),
            "prosody_mel" | "prosody+mel" => Ok(FeatureSet::ProsodyMel),
            other => Err(format!(
                "unknown feature set `{other}` (expected prosody, mel or prosody_mel)"
            )),
        }
    }
}

/// Extracts the requested feature set. `ProsodyMel` stacks the prosody rows
/// above the Mel rows.
pub fn extract_features(
    audio: &AudioBuffer,
    spec: &FrameSpec,
    set: FeatureSet,
) -> Result<FeatureTrack, SignalError> {
    match set {
        FeatureSet::Prosody => prosody_features(audio, spec),
        FeatureSet::Mel => mel_features(audio, spec),
        FeatureSet::ProsodyMel => {
            let p = prosody_features(audio, spec)?;
            let m = mel_features(audio, spec)?;
            p.stack(&m)
        }
    }
}

/// Extracts one track per `(utterance_id, audio)` pair, in parallel on the
/// current rayon pool. Output order follows the input.
pub fn extract_many(
    items: &[(String, AudioBuffer)],
    spec: &FrameSpec,
    set: FeatureSet,
) -> Result<Vec<FeatureTrack>, SignalError> {
    use rayon::prelude::*;
    items
        .par_iter()
        .map(|(id, audio)| {
            extract_features(audio, spec, set).map(|t| t.with_utterance_id(id.clone()))
        })
        .collect()
}

/// Per-utterance matrix of frame features, `d` rows by `s` frames.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTrack {
    pub values: Array2<f64>,
    pub feature_names: Vec<String>,
    pub frame_len_ms: f64,
    pub hop_ms: f64,
    pub utterance_id: String,
}

impl FeatureTrack {
    pub fn new(
        values: Array2<f64>,
        feature_names: Vec<String>,
        spec: &FrameSpec,
        utterance_id: impl Into<String>,
    ) -> Self {
        assert_eq!(
            values.nrows(),
            feature_names.len(),
            "one name per feature row"
        );
        Self {
            values,
            feature_names,
            frame_len_ms: spec.frame_len_ms,
            hop_ms: spec.hop_ms,
            utterance_id: utterance_id.into(),
        }
    }

    pub fn with_utterance_id(mut self, id: impl Into<String>) -> Self {
        self.utterance_id = id.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn num_frames(&self) -> usize {
        self.values.ncols()
    }

    pub fn frame_spec(&self) -> FrameSpec {
        FrameSpec {
            frame_len_ms: self.frame_len_ms,
            hop_ms: self.hop_ms,
        }
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// Row-wise concatenation of two tracks on the same frame grid.
    pub fn stack(&self, other: &FeatureTrack) -> Result<FeatureTrack, SignalError> {
        if self.num_frames() != other.num_frames() {
            return Err(SignalError::TrackMismatch(format!(
                "{} frames vs {} frames",
                self.num_frames(),
                other.num_frames()
            )));
        }
        if self.hop_ms != other.hop_ms || self.frame_len_ms != other.frame_len_ms {
            return Err(SignalError::TrackMismatch("different frame specs".into()));
        }
        let values = concatenate(Axis(0), &[self.values.view(), other.values.view()])
            .expect("row counts are free, column counts checked");
        let mut names = self.feature_names.clone();
        names.extend(other.feature_names.iter().cloned());
        Ok(FeatureTrack {
            values,
            feature_names: names,
            frame_len_ms: self.frame_len_ms,
            hop_ms: self.hop_ms,
            utterance_id: self.utterance_id.clone(),
        })
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Splits audio into frames, handing each frame's sample slice to `f`.
pub(crate) fn for_each_frame<F>(
    audio: &AudioBuffer,
    spec: &FrameSpec,
    mut f: F,
) -> Result<usize, SignalError>
where
    F: FnMut(usize, &[f64]),
{
    let sr = audio.sample_rate();
    let n = frame_count(audio.samples().len(), sr, spec)?;
    let frame = spec.frame_samples(sr);
    let hop = spec.hop_samples(sr);
    for i in 0..n {
        let start = i * hop;
        f(i, &audio.samples()[start..start + frame]);
    }
    Ok(n)
}
