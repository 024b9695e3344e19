use ndarray::Array2;

use super::pitch::{correct_octave_jumps, median_smooth, PitchEstimator};
use super::{for_each_frame, AudioBuffer, FeatureTrack, FrameSpec, SignalError};

/// Row order of the prosody feature set.
pub const PROSODY_FEATURES: [&str; 5] = [
    "f0_smoothed",
    "rms_energy",
    "loudness",
    "voicing_prob",
    "hnr",
];

const MEDIAN_WINDOW: usize = 5;
const LOUDNESS_EXPONENT: f64 = 0.3;

/// Computes the 5-row prosody track.
///
/// Energy and loudness use the frame samples directly. Pitch, voicing and
/// HNR are estimated on a window centered on the frame and widened to two
/// periods of the lowest f0, since a 20 ms frame only holds one 50 Hz period.
pub fn prosody_features(
    audio: &AudioBuffer,
    spec: &FrameSpec,
) -> Result<FeatureTrack, SignalError> {
    let sr = audio.sample_rate();
    let samples = audio.samples();
    let frame_len = spec.frame_samples(sr);
    let pitch_len = frame_len.max(PitchEstimator::min_window_samples(sr));
    let hop = spec.hop_samples(sr);

    let mut estimator = PitchEstimator::new(sr);
    let mut raw_f0 = Vec::new();
    let mut rms = Vec::new();
    let mut loudness = Vec::new();
    let mut voicing = Vec::new();
    let mut hnr = Vec::new();

    for_each_frame(audio, spec, |i, frame| {
        let power = frame.iter().map(|v| v * v).sum::<f64>() / frame.len() as f64;
        rms.push(power.sqrt());
        loudness.push(power.powf(LOUDNESS_EXPONENT));

        let center = i * hop + frame_len / 2;
        let start = center.saturating_sub(pitch_len / 2);
        let end = (start + pitch_len).min(samples.len());
        let start = end.saturating_sub(pitch_len);
        let est = estimator.estimate(&samples[start..end]);
        raw_f0.push(est.f0);
        voicing.push(est.voicing_prob);
        hnr.push(est.hnr_db);
    })?;

    let f0 = median_smooth(&correct_octave_jumps(&raw_f0), MEDIAN_WINDOW);
    let n = f0.len();
    let mut values = Array2::zeros((PROSODY_FEATURES.len(), n));
    for (row, col) in [&f0, &rms, &loudness, &voicing, &hnr]
        .into_iter()
        .enumerate()
    {
        for (j, v) in col.iter().enumerate() {
            values[[row, j]] = *v;
        }
    }
    Ok(FeatureTrack::new(
        values,
        PROSODY_FEATURES.iter().map(|s| s.to_string()).collect(),
        spec,
        "",
    ))
}
