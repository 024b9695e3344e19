//! Log Mel filterbank energies.

use ndarray::Array2;
use rustfft::{num_complex::Complex, FftPlanner};

use super::{for_each_frame, AudioBuffer, FeatureTrack, FrameSpec, SignalError};

pub const MEL_BANDS: usize = 27;
pub const MEL_EPSILON: f64 = 1e-10;

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters with centers equally spaced on the Mel scale between
/// 0 Hz and Nyquist. Filter `m` rises from edge `m` to edge `m + 1` and falls
/// to edge `m + 2`.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    /// `n_bands + 2` edge frequencies in Hz.
    pub edges_hz: Vec<f64>,
    /// `n_bands × (fft_size / 2 + 1)` weights.
    pub weights: Array2<f64>,
    pub fft_size: usize,
    pub sample_rate: u32,
}

impl MelFilterbank {
    pub fn new(n_bands: usize, fft_size: usize, sample_rate: u32) -> Self {
        let nyquist = sample_rate as f64 / 2.0;
        let top = hz_to_mel(nyquist);
        let edges_hz: Vec<f64> = (0..n_bands + 2)
            .map(|i| mel_to_hz(top * i as f64 / (n_bands + 1) as f64))
            .collect();
        let n_bins = fft_size / 2 + 1;
        let mut weights = Array2::zeros((n_bands, n_bins));
        for m in 0..n_bands {
            let (lo, center, hi) = (edges_hz[m], edges_hz[m + 1], edges_hz[m + 2]);
            for k in 0..n_bins {
                let f = k as f64 * sample_rate as f64 / fft_size as f64;
                let w = if f > lo && f <= center {
                    (f - lo) / (center - lo)
                } else if f > center && f < hi {
                    (hi - f) / (hi - center)
                } else {
                    0.0
                };
                weights[[m, k]] = w;
            }
        }
        Self {
            edges_hz,
            weights,
            fft_size,
            sample_rate,
        }
    }

    pub fn n_bands(&self) -> usize {
        self.weights.nrows()
    }

    pub fn center_hz(&self, band: usize) -> f64 {
        self.edges_hz[band + 1]
    }

    /// Applies the filters to a magnitude spectrum of `fft_size / 2 + 1` bins.
    pub fn apply(&self, magnitude: &[f64], out: &mut [f64]) {
        for (m, o) in out.iter_mut().enumerate() {
            let energy: f64 = self
                .weights
                .row(m)
                .iter()
                .zip(magnitude)
                .map(|(w, x)| w * x)
                .sum();
            *o = (energy + MEL_EPSILON).ln();
        }
    }
}

/// Computes the 27-row log Mel track: Hann window, magnitude spectrum with
/// FFT size the next power of two above the frame, triangular Mel filters.
pub fn mel_features(audio: &AudioBuffer, spec: &FrameSpec) -> Result<FeatureTrack, SignalError> {
    let sr = audio.sample_rate();
    let frame_len = spec.frame_samples(sr);
    let fft_size = frame_len.next_power_of_two();
    let bank = MelFilterbank::new(MEL_BANDS, fft_size, sr);
    let window = hann(frame_len);
    let fft = FftPlanner::new().plan_fft_forward(fft_size);
    let mut buf = vec![Complex::new(0.0, 0.0); fft_size];
    let mut magnitude = vec![0.0; fft_size / 2 + 1];
    let mut columns: Vec<[f64; MEL_BANDS]> = Vec::new();

    for_each_frame(audio, spec, |_, frame| {
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = if i < frame.len() {
                Complex::new(frame[i] * window[i], 0.0)
            } else {
                Complex::new(0.0, 0.0)
            };
        }
        fft.process(&mut buf);
        for (m, c) in magnitude.iter_mut().zip(&buf) {
            *m = c.norm();
        }
        let mut col = [0.0; MEL_BANDS];
        bank.apply(&magnitude, &mut col);
        columns.push(col);
    })?;

    let mut values = Array2::zeros((MEL_BANDS, columns.len()));
    for (j, col) in columns.iter().enumerate() {
        for (m, v) in col.iter().enumerate() {
            values[[m, j]] = *v;
        }
    }
    Ok(FeatureTrack::new(
        values,
        (0..MEL_BANDS).map(|m| format!("mel_{m:02}")).collect(),
        spec,
        "",
    ))
}

fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn mel_of_1000_hz() {
        let expected = 2595.0 * (1.0 + 1000.0 / 700.0f64).log10();
        assert!((hz_to_mel(1000.0) - expected).abs() < 1e-12);
        assert!((hz_to_mel(1000.0) - 999.9).abs() < 0.1);
        assert!((mel_to_hz(hz_to_mel(1234.5)) - 1234.5).abs() < 1e-9);
    }

    #[test]
    fn centers_uniform_on_mel_scale() {
        let bank = MelFilterbank::new(MEL_BANDS, 512, 16000);
        let step = hz_to_mel(8000.0) / 28.0;
        for m in 0..MEL_BANDS {
            assert!((hz_to_mel(bank.center_hz(m)) - step * (m + 1) as f64).abs() < 0.1);
        }
    }

    #[test]
    fn filters_nonnegative_peak_at_center_and_overlap_at_neighbor_center() {
        let bank = MelFilterbank::new(MEL_BANDS, 512, 16000);
        let bin_hz = 16000.0 / 512.0;
        for m in 0..MEL_BANDS {
            let row = bank.weights.row(m);
            assert!(row.iter().all(|&w| w >= 0.0));
            let argmax = row
                .iter()
                .enumerate()
                .fold(
                    (0, f64::MIN),
                    |acc, (k, &w)| if w > acc.1 { (k, w) } else { acc },
                )
                .0;
            let nearest = (bank.center_hz(m) / bin_hz).round() as usize;
            assert!(
                argmax.abs_diff(nearest) <= 1,
                "filter {m}: argmax {argmax}, center bin {nearest}"
            );
            if m + 1 < MEL_BANDS {
                // upper edge of filter m is the center of filter m + 1
                assert_eq!(bank.edges_hz[m + 2], bank.center_hz(m + 1));
            }
        }
    }

    #[test]
    fn silence_gives_log_epsilon() {
        let audio = AudioBuffer::new(vec![0.0; 3200], 16000).unwrap();
        let track = mel_features(&audio, &FrameSpec::default()).unwrap();
        assert_eq!(track.dim(), 27);
        assert!(track.values.iter().all(|&v| v == MEL_EPSILON.ln()));
    }

    #[test]
    fn tone_at_center_wins() {
        let bank = MelFilterbank::new(MEL_BANDS, 512, 16000);
        for band in [6, 13, 20, 25] {
            let f = bank.center_hz(band);
            let x: Vec<f64> = (0..3200)
                .map(|i| 0.5 * (2.0 * PI * f * i as f64 / 16000.0).sin())
                .collect();
            let audio = AudioBuffer::new(x, 16000).unwrap();
            let track = mel_features(&audio, &FrameSpec::default()).unwrap();
            for col in track.values.columns() {
                let argmax = col
                    .iter()
                    .enumerate()
                    .fold(
                        (0, f64::MIN),
                        |acc, (k, &w)| if w > acc.1 { (k, w) } else { acc },
                    )
                    .0;
                assert_eq!(argmax, band);
            }
        }
    }
}
