//! Normalized-autocorrelation f0 estimator and track smoothing.

use std::sync::Arc;

use rustfft::{num_complex::Complex, Fft, FftPlanner};

pub const F0_MIN_HZ: f64 = 50.0;
pub const F0_MAX_HZ: f64 = 600.0;
/// Normalized autocorrelation peak below which a frame is unvoiced.
pub const VOICING_THRESHOLD: f64 = 0.45;
pub const HNR_CLAMP_DB: f64 = 40.0;

/// Peaks within this distance of the best peak compete on lag; the shortest
/// lag wins, which suppresses sub-octave picks on strongly periodic frames.
const PEAK_TOLERANCE: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchEstimate {
    /// Hz, 0 when unvoiced.
    pub f0: f64,
    pub voicing_prob: f64,
    pub hnr_db: f64,
}

impl PitchEstimate {
    pub const SILENT: PitchEstimate = PitchEstimate {
        f0: 0.0,
        voicing_prob: 0.0,
        hnr_db: -HNR_CLAMP_DB,
    };

    pub fn is_voiced(&self) -> bool {
        self.f0 > 0.0
    }
}

/// Forward and inverse plans for one FFT length.
type FftPair = (usize, Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

/// Reusable estimator; caches FFT plans across frames of equal length.
pub struct PitchEstimator {
    sample_rate: u32,
    planner: FftPlanner<f64>,
    cached: Option<FftPair>,
    scratch: Vec<Complex<f64>>,
}

impl PitchEstimator {
    pub fn new(sample_rate: u32) -> Self {
        Self {
            sample_rate,
            planner: FftPlanner::new(),
            cached: None,
            scratch: Vec::new(),
        }
    }

    /// Analysis length needed to hold two periods of the lowest f0.
    pub fn min_window_samples(sample_rate: u32) -> usize {
        (2.0 * sample_rate as f64 / F0_MIN_HZ).ceil() as usize
    }

    fn plans(&mut self, n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
        match &self.cached {
            Some((len, fwd, inv)) if *len == n => (fwd.clone(), inv.clone()),
            _ => {
                let fwd = self.planner.plan_fft_forward(n);
                let inv = self.planner.plan_fft_inverse(n);
                self.cached = Some((n, fwd.clone(), inv.clone()));
                (fwd, inv)
            }
        }
    }

    /// Raw autocorrelation `sum_n x[n] x[n+lag]` for lags `0..=max_lag`.
    fn autocorrelation(&mut self, x: &[f64], max_lag: usize) -> Vec<f64> {
        let n = (x.len() + max_lag + 1).next_power_of_two();
        let (fwd, inv) = self.plans(n);
        self.scratch.clear();
        self.scratch.extend(x.iter().map(|&v| Complex::new(v, 0.0)));
        self.scratch.resize(n, Complex::new(0.0, 0.0));
        fwd.process(&mut self.scratch);
        for c in self.scratch.iter_mut() {
            *c = Complex::new(c.norm_sqr(), 0.0);
        }
        inv.process(&mut self.scratch);
        let scale = 1.0 / n as f64;
        self.scratch[..=max_lag]
            .iter()
            .map(|c| c.re * scale)
            .collect()
    }

    pub fn estimate(&mut self, frame: &[f64]) -> PitchEstimate {
        let sr = self.sample_rate as f64;
        let n = frame.len();
        if n < 4 {
            return PitchEstimate::SILENT;
        }
        let mean = frame.iter().sum::<f64>() / n as f64;
        let x: Vec<f64> = frame.iter().map(|v| v - mean).collect();
        let energy: f64 = x.iter().map(|v| v * v).sum();
        if energy <= f64::MIN_POSITIVE || !energy.is_finite() {
            return PitchEstimate::SILENT;
        }

        let min_lag = ((sr / F0_MAX_HZ).floor() as usize).max(1);
        let max_lag = ((sr / F0_MIN_HZ).ceil() as usize).min(n / 2);
        if max_lag < min_lag + 2 {
            return PitchEstimate::SILENT;
        }

        let ac = self.autocorrelation(&x, max_lag + 1);
        // Energy of the overlapping head and tail segments for every lag.
        let mut prefix = Vec::with_capacity(n + 1);
        prefix.push(0.0);
        for v in &x {
            prefix.push(prefix.last().unwrap() + v * v);
        }
        let r = |lag: usize| -> f64 {
            let head = prefix[n - lag];
            let tail = prefix[n] - prefix[lag];
            let denom = (head * tail).sqrt();
            if denom <= 1e-300 {
                0.0
            } else {
                (ac[lag] / denom).clamp(-1.0, 1.0)
            }
        };
        let norm: Vec<f64> = (0..=max_lag + 1).map(r).collect();

        let mut peaks: Vec<usize> = Vec::new();
        for lag in min_lag..=max_lag {
            let prev = norm[lag - 1];
            let next = norm[lag + 1];
            if norm[lag] >= prev && norm[lag] > next {
                peaks.push(lag);
            }
        }
        let best = peaks
            .iter()
            .map(|&l| norm[l])
            .fold(f64::NEG_INFINITY, f64::max);
        if peaks.is_empty() || best <= 0.0 {
            let peak = norm[min_lag..=max_lag]
                .iter()
                .cloned()
                .fold(0.0_f64, f64::max);
            return PitchEstimate {
                f0: 0.0,
                voicing_prob: peak.clamp(0.0, 1.0),
                hnr_db: hnr_from_correlation(peak),
            };
        }
        let lag = *peaks
            .iter()
            .find(|&&l| norm[l] >= best - PEAK_TOLERANCE)
            .expect("best peak is among peaks");

        let (a, b, c) = (norm[lag - 1], norm[lag], norm[lag + 1]);
        let curvature = a - 2.0 * b + c;
        let (offset, peak) = if curvature < 0.0 {
            let d = (0.5 * (a - c) / curvature).clamp(-0.5, 0.5);
            (d, b - 0.25 * (a - c) * d)
        } else {
            (0.0, b)
        };
        let peak = peak.clamp(0.0, 1.0);
        let f0 = sr / (lag as f64 + offset);
        let hnr_db = hnr_from_correlation(peak);
        if peak < VOICING_THRESHOLD || !(F0_MIN_HZ..=F0_MAX_HZ).contains(&f0) {
            return PitchEstimate {
                f0: 0.0,
                voicing_prob: peak.clamp(0.0, VOICING_THRESHOLD - 1e-9),
                hnr_db,
            };
        }
        PitchEstimate {
            f0,
            voicing_prob: peak,
            hnr_db,
        }
    }
}

/// Estimates f0, voicing probability and HNR of one analysis window.
pub fn estimate_f0(frame: &[f64], sample_rate: u32) -> PitchEstimate {
    PitchEstimator::new(sample_rate).estimate(frame)
}

/// `10 log10(r / (1 - r))`, clamped to `±HNR_CLAMP_DB`.
pub(crate) fn hnr_from_correlation(r: f64) -> f64 {
    if r <= 0.0 {
        return -HNR_CLAMP_DB;
    }
    if r >= 1.0 {
        return HNR_CLAMP_DB;
    }
    (10.0 * (r / (1.0 - r)).log10()).clamp(-HNR_CLAMP_DB, HNR_CLAMP_DB)
}

/// Halves or doubles voiced values that sit an octave away from the track
/// median, when the corrected value stays inside the search range.
pub fn correct_octave_jumps(f0: &[f64]) -> Vec<f64> {
    let mut voiced: Vec<f64> = f0.iter().cloned().filter(|&v| v > 0.0).collect();
    if voiced.is_empty() {
        return f0.to_vec();
    }
    voiced.sort_by(|a, b| a.total_cmp(b));
    let median = voiced[(voiced.len() - 1) / 2];
    let in_range = |v: f64| (F0_MIN_HZ..=F0_MAX_HZ).contains(&v);
    f0.iter()
        .map(|&v| {
            if v <= 0.0 {
                v
            } else if v > 1.6 * median && in_range(v / 2.0) {
                v / 2.0
            } else if v < 0.625 * median && in_range(v * 2.0) {
                v * 2.0
            } else {
                v
            }
        })
        .collect()
}

/// Running median with an odd window, truncated at the edges. Even-sized
/// edge windows take the lower middle element so outputs are always input
/// values.
pub fn median_smooth(values: &[f64], window: usize) -> Vec<f64> {
    assert!(window % 2 == 1, "median window must be odd");
    let half = window / 2;
    let mut buf = Vec::with_capacity(window);
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(values.len());
            buf.clear();
            buf.extend_from_slice(&values[lo..hi]);
            buf.sort_by(|a, b| a.total_cmp(b));
            buf[(buf.len() - 1) / 2]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn sine(freq: f64, amp: f64, n: usize, sr: u32) -> Vec<f64> {
        (0..n)
            .map(|i| amp * (2.0 * PI * freq * i as f64 / sr as f64).sin())
            .collect()
    }

    /// Brute-force normalized autocorrelation peak picker, integer lags only.
    fn oracle_period(x: &[f64], sr: u32) -> (usize, f64) {
        let n = x.len();
        let lo = (sr as f64 / F0_MAX_HZ) as usize;
        let hi = ((sr as f64 / F0_MIN_HZ).ceil() as usize).min(n / 2);
        let r: Vec<f64> = (0..=hi + 1)
            .map(|lag| {
                let mut num = 0.0;
                let mut e0 = 0.0;
                let mut e1 = 0.0;
                for i in 0..n - lag {
                    num += x[i] * x[i + lag];
                    e0 += x[i] * x[i];
                    e1 += x[i + lag] * x[i + lag];
                }
                num / (e0 * e1).sqrt()
            })
            .collect();
        let peaks: Vec<usize> = (lo..=hi)
            .filter(|&l| r[l] >= r[l - 1] && r[l] > r[l + 1])
            .collect();
        let best = peaks.iter().map(|&l| r[l]).fold(f64::MIN, f64::max);
        // shortest lag among near-ties
        let lag = peaks
            .into_iter()
            .find(|&l| r[l] >= best - PEAK_TOLERANCE)
            .unwrap_or(0);
        (lag, best)
    }

    #[test]
    fn sinusoid_200hz() {
        let x = sine(200.0, 0.8, 640, 16000);
        let est = estimate_f0(&x, 16000);
        assert!((est.f0 - 200.0).abs() <= 2.0, "f0 = {}", est.f0);
        assert!(est.voicing_prob > 0.9);
        let (lag, r) = oracle_period(&x, 16000);
        assert_eq!(lag, 80);
        assert!((16000.0 / lag as f64 - est.f0).abs() < 2.0);
        assert!(r > 0.9);
    }

    #[test]
    fn matches_oracle_over_frequencies() {
        for &f in &[80.0, 123.0, 150.0, 210.0, 333.0, 440.0] {
            let x = sine(f, 0.5, 640, 16000);
            let est = estimate_f0(&x, 16000);
            let (lag, _) = oracle_period(&x, 16000);
            let oracle_f0 = 16000.0 / lag as f64;
            // integer-lag oracle resolution is f^2/sr
            let tol = 1.0 + f * f / 16000.0;
            assert!(
                (est.f0 - oracle_f0).abs() <= tol,
                "{f}: {} vs {oracle_f0}",
                est.f0
            );
            assert!((est.f0 - f).abs() <= 2.0, "{f}: {}", est.f0);
        }
    }

    #[test]
    fn silence_frame() {
        let est = estimate_f0(&[0.0; 640], 16000);
        assert_eq!(est, PitchEstimate::SILENT);
    }

    #[test]
    fn white_noise_is_unvoiced() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let x: Vec<f64> = (0..640).map(|_| rng.random_range(-1.0..1.0)).collect();
        let est = estimate_f0(&x, 16000);
        assert_eq!(est.f0, 0.0);
        assert!(est.voicing_prob < 0.5);
        let (_, r) = oracle_period(&x, 16000);
        assert!(r < VOICING_THRESHOLD);
    }

    #[test]
    fn harmonic_source_keeps_fundamental() {
        let sr = 16000;
        let x: Vec<f64> = (0..640)
            .map(|i| {
                let t = i as f64 / sr as f64;
                (1..=5)
                    .map(|h| (2.0 * PI * 140.0 * h as f64 * t).sin() / h as f64)
                    .sum::<f64>()
            })
            .collect();
        let est = estimate_f0(&x, sr);
        assert!((est.f0 - 140.0).abs() < 2.0, "{}", est.f0);
    }

    #[test]
    fn hnr_clamps() {
        assert_eq!(hnr_from_correlation(0.0), -40.0);
        assert_eq!(hnr_from_correlation(1.0), 40.0);
        assert!((hnr_from_correlation(0.5)).abs() < 1e-12);
        assert!((hnr_from_correlation(0.9) - 10.0 * 9f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn median_of_constant_is_identity() {
        let track = vec![180.0; 12];
        assert_eq!(median_smooth(&track, 5), track);
    }

    #[test]
    fn median_removes_spike() {
        let track = vec![100.0, 100.0, 300.0, 100.0, 100.0];
        assert_eq!(median_smooth(&track, 5), vec![100.0; 5]);
    }

    #[test]
    fn octave_jumps_are_folded() {
        let track = vec![0.0, 200.0, 201.0, 400.0, 199.0, 100.0, 0.0];
        let fixed = correct_octave_jumps(&track);
        assert_eq!(fixed, vec![0.0, 200.0, 201.0, 200.0, 199.0, 200.0, 0.0]);
    }
}
