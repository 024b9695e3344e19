//! Synthetic labelled corpus with planted prosodic events.
//!
//! Each utterance is a sequence of voiced "words" (a five-harmonic source
//! following a declining f0 line) separated by pauses. Pitch accents add an
//! f0 shape and an energy bump spanning the word; boundary tones move f0 at
//! the end of the word and lengthen the following pause. Unaccented
//! neighbours of accented words may get a smaller, unlabelled f0 bump.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Normal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    build_dataset, write_alignments, write_labels, CorpusError, Dataset, EventLabel, Gender,
    LabelRecord, LabelScheme, WordToken, BOUNDARY_TONES,
};
use crate::io::{write_wav, IoError};
use crate::seed;
use crate::signal::{extract_many, AudioBuffer, FeatureSet, FrameSpec, F0_MAX_HZ, F0_MIN_HZ};

/// Accent templates, in the order of [`SynthSpec::accent_weights`].
pub const ACCENT_TYPES: [&str; 5] = ["H*", "L*", "L+H*", "L*+H", "H+!H*"];

const DECLINATION: f64 = 0.1;
const EDGE_MS: f64 = 15.0;
const LEAD_MS: u32 = 100;
const BOUNDARY_PAUSE_MS: [u32; 2] = [120, 200];
const ACCENT_ENERGY_BOOST: f64 = 0.6;
const DOWNSTEP_PROB: f64 = 0.25;
const DOWNSTEP_SCALE: f64 = 0.75;
const N_HARMONICS: usize = 5;
const VOCABULARY: [&str; 24] = [
    "the", "news", "state", "house", "vote", "budget", "city", "council", "today", "report",
    "plan", "court", "mayor", "boston", "tax", "school", "week", "police", "bill", "said", "year",
    "million", "program", "board",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    pub n_speakers: usize,
    pub n_utterances_per_speaker: usize,
    /// Inclusive word count range per utterance.
    pub words_per_utterance: [usize; 2],
    pub word_len_ms: [u32; 2],
    pub pause_ms: [u32; 2],
    pub accent_rate: f64,
    pub boundary_rate: f64,
    /// Speaker base f0 range; female speakers draw from the upper half,
    /// male speakers from the lower half.
    pub speaker_f0_base: [f64; 2],
    pub event_f0_excursion: [f64; 2],
    /// Standard deviation of additive Gaussian noise, relative to full scale.
    pub noise_level: f64,
    /// Chance that an unaccented neighbour of an accent gets an unlabelled
    /// bump.
    pub distractor_prob: f64,
    /// Distractor bump height relative to the event excursion.
    pub distractor_scale: f64,
    /// Relative frequencies of [`ACCENT_TYPES`].
    pub accent_weights: [f64; 5],
    /// Relative frequencies of the boundary tone classes.
    pub boundary_weights: [f64; 5],
    /// Chance that an event is flagged uncertain (and, separately, that its
    /// type is flagged uncertain).
    pub uncertain_rate: f64,
    pub sample_rate: u32,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_speakers: 5,
            n_utterances_per_speaker: 20,
            words_per_utterance: [6, 12],
            word_len_ms: [100, 450],
            pause_ms: [20, 120],
            accent_rate: 0.5,
            boundary_rate: 0.2,
            speaker_f0_base: [100.0, 260.0],
            event_f0_excursion: [35.0, 60.0],
            noise_level: 0.003,
            distractor_prob: 0.3,
            distractor_scale: 0.35,
            accent_weights: [0.45, 0.1, 0.25, 0.1, 0.1],
            boundary_weights: [0.4, 0.25, 0.15, 0.1, 0.1],
            uncertain_rate: 0.02,
            sample_rate: 16000,
            seed: 0,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("invalid synth spec: {}", .0.join("; "))]
pub struct SynthError(pub Vec<String>);

impl SynthSpec {
    /// Checks every constraint and reports all violations together.
    pub fn validate(&self) -> Result<(), SynthError> {
        let mut p = Vec::new();
        if self.n_speakers == 0 {
            p.push("n_speakers must be at least 1".to_string());
        }
        if self.n_utterances_per_speaker == 0 {
            p.push("n_utterances_per_speaker must be at least 1".to_string());
        }
        let [wmin, wmax] = self.words_per_utterance;
        if wmin == 0 || wmin > wmax {
            p.push(format!(
                "words_per_utterance [{wmin}, {wmax}] must satisfy 1 <= min <= max"
            ));
        }
        let [lmin, lmax] = self.word_len_ms;
        if lmin < 40 || lmin >= lmax {
            p.push(format!(
                "word_len_ms [{lmin}, {lmax}] must satisfy 40 <= min < max"
            ));
        }
        let [pmin, pmax] = self.pause_ms;
        if pmin > pmax {
            p.push(format!("pause_ms [{pmin}, {pmax}] must satisfy min <= max"));
        }
        for (name, v) in [
            ("accent_rate", self.accent_rate),
            ("boundary_rate", self.boundary_rate),
            ("distractor_prob", self.distractor_prob),
            ("uncertain_rate", self.uncertain_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                p.push(format!("{name} = {v} is outside [0, 1]"));
            }
        }
        if !(self.distractor_scale >= 0.0 && self.distractor_scale <= 1.0) {
            p.push(format!(
                "distractor_scale = {} is outside [0, 1]",
                self.distractor_scale
            ));
        }
        if !(self.noise_level >= 0.0 && self.noise_level < 1.0) {
            p.push(format!(
                "noise_level = {} is outside [0, 1)",
                self.noise_level
            ));
        }
        let [fmin, fmax] = self.speaker_f0_base;
        let [emin, emax] = self.event_f0_excursion;
        if fmin.partial_cmp(&fmax) != Some(std::cmp::Ordering::Less) {
            p.push(format!(
                "speaker_f0_base [{fmin}, {fmax}] must satisfy min < max"
            ));
        }
        if !(emin > 0.0 && emin < emax) {
            p.push(format!(
                "event_f0_excursion [{emin}, {emax}] must satisfy 0 < min < max"
            ));
        }
        if fmin * (1.0 - DECLINATION) - 0.6 * emax < F0_MIN_HZ + 2.0
            || fmax + 1.2 * emax > F0_MAX_HZ - 20.0
        {
            p.push(format!(
                "f0 base [{fmin}, {fmax}] with excursions up to {emax} Hz leaves the {F0_MIN_HZ}-{F0_MAX_HZ} Hz range"
            ));
        }
        for (name, w) in [
            ("accent_weights", self.accent_weights),
            ("boundary_weights", self.boundary_weights),
        ] {
            if w.iter().any(|x| x.is_nan() || *x < 0.0) || w.iter().sum::<f64>() <= 0.0 {
                p.push(format!("{name} must be non-negative with a positive sum"));
            }
        }
        if self.sample_rate < 8000 || !self.sample_rate.is_multiple_of(1000) {
            p.push(format!(
                "sample_rate {} must be a multiple of 1000 Hz and at least 8000",
                self.sample_rate
            ));
        }
        if p.is_empty() {
            Ok(())
        } else {
            Err(SynthError(p))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpeaker {
    pub id: String,
    pub gender: Gender,
    pub f0_base: f64,
    pub gain: f64,
}

/// What was planted on one word, before labelling.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedWord {
    pub accent: Option<usize>,
    pub boundary: Option<usize>,
    pub distractor: bool,
}

#[derive(Debug, Clone)]
pub struct SynthUtterance {
    pub id: String,
    pub speaker: usize,
    pub audio: AudioBuffer,
    pub tokens: Vec<WordToken>,
    pub labels: Vec<LabelRecord>,
    pub planted: Vec<PlantedWord>,
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub spec: SynthSpec,
    pub speakers: Vec<SynthSpeaker>,
    pub utterances: Vec<SynthUtterance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthManifest {
    pub generator: String,
    pub spec: SynthSpec,
    pub speakers: Vec<SynthSpeaker>,
    pub n_utterances: usize,
    pub n_words: usize,
    pub audio_dir: String,
    pub alignments: String,
    pub labels: String,
}

fn smoothstep(u: f64, a: f64, b: f64) -> f64 {
    let x = ((u - a) / (b - a)).clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}

/// `sin²` bump on `[a, b]`, zero outside.
fn bump(u: f64, a: f64, b: f64) -> f64 {
    if u <= a || u >= b {
        0.0
    } else {
        (PI * (u - a) / (b - a)).sin().powi(2)
    }
}

/// Flat-topped bump covering the middle of the word.
fn plateau(u: f64) -> f64 {
    smoothstep(u, 0.1, 0.35) * (1.0 - smoothstep(u, 0.65, 0.9))
}

/// f0 offset of accent type `k` at word position `u`, in units of the
/// excursion.
fn accent_shape(k: usize, u: f64) -> f64 {
    match k {
        0 => plateau(u),
        1 => -0.6 * plateau(u),
        2 => -0.5 * bump(u, 0.0, 0.4) + bump(u, 0.35, 1.0),
        3 => -0.6 * bump(u, 0.0, 0.6) + 0.6 * bump(u, 0.5, 1.0),
        _ => bump(u, 0.0, 0.55) + 0.4 * bump(u, 0.45, 1.0),
    }
}

/// f0 offset of boundary tone `k` (index into [`BOUNDARY_TONES`]).
fn boundary_shape(k: usize, u: f64) -> f64 {
    let ramp = smoothstep(u, 0.55, 1.0);
    match k {
        0 => -0.5 * ramp,
        1 => 0.6 * ramp,
        2 => 0.4 * smoothstep(u, 0.55, 0.7),
        3 => 0.25 * bump(u, 0.5, 1.0),
        _ => ramp,
    }
}

fn accent_label(k: usize, downstep: bool) -> &'static str {
    match (k, downstep) {
        (0, true) => "!H*",
        (2, true) => "L+!H*",
        (3, true) => "L*+!H",
        _ => ACCENT_TYPES[k],
    }
}

fn draw_speakers(spec: &SynthSpec) -> Vec<SynthSpeaker> {
    let [fmin, fmax] = spec.speaker_f0_base;
    let mid = 0.5 * (fmin + fmax);
    let (mut nf, mut nm) = (0, 0);
    (0..spec.n_speakers)
        .map(|i| {
            let mut rng = seed::rng(spec.seed, &[20, i as u64]);
            let (gender, id, lo, hi) = if i % 2 == 0 {
                nf += 1;
                (Gender::Female, format!("f{nf}"), mid, fmax)
            } else {
                nm += 1;
                (Gender::Male, format!("m{nm}"), fmin, mid)
            };
            SynthSpeaker {
                id,
                gender,
                f0_base: rng.random_range(lo..hi),
                gain: 0.25 * rng.random_range(0.8..1.2),
            }
        })
        .collect()
}

struct WordPlan {
    start_ms: u32,
    end_ms: u32,
    word: &'static str,
    accent: Option<(usize, f64, bool)>,
    boundary: Option<(usize, f64)>,
    distractor: Option<f64>,
    accent_uncertain: (bool, bool),
    boundary_uncertain: (bool, bool),
    gain: f64,
}

fn plan_words<R: Rng>(spec: &SynthSpec, rng: &mut R) -> (Vec<WordPlan>, u32) {
    let accent_dist = WeightedIndex::new(spec.accent_weights).expect("validated weights");
    let boundary_dist = WeightedIndex::new(spec.boundary_weights).expect("validated weights");
    let [emin, emax] = spec.event_f0_excursion;
    let n = rng.random_range(spec.words_per_utterance[0]..=spec.words_per_utterance[1]);
    let mut t = LEAD_MS;
    let mut words = Vec::with_capacity(n);
    for _ in 0..n {
        let dur = rng.random_range(spec.word_len_ms[0]..=spec.word_len_ms[1]);
        let word = VOCABULARY[rng.random_range(0..VOCABULARY.len())];
        let accent = (rng.random::<f64>() < spec.accent_rate).then(|| {
            let k = accent_dist.sample(rng);
            let downstep = matches!(k, 0 | 2 | 3) && rng.random::<f64>() < DOWNSTEP_PROB;
            (k, rng.random_range(emin..emax), downstep)
        });
        let boundary = (rng.random::<f64>() < spec.boundary_rate)
            .then(|| (boundary_dist.sample(rng), rng.random_range(emin..emax)));
        let mut flags = || {
            (
                rng.random::<f64>() < spec.uncertain_rate,
                rng.random::<f64>() < spec.uncertain_rate,
            )
        };
        let accent_uncertain = flags();
        let boundary_uncertain = flags();
        let gain = rng.random_range(0.9..1.1);
        let pause = rng.random_range(spec.pause_ms[0]..=spec.pause_ms[1])
            + if boundary.is_some() {
                rng.random_range(BOUNDARY_PAUSE_MS[0]..=BOUNDARY_PAUSE_MS[1])
            } else {
                0
            };
        words.push(WordPlan {
            start_ms: t,
            end_ms: t + dur,
            word,
            accent,
            boundary,
            distractor: None,
            accent_uncertain,
            boundary_uncertain,
            gain,
        });
        t += dur + pause;
    }
    for i in 0..words.len() {
        if words[i].accent.is_some() {
            continue;
        }
        let near_accent = (i > 0 && words[i - 1].accent.is_some())
            || (i + 1 < words.len() && words[i + 1].accent.is_some());
        if near_accent && rng.random::<f64>() < spec.distractor_prob {
            words[i].distractor = Some(spec.distractor_scale * rng.random_range(emin..emax));
        }
    }
    let total = t + LEAD_MS;
    (words, total)
}

fn render(
    spec: &SynthSpec,
    speaker: &SynthSpeaker,
    words: &[WordPlan],
    total_ms: u32,
    noise_seed: u64,
) -> Vec<f64> {
    let sr = f64::from(spec.sample_rate);
    let per_ms = (spec.sample_rate / 1000) as usize;
    let n = total_ms as usize * per_ms;
    let mut out = vec![0.0; n];
    let norm: f64 = (1..=N_HARMONICS).map(|h| 1.0 / h as f64).sum();
    let edge = EDGE_MS * sr / 1000.0;
    let mut phase = 0.0;
    let total_s = n as f64 / sr;
    for w in words {
        let a = w.start_ms as usize * per_ms;
        let b = w.end_ms as usize * per_ms;
        let len = (b - a) as f64;
        for i in a..b {
            let u = (i - a) as f64 / len;
            let t = i as f64 / sr;
            let mut f0 = speaker.f0_base * (1.0 - DECLINATION * t / total_s);
            let mut amp = speaker.gain * w.gain;
            if let Some((k, e, down)) = w.accent {
                let scale = if down { DOWNSTEP_SCALE } else { 1.0 };
                f0 += scale * e * accent_shape(k, u);
                amp *= 1.0 + ACCENT_ENERGY_BOOST * plateau(u);
            }
            if let Some((k, e)) = w.boundary {
                f0 += e * boundary_shape(k, u);
            }
            if let Some(e) = w.distractor {
                f0 += e * plateau(u);
            }
            phase += 2.0 * PI * f0 / sr;
            if phase > 2.0 * PI {
                phase -= 2.0 * PI;
            }
            let pos = (i - a) as f64;
            let env = if pos < edge {
                0.5 - 0.5 * (PI * pos / edge).cos()
            } else if len - pos < edge {
                0.5 - 0.5 * (PI * (len - pos) / edge).cos()
            } else {
                1.0
            };
            let src: f64 = (1..=N_HARMONICS)
                .map(|h| (h as f64 * phase).sin() / h as f64)
                .sum();
            out[i] = amp * env * src / norm;
        }
    }
    if spec.noise_level > 0.0 {
        let mut rng = seed::rng(noise_seed, &[]);
        let normal = Normal::new(0.0, spec.noise_level).expect("validated noise level");
        for s in &mut out {
            *s += normal.sample(&mut rng);
        }
    }
    for s in &mut out {
        *s = s.clamp(-1.0, 1.0);
    }
    out
}

fn label_rows(utt: &str, w: &WordPlan, start_s: f64, end_s: f64) -> Vec<LabelRecord> {
    let mut rows = Vec::new();
    let row = |label: EventLabel| LabelRecord {
        utterance_id: utt.to_string(),
        start_s,
        end_s,
        label,
    };
    if let Some((k, _, down)) = w.accent {
        let mut l = EventLabel::accent(accent_label(k, down));
        (l.uncertain_event, l.uncertain_type) = w.accent_uncertain;
        rows.push(row(l));
    }
    if let Some((k, _)) = w.boundary {
        let mut l = EventLabel::boundary(BOUNDARY_TONES[k]);
        (l.uncertain_event, l.uncertain_type) = w.boundary_uncertain;
        rows.push(row(l));
    }
    if rows.is_empty() {
        rows.push(row(EventLabel::none()));
    }
    rows
}

/// Generates the corpus described by `spec`. Output depends only on the
/// spec (including its seed), not on thread count.
pub fn generate_corpus(spec: &SynthSpec) -> Result<SynthCorpus, SynthError> {
    spec.validate()?;
    let speakers = draw_speakers(spec);
    let jobs: Vec<(usize, usize)> = (0..spec.n_speakers)
        .flat_map(|s| (0..spec.n_utterances_per_speaker).map(move |u| (s, u)))
        .collect();
    let utterances = jobs
        .par_iter()
        .map(|&(s, u)| {
            let speaker = &speakers[s];
            let id = format!("{}_u{:03}", speaker.id, u + 1);
            let mut rng = seed::rng(spec.seed, &[21, s as u64, u as u64]);
            let (words, total_ms) = plan_words(spec, &mut rng);
            let samples = render(
                spec,
                speaker,
                &words,
                total_ms,
                seed::derive(spec.seed, &[22, s as u64, u as u64]),
            );
            let audio = AudioBuffer::new(samples, spec.sample_rate).expect("validated sample rate");
            let mut tokens = Vec::with_capacity(words.len());
            let mut labels = Vec::new();
            let mut planted = Vec::with_capacity(words.len());
            for w in &words {
                let (start_s, end_s) =
                    (f64::from(w.start_ms) / 1000.0, f64::from(w.end_ms) / 1000.0);
                tokens.push(WordToken {
                    word: w.word.to_string(),
                    start_s,
                    end_s,
                    speaker_id: speaker.id.clone(),
                    utterance_id: id.clone(),
                    gender: speaker.gender,
                });
                labels.extend(label_rows(&id, w, start_s, end_s));
                planted.push(PlantedWord {
                    accent: w.accent.map(|a| a.0),
                    boundary: w.boundary.map(|b| b.0),
                    distractor: w.distractor.is_some(),
                });
            }
            SynthUtterance {
                id,
                speaker: s,
                audio,
                tokens,
                labels,
                planted,
            }
        })
        .collect();
    Ok(SynthCorpus {
        spec: spec.clone(),
        speakers,
        utterances,
    })
}

impl SynthCorpus {
    pub fn tokens(&self) -> Vec<WordToken> {
        self.utterances
            .iter()
            .flat_map(|u| u.tokens.iter().cloned())
            .collect()
    }

    pub fn labels(&self) -> Vec<LabelRecord> {
        self.utterances
            .iter()
            .flat_map(|u| u.labels.iter().cloned())
            .collect()
    }

    pub fn n_words(&self) -> usize {
        self.utterances.iter().map(|u| u.tokens.len()).sum()
    }

    pub fn alignment_tsv(&self) -> String {
        write_alignments(&self.tokens())
    }

    pub fn label_tsv(&self) -> String {
        write_labels(&self.labels())
    }

    pub fn manifest(&self) -> SynthManifest {
        SynthManifest {
            generator: format!("prosody-core {}", env!("CARGO_PKG_VERSION")),
            spec: self.spec.clone(),
            speakers: self.speakers.clone(),
            n_utterances: self.utterances.len(),
            n_words: self.n_words(),
            audio_dir: "wav".into(),
            alignments: "alignments.tsv".into(),
            labels: "labels.tsv".into(),
        }
    }

    /// Writes `wav/<utterance>.wav`, `alignments.tsv`, `labels.tsv` and
    /// `manifest.json` under `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<(), IoError> {
        let io = |p: &Path, e: std::io::Error| IoError::Io {
            path: p.to_path_buf(),
            message: e.to_string(),
        };
        let wav_dir = dir.join("wav");
        fs::create_dir_all(&wav_dir).map_err(|e| io(&wav_dir, e))?;
        for u in &self.utterances {
            write_wav(&wav_dir.join(format!("{}.wav", u.id)), &u.audio)?;
        }
        for (name, text) in [
            ("alignments.tsv", self.alignment_tsv()),
            ("labels.tsv", self.label_tsv()),
            (
                "manifest.json",
                serde_json::to_string_pretty(&self.manifest()).expect("manifest serializes") + "\n",
            ),
        ] {
            let p = dir.join(name);
            fs::write(&p, text).map_err(|e| io(&p, e))?;
        }
        Ok(())
    }

    /// Extracts features from the in-memory audio and builds the dataset
    /// for `scheme`.
    pub fn dataset(
        &self,
        set: FeatureSet,
        frames: &FrameSpec,
        scheme: &LabelScheme,
    ) -> Result<Dataset, CorpusError> {
        let items: Vec<(String, AudioBuffer)> = self
            .utterances
            .iter()
            .map(|u| (u.id.clone(), u.audio.clone()))
            .collect();
        let tracks = extract_many(&items, frames, set)?;
        build_dataset(&self.tokens(), &self.labels(), tracks, scheme)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_alignments, parse_labels, Task};

    fn small() -> SynthSpec {
        SynthSpec {
            n_speakers: 2,
            n_utterances_per_speaker: 3,
            seed: 5,
            ..SynthSpec::default()
        }
    }

    #[test]
    fn validation_lists_every_problem() {
        let spec = SynthSpec {
            accent_rate: 1.5,
            word_len_ms: [300, 200],
            sample_rate: 4000,
            ..SynthSpec::default()
        };
        let err = spec.validate().unwrap_err();
        assert_eq!(err.0.len(), 3, "{err}");
        assert!(SynthSpec::default().validate().is_ok());
        let low = SynthSpec {
            speaker_f0_base: [60.0, 200.0],
            ..SynthSpec::default()
        };
        assert!(low.validate().is_err());
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let a = generate_corpus(&small()).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap();
        let b = pool.install(|| generate_corpus(&small()).unwrap());
        assert_eq!(a.alignment_tsv(), b.alignment_tsv());
        assert_eq!(a.label_tsv(), b.label_tsv());
        for (x, y) in a.utterances.iter().zip(&b.utterances) {
            assert_eq!(x.audio.samples(), y.audio.samples());
        }
        let c = generate_corpus(&SynthSpec { seed: 6, ..small() }).unwrap();
        assert_ne!(a.alignment_tsv(), c.alignment_tsv());
    }

    #[test]
    fn tsv_round_trips_through_parsers() {
        let corpus = generate_corpus(&small()).unwrap();
        let tokens = parse_alignments(corpus.alignment_tsv().as_bytes()).unwrap();
        assert_eq!(tokens, corpus.tokens());
        let labels = parse_labels(corpus.label_tsv().as_bytes()).unwrap();
        assert_eq!(labels, corpus.labels());
        for u in &corpus.utterances {
            let end = u.tokens.last().unwrap().end_s;
            assert!(end < u.audio.duration_s());
        }
    }

    #[test]
    fn speakers_cover_both_genders() {
        let corpus = generate_corpus(&SynthSpec::default()).unwrap();
        let f: Vec<_> = corpus
            .speakers
            .iter()
            .filter(|s| s.gender == Gender::Female)
            .collect();
        let m: Vec<_> = corpus
            .speakers
            .iter()
            .filter(|s| s.gender == Gender::Male)
            .collect();
        assert_eq!((f.len(), m.len()), (3, 2));
        assert!(f.iter().all(|s| s.f0_base >= 180.0) && m.iter().all(|s| s.f0_base <= 180.0));
    }

    #[test]
    fn dataset_builds_for_every_task() {
        let corpus = generate_corpus(&small()).unwrap();
        for task in Task::ALL {
            let ds = corpus
                .dataset(
                    FeatureSet::Prosody,
                    &FrameSpec::default(),
                    &LabelScheme::new(task),
                )
                .unwrap();
            assert_eq!(ds.len() + ds.exclusions.len(), corpus.n_words());
        }
    }
}
