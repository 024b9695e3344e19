use prosody_core::corpus::{LabelScheme, Task};
use prosody_core::signal::{prosody_features, FeatureSet, FrameSpec, VOICING_THRESHOLD};
use prosody_core::synth::{generate_corpus, SynthSpec, ACCENT_TYPES};

fn spec(seed: u64, utterances: usize) -> SynthSpec {
    SynthSpec {
        n_speakers: 4,
        n_utterances_per_speaker: utterances,
        seed,
        ..SynthSpec::default()
    }
}

#[test]
fn accent_rate_matches_spec() {
    let corpus = generate_corpus(&spec(5, 30)).unwrap();
    let words = corpus.n_words();
    let accents = corpus
        .utterances
        .iter()
        .flat_map(|u| &u.planted)
        .filter(|p| p.accent.is_some())
        .count();
    assert!(words >= 1000, "{words} words");
    let per_1000 = 1000.0 * accents as f64 / words as f64;
    assert!(
        (per_1000 - 500.0).abs() <= 50.0,
        "{per_1000:.1} accents per 1000 words"
    );
}

#[test]
fn accent_types_follow_weights() {
    let s = spec(6, 60);
    let corpus = generate_corpus(&s).unwrap();
    let mut counts = [0usize; ACCENT_TYPES.len()];
    for p in corpus.utterances.iter().flat_map(|u| &u.planted) {
        if let Some(k) = p.accent {
            counts[k] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    let weight_sum: f64 = s.accent_weights.iter().sum();
    for (k, &c) in counts.iter().enumerate() {
        let share = c as f64 / total as f64;
        let want = s.accent_weights[k] / weight_sum;
        assert!(
            (share - want).abs() <= 0.1 * want.max(0.3),
            "{}: {share:.3} vs {want:.3}",
            ACCENT_TYPES[k]
        );
    }
}

#[test]
fn detection_classes_are_balanced() {
    let corpus = generate_corpus(&spec(7, 30)).unwrap();
    let ds = corpus
        .dataset(
            FeatureSet::Prosody,
            &FrameSpec::default(),
            &LabelScheme::new(Task::PaDetect),
        )
        .unwrap();
    let accented =
        ds.entries.iter().filter(|e| e.class_index == 1).count() as f64 / ds.entries.len() as f64;
    assert!(
        (accented - 0.5).abs() <= 0.1,
        "accented share {accented:.3}"
    );
}

#[test]
fn planted_accents_raise_measured_f0() {
    let s = SynthSpec {
        accent_weights: [1.0, 0.0, 0.0, 0.0, 0.0],
        boundary_rate: 0.0,
        distractor_prob: 0.0,
        ..spec(8, 10)
    };
    let corpus = generate_corpus(&s).unwrap();
    let frames = FrameSpec::default();
    for (spk, speaker) in corpus.speakers.iter().enumerate() {
        let (mut acc, mut plain) = (Vec::new(), Vec::new());
        for u in corpus.utterances.iter().filter(|u| u.speaker == spk) {
            let track = prosody_features(&u.audio, &frames).unwrap();
            let (f0, voicing) = (
                track.feature_index("f0_smoothed").unwrap(),
                track.feature_index("voicing_prob").unwrap(),
            );
            for (tok, planted) in u.tokens.iter().zip(&u.planted) {
                // Middle of the word, where the accent plateau sits.
                let len = tok.end_s - tok.start_s;
                let from = ((tok.start_s + 0.4 * len) * 1000.0 / frames.hop_ms) as usize;
                let to = (((tok.start_s + 0.6 * len) * 1000.0 / frames.hop_ms) as usize)
                    .min(track.num_frames());
                let voiced: Vec<f64> = (from..to)
                    .filter(|&f| track.values[[voicing, f]] >= VOICING_THRESHOLD)
                    .map(|f| track.values[[f0, f]])
                    .collect();
                if voiced.is_empty() {
                    continue;
                }
                let m = voiced.iter().sum::<f64>() / voiced.len() as f64;
                if planted.accent.is_some() {
                    acc.push(m)
                } else {
                    plain.push(m)
                }
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let rise = mean(&acc) - mean(&plain);
        assert!(
            rise >= 0.5 * s.event_f0_excursion[0],
            "{}: accented words only {rise:.1} Hz above unaccented",
            speaker.id
        );
    }
}
