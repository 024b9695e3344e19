//! Cross-validation plans over dataset entry ids.

use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::corpus::{Dataset, Gender};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvKind {
    Kfold,
    Loso,
}

/// One train / validation / test split. Ids are sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub test_speaker: Option<String>,
    pub val_speaker: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvPlan {
    pub kind: CvKind,
    pub folds: Vec<Fold>,
}

/// Speaker attributes of one entry, as needed for leave-one-speaker-out.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerTag {
    pub id: usize,
    pub speaker: String,
    pub gender: Gender,
}

impl SpeakerTag {
    pub fn from_dataset(ds: &Dataset) -> Vec<SpeakerTag> {
        ds.entries
            .iter()
            .map(|e| {
                let u = &ds.utterances[e.utterance];
                SpeakerTag {
                    id: e.id,
                    speaker: u.speaker_id.clone(),
                    gender: u.gender,
                }
            })
            .collect()
    }
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

/// Seeded k-fold partition; fold sizes differ by at most one, earlier folds
/// taking the remainder. Each fold samples `val_size` validation ids from its
/// training portion.
pub fn make_kfold(
    ids: &[usize],
    k: usize,
    val_size: usize,
    seed: u64,
) -> Result<CvPlan, HarnessError> {
    if k < 2 || ids.len() < k {
        return Err(HarnessError::TooFewEntries {
            entries: ids.len(),
            folds: k,
        });
    }
    let mut shuffled = ids.to_vec();
    shuffled.shuffle(&mut seed::rng(seed, &[0]));
    let base = ids.len() / k;
    let extra = ids.len() % k;
    let smallest_train = ids.len() - (base + usize::from(extra > 0));
    if val_size >= smallest_train {
        return Err(HarnessError::ValidationTooLarge {
            val_size,
            available: smallest_train,
        });
    }
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let test = shuffled[start..start + size].to_vec();
        let mut rest: Vec<usize> = shuffled[..start]
            .iter()
            .chain(&shuffled[start + size..])
            .copied()
            .collect();
        rest.shuffle(&mut seed::rng(seed, &[1, f as u64]));
        let val = rest[..val_size].to_vec();
        let train = rest[val_size..].to_vec();
        folds.push(Fold {
            train: sorted(train),
            val: sorted(val),
            test: sorted(test),
            test_speaker: None,
            val_speaker: None,
        });
        start += size;
    }
    Ok(CvPlan {
        kind: CvKind::Kfold,
        folds,
    })
}

/// One fold per speaker, in sorted speaker order. Validation words come from
/// one other speaker of the same gender, chosen by seed, and are removed from
/// training; without a same-gender speaker any other speaker is used.
pub fn make_loso(tags: &[SpeakerTag], val_size: usize, seed: u64) -> Result<CvPlan, HarnessError> {
    let mut by_speaker: BTreeMap<&str, (Gender, Vec<usize>)> = BTreeMap::new();
    for t in tags {
        by_speaker
            .entry(t.speaker.as_str())
            .or_insert_with(|| (t.gender, Vec::new()))
            .1
            .push(t.id);
    }
    if by_speaker.len() < 2 {
        return Err(HarnessError::TooFewSpeakers(by_speaker.len()));
    }
    let speakers: Vec<&str> = by_speaker.keys().copied().collect();
    let mut folds = Vec::with_capacity(speakers.len());
    for (f, &test_spk) in speakers.iter().enumerate() {
        let gender = by_speaker[test_spk].0;
        let same: Vec<&str> = speakers
            .iter()
            .copied()
            .filter(|&s| s != test_spk && by_speaker[s].0 == gender)
            .collect();
        let candidates = if same.is_empty() {
            log::warn!("no other {gender:?} speaker for test speaker {test_spk}; validating on any speaker");
            speakers
                .iter()
                .copied()
                .filter(|&s| s != test_spk)
                .collect()
        } else {
            same
        };
        let mut rng = seed::rng(seed, &[2, f as u64]);
        let val_spk = *candidates
            .choose(&mut rng)
            .expect("at least one other speaker");
        let mut pool = by_speaker[val_spk].1.clone();
        pool.shuffle(&mut rng);
        let n_val = val_size.min(pool.len());
        let val = pool[..n_val].to_vec();
        let mut train: Vec<usize> = pool[n_val..].to_vec();
        for &s in &speakers {
            if s != test_spk && s != val_spk {
                train.extend(&by_speaker[s].1);
            }
        }
        folds.push(Fold {
            train: sorted(train),
            val: sorted(val),
            test: sorted(by_speaker[test_spk].1.clone()),
            test_speaker: Some(test_spk.to_string()),
            val_speaker: Some(val_spk.to_string()),
        });
    }
    Ok(CvPlan {
        kind: CvKind::Loso,
        folds,
    })
}
