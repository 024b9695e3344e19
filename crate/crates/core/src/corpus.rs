//! Word alignments, ToBI event labels and task-specific datasets.
//!
//! Alignment TSV, one word per line:
//! `utterance_id TAB speaker_id TAB gender TAB word TAB start_s TAB end_s`
//!
//! Label TSV, joined to words by utterance and interval:
//! `utterance_id TAB start_s TAB end_s TAB kind TAB tobi TAB uncertain_event TAB uncertain_type`
//!
//! A word may carry one pitch-accent row and one boundary-tone row; a word
//! with neither carries a single `none` row.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::{FeatureTrack, SignalError};

#[derive(Debug, Error, PartialEq)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: word `{word}` in {utterance} ends at {end_s} s, not after its start {start_s} s")]
    BadInterval {
        line: usize,
        utterance: String,
        word: String,
        start_s: f64,
        end_s: f64,
    },
    #[error("line {line}: word `{word}` overlaps the previous word in {utterance}")]
    AlignmentOverlap {
        line: usize,
        utterance: String,
        word: String,
    },
    #[error("no feature track covers utterance {0}")]
    MissingAudio(String),
    #[error("no label row for word `{word}` at {start_s}-{end_s} s in {utterance}")]
    MissingLabel {
        utterance: String,
        word: String,
        start_s: f64,
        end_s: f64,
    },
    #[error("{} label(s) outside the {} inventory: {}", .0.len(), .1, .0.iter().map(|u| u.to_string()).collect::<Vec<_>>().join("; "))]
    UnknownLabels(Vec<UnknownLabel>, Task),
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Signal(#[from] SignalError),
}

impl From<std::io::Error> for CorpusError {
    fn from(e: std::io::Error) -> Self {
        CorpusError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnknownLabel {
    pub utterance: String,
    pub start_s: f64,
    pub end_s: f64,
    pub tobi: String,
}

impl fmt::Display for UnknownLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:.3}-{:.3} s `{}`",
            self.utterance, self.start_s, self.end_s, self.tobi
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Female,
    Male,
}

impl Gender {
    pub fn code(self) -> &'static str {
        match self {
            Gender::Female => "f",
            Gender::Male => "m",
        }
    }
}

impl std::str::FromStr for Gender {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "f" | "female" => Ok(Gender::Female),
            "m" | "male" => Ok(Gender::Male),
            other => Err(format!("unknown gender `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordToken {
    pub word: String,
    pub start_s: f64,
    pub end_s: f64,
    pub speaker_id: String,
    pub utterance_id: String,
    pub gender: Gender,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    PitchAccent,
    BoundaryTone,
    None,
}

impl EventKind {
    pub fn code(self) -> &'static str {
        match self {
            EventKind::PitchAccent => "pitch_accent",
            EventKind::BoundaryTone => "boundary_tone",
            EventKind::None => "none",
        }
    }
}

impl std::str::FromStr for EventKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pitch_accent" => Ok(EventKind::PitchAccent),
            "boundary_tone" => Ok(EventKind::BoundaryTone),
            "none" => Ok(EventKind::None),
            other => Err(format!("unknown event kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLabel {
    pub kind: EventKind,
    pub tobi: String,
    pub uncertain_event: bool,
    pub uncertain_type: bool,
}

impl EventLabel {
    pub fn none() -> Self {
        Self {
            kind: EventKind::None,
            tobi: String::new(),
            uncertain_event: false,
            uncertain_type: false,
        }
    }

    pub fn accent(tobi: &str) -> Self {
        Self {
            kind: EventKind::PitchAccent,
            tobi: tobi.to_string(),
            uncertain_event: false,
            uncertain_type: false,
        }
    }

    pub fn boundary(tobi: &str) -> Self {
        Self {
            kind: EventKind::BoundaryTone,
            tobi: tobi.to_string(),
            uncertain_event: false,
            uncertain_type: false,
        }
    }
}

/// One parsed row of the label TSV.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRecord {
    pub utterance_id: String,
    pub start_s: f64,
    pub end_s: f64,
    pub label: EventLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    PaDetect,
    PaClassify,
    PbDetect,
    PbClassify,
}

impl Task {
    pub const ALL: [Task; 4] = [
        Task::PaDetect,
        Task::PaClassify,
        Task::PbDetect,
        Task::PbClassify,
    ];

    pub fn event_kind(self) -> EventKind {
        match self {
            Task::PaDetect | Task::PaClassify => EventKind::PitchAccent,
            Task::PbDetect | Task::PbClassify => EventKind::BoundaryTone,
        }
    }

    pub fn is_classification(self) -> bool {
        matches!(self, Task::PaClassify | Task::PbClassify)
    }

    pub fn code(self) -> &'static str {
        match self {
            Task::PaDetect => "pa_detect",
            Task::PaClassify => "pa_classify",
            Task::PbDetect => "pb_detect",
            Task::PbClassify => "pb_classify",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl std::str::FromStr for Task {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Task::ALL
            .iter()
            .copied()
            .find(|t| t.code() == s)
            .ok_or_else(|| format!("unknown task `{s}`"))
    }
}

/// Accent types, downstepped variants collapsed onto their plain forms.
pub const ACCENT_GROUPS: [(&str, &[&str]); 5] = [
    ("H*", &["H*", "!H*"]),
    ("L*", &["L*"]),
    ("L+H*", &["L+H*", "L+!H*"]),
    ("L*+H", &["L*+H", "L*+!H"]),
    ("H+!H*", &["H+!H*"]),
];

/// Intonational phrase boundary tones.
pub const BOUNDARY_TONES: [&str; 5] = ["L-L%", "L-H%", "H-L%", "!H-L%", "H-H%"];

/// Phrase accents without a boundary tone mark intermediate phrases only.
pub const INTERMEDIATE_ONLY: [&str; 3] = ["L-", "H-", "!H-"];

/// Accent / boundary markers whose type the annotator left open.
pub const UNTYPED_ACCENTS: [&str; 2] = ["*", "X*?"];
pub const UNTYPED_BOUNDARIES: [&str; 2] = ["%", "X%?"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    UncertainEvent,
    UncertainType,
}

impl fmt::Display for ExclusionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExclusionReason::UncertainEvent => "uncertain event",
            ExclusionReason::UncertainType => "uncertain event type",
        })
    }
}

/// Outcome of mapping a raw label onto a task's classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelClass {
    Class(usize),
    Excluded(ExclusionReason),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelScheme {
    pub task: Task,
    pub classes: Vec<String>,
}

impl LabelScheme {
    pub fn new(task: Task) -> Self {
        let classes: Vec<String> = match task {
            Task::PaDetect => vec!["none".into(), "accent".into()],
            Task::PbDetect => vec!["none".into(), "boundary".into()],
            Task::PaClassify => ACCENT_GROUPS
                .iter()
                .map(|(name, _)| name.to_string())
                .chain(std::iter::once("none".to_string()))
                .collect(),
            Task::PbClassify => BOUNDARY_TONES
                .iter()
                .map(|s| s.to_string())
                .chain(std::iter::once("none".to_string()))
                .collect(),
        };
        Self { task, classes }
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn none_class(&self) -> usize {
        if self.task.is_classification() {
            self.classes.len() - 1
        } else {
            0
        }
    }

    /// Maps a raw label to a class index, or reports it excluded.
    ///
    /// Labels of the other event kind count as no event for this task.
    /// Errors only on a label outside the known inventory.
    pub fn map_label(&self, raw: &EventLabel) -> Result<LabelClass, String> {
        let none = LabelClass::Class(self.none_class());
        if raw.kind == EventKind::None || raw.kind != self.task.event_kind() {
            return Ok(none);
        }
        let tobi = raw.tobi.trim();
        // None of the kind-specific type, or None for an untyped event
        let typed: Option<Option<usize>> = match self.task.event_kind() {
            EventKind::PitchAccent => {
                if let Some(g) = ACCENT_GROUPS.iter().position(|(_, m)| m.contains(&tobi)) {
                    Some(Some(g))
                } else if UNTYPED_ACCENTS.contains(&tobi) {
                    Some(None)
                } else {
                    None
                }
            }
            EventKind::BoundaryTone => {
                if INTERMEDIATE_ONLY.contains(&tobi) {
                    return Ok(none);
                }
                if let Some(g) = BOUNDARY_TONES.iter().position(|b| *b == tobi) {
                    Some(Some(g))
                } else if UNTYPED_BOUNDARIES.contains(&tobi) {
                    Some(None)
                } else {
                    None
                }
            }
            EventKind::None => unreachable!(),
        };
        let Some(group) = typed else {
            return Err(tobi.to_string());
        };
        if raw.uncertain_event {
            return Ok(LabelClass::Excluded(ExclusionReason::UncertainEvent));
        }
        if self.task.is_classification() {
            match group {
                Some(g) if !raw.uncertain_type => Ok(LabelClass::Class(g)),
                _ => Ok(LabelClass::Excluded(ExclusionReason::UncertainType)),
            }
        } else {
            Ok(LabelClass::Class(1))
        }
    }
}

fn parse_f64(field: &str, line: usize, what: &str) -> Result<f64, CorpusError> {
    field
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| CorpusError::Malformed {
            line,
            message: format!("bad {what} `{field}`"),
        })
}

fn parse_flag(field: &str, line: usize, what: &str) -> Result<bool, CorpusError> {
    match field.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(CorpusError::Malformed {
            line,
            message: format!("bad {what} flag `{other}` (expected 0 or 1)"),
        }),
    }
}

fn content_lines<R: BufRead>(
    reader: R,
) -> impl Iterator<Item = Result<(usize, String), CorpusError>> {
    reader
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|l| (i + 1, l)).map_err(CorpusError::from))
        .filter(|r| match r {
            Ok((_, l)) => !l.trim().is_empty() && !l.starts_with('#'),
            Err(_) => true,
        })
}

/// Parses the alignment TSV. Words are grouped by utterance in order of
/// first appearance and sorted by start time within each utterance.
pub fn parse_alignments<R: BufRead>(reader: R) -> Result<Vec<WordToken>, CorpusError> {
    let mut groups: Vec<(String, Vec<(usize, WordToken)>)> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for item in content_lines(reader) {
        let (line, text) = item?;
        let fields: Vec<&str> = text.split('\t').collect();
        if fields.len() != 6 {
            return Err(CorpusError::Malformed {
                line,
                message: format!("expected 6 tab-separated fields, found {}", fields.len()),
            });
        }
        let gender = fields[2]
            .parse::<Gender>()
            .map_err(|message| CorpusError::Malformed { line, message })?;
        let start_s = parse_f64(fields[4], line, "start time")?;
        let end_s = parse_f64(fields[5], line, "end time")?;
        let token = WordToken {
            word: fields[3].to_string(),
            start_s,
            end_s,
            speaker_id: fields[1].to_string(),
            utterance_id: fields[0].to_string(),
            gender,
        };
        if start_s < 0.0 || end_s <= start_s {
            return Err(CorpusError::BadInterval {
                line,
                utterance: token.utterance_id,
                word: token.word,
                start_s,
                end_s,
            });
        }
        let slot = *index.entry(token.utterance_id.clone()).or_insert_with(|| {
            groups.push((token.utterance_id.clone(), Vec::new()));
            groups.len() - 1
        });
        groups[slot].1.push((line, token));
    }

    let mut out = Vec::new();
    for (utterance, mut words) in groups {
        words.sort_by(|a, b| a.1.start_s.total_cmp(&b.1.start_s));
        for pair in words.windows(2) {
            if pair[1].1.start_s < pair[0].1.end_s - TIME_EPS {
                return Err(CorpusError::AlignmentOverlap {
                    line: pair[1].0,
                    utterance: utterance.clone(),
                    word: pair[1].1.word.clone(),
                });
            }
        }
        out.extend(words.into_iter().map(|(_, t)| t));
    }
    Ok(out)
}

/// Parses the label TSV.
pub fn parse_labels<R: BufRead>(reader: R) -> Result<Vec<LabelRecord>, CorpusError> {
    let mut out = Vec::new();
    for item in content_lines(reader) {
        let (line, text) = item?;
        let fields: Vec<&str> = text.split('\t').collect();
        if fields.len() != 7 {
            return Err(CorpusError::Malformed {
                line,
                message: format!("expected 7 tab-separated fields, found {}", fields.len()),
            });
        }
        let kind = fields[3]
            .parse::<EventKind>()
            .map_err(|message| CorpusError::Malformed { line, message })?;
        let tobi = fields[4].trim().to_string();
        if kind == EventKind::None && !tobi.is_empty() {
            return Err(CorpusError::Malformed {
                line,
                message: format!("label `{tobi}` given for kind none"),
            });
        }
        out.push(LabelRecord {
            utterance_id: fields[0].to_string(),
            start_s: parse_f64(fields[1], line, "start time")?,
            end_s: parse_f64(fields[2], line, "end time")?,
            label: EventLabel {
                kind,
                tobi,
                uncertain_event: parse_flag(fields[5], line, "uncertain_event")?,
                uncertain_type: parse_flag(fields[6], line, "uncertain_type")?,
            },
        });
    }
    Ok(out)
}

pub fn write_alignments(tokens: &[WordToken]) -> String {
    let mut s = String::new();
    for t in tokens {
        s.push_str(&format!(
            "{}\t{}\t{}\t{}\t{:.3}\t{:.3}\n",
            t.utterance_id,
            t.speaker_id,
            t.gender.code(),
            t.word,
            t.start_s,
            t.end_s
        ));
    }
    s
}

pub fn write_labels(records: &[LabelRecord]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&format!(
            "{}\t{:.3}\t{:.3}\t{}\t{}\t{}\t{}\n",
            r.utterance_id,
            r.start_s,
            r.end_s,
            r.label.kind.code(),
            r.label.tobi,
            u8::from(r.label.uncertain_event),
            u8::from(r.label.uncertain_type)
        ));
    }
    s
}

const TIME_EPS: f64 = 1e-6;

fn interval_key(utterance: &str, start: f64, end: f64) -> (String, i64, i64) {
    (
        utterance.to_string(),
        (start * 1e6).round() as i64,
        (end * 1e6).round() as i64,
    )
}

/// Half-open frame interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrameSpan {
    pub start: usize,
    pub end: usize,
}

impl FrameSpan {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(end >= start);
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    /// Frames `[floor(start/hop), ceil(end/hop))`, clipped to the track and
    /// at least one frame long.
    pub fn from_times(start_s: f64, end_s: f64, hop_ms: f64, num_frames: usize) -> Self {
        assert!(num_frames > 0);
        let hop = hop_ms / 1000.0;
        let a = (start_s / hop + 1e-9).floor().max(0.0) as usize;
        let b = (end_s / hop - 1e-9).ceil().max(0.0) as usize;
        let a = a.min(num_frames - 1);
        let b = b.min(num_frames).max(a + 1);
        Self { start: a, end: b }
    }
}

/// An utterance's feature track together with the frame spans of all its
/// words in time order, labelled or not.
#[derive(Debug, Clone)]
pub struct Utterance {
    pub id: String,
    pub speaker_id: String,
    pub gender: Gender,
    pub track: FeatureTrack,
    pub word_spans: Vec<FrameSpan>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEntry {
    pub id: usize,
    pub token: WordToken,
    pub utterance: usize,
    /// Position among all words of the utterance.
    pub word_index: usize,
    pub frames: FrameSpan,
    pub class_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exclusion {
    pub token: WordToken,
    pub tobi: String,
    pub reason: ExclusionReason,
}

/// Words of one task, with their utterances' feature tracks.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub scheme: LabelScheme,
    pub utterances: Vec<Utterance>,
    pub entries: Vec<DatasetEntry>,
    pub exclusions: Vec<Exclusion>,
}

/// Joins tokens, labels and tracks into the labelled word set for `scheme`.
///
/// Every token needs a label row and a feature track; excluded tokens are
/// dropped from `entries` but kept as context neighbours and listed in
/// `exclusions`. Labels outside the inventory fail the whole build.
pub fn build_dataset(
    tokens: &[WordToken],
    labels: &[LabelRecord],
    tracks: Vec<FeatureTrack>,
    scheme: &LabelScheme,
) -> Result<Dataset, CorpusError> {
    let mut by_interval: HashMap<(String, i64, i64), Vec<&EventLabel>> = HashMap::new();
    for r in labels {
        by_interval
            .entry(interval_key(&r.utterance_id, r.start_s, r.end_s))
            .or_default()
            .push(&r.label);
    }
    let mut track_map: HashMap<String, FeatureTrack> = tracks
        .into_iter()
        .map(|t| (t.utterance_id.clone(), t))
        .collect();

    let mut utterances: Vec<Utterance> = Vec::new();
    let mut utt_index: HashMap<String, usize> = HashMap::new();
    let mut entries = Vec::new();
    let mut exclusions = Vec::new();
    let mut unknown = Vec::new();
    let kind = scheme.task.event_kind();

    for token in tokens {
        let u = match utt_index.get(&token.utterance_id) {
            Some(&u) => u,
            None => {
                let track = track_map
                    .remove(&token.utterance_id)
                    .ok_or_else(|| CorpusError::MissingAudio(token.utterance_id.clone()))?;
                utterances.push(Utterance {
                    id: token.utterance_id.clone(),
                    speaker_id: token.speaker_id.clone(),
                    gender: token.gender,
                    track,
                    word_spans: Vec::new(),
                });
                utt_index.insert(token.utterance_id.clone(), utterances.len() - 1);
                utterances.len() - 1
            }
        };
        let utt = &mut utterances[u];
        let span = FrameSpan::from_times(
            token.start_s,
            token.end_s,
            utt.track.hop_ms,
            utt.track.num_frames(),
        );
        let word_index = utt.word_spans.len();
        utt.word_spans.push(span);

        let rows = by_interval
            .get(&interval_key(
                &token.utterance_id,
                token.start_s,
                token.end_s,
            ))
            .ok_or_else(|| CorpusError::MissingLabel {
                utterance: token.utterance_id.clone(),
                word: token.word.clone(),
                start_s: token.start_s,
                end_s: token.end_s,
            })?;
        let none = EventLabel::none();
        let label = rows
            .iter()
            .find(|l| l.kind == kind)
            .copied()
            .unwrap_or(&none);
        match scheme.map_label(label) {
            Ok(LabelClass::Class(c)) => entries.push(DatasetEntry {
                id: entries.len(),
                token: token.clone(),
                utterance: u,
                word_index,
                frames: span,
                class_index: c,
            }),
            Ok(LabelClass::Excluded(reason)) => exclusions.push(Exclusion {
                token: token.clone(),
                tobi: label.tobi.clone(),
                reason,
            }),
            Err(tobi) => unknown.push(UnknownLabel {
                utterance: token.utterance_id.clone(),
                start_s: token.start_s,
                end_s: token.end_s,
                tobi,
            }),
        }
    }
    if !unknown.is_empty() {
        return Err(CorpusError::UnknownLabels(unknown, scheme.task));
    }
    Ok(Dataset {
        scheme: scheme.clone(),
        utterances,
        entries,
        exclusions,
    })
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.utterances.first().map_or(0, |u| u.track.dim())
    }

    pub fn speaker_of(&self, entry: &DatasetEntry) -> &str {
        &self.utterances[entry.utterance].speaker_id
    }

    /// Speakers in sorted order with their gender.
    pub fn speakers(&self) -> Vec<(String, Gender)> {
        let mut map = BTreeMap::new();
        for u in &self.utterances {
            map.insert(u.speaker_id.clone(), u.gender);
        }
        map.into_iter().collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.scheme.n_classes()];
        for e in &self.entries {
            counts[e.class_index] += 1;
        }
        counts
    }

    /// Frame spans of the words before and after `entry` in its utterance.
    pub fn neighbors(&self, entry: &DatasetEntry) -> (Option<FrameSpan>, Option<FrameSpan>) {
        let spans = &self.utterances[entry.utterance].word_spans;
        let prev = entry.word_index.checked_sub(1).map(|i| spans[i]);
        let next = spans.get(entry.word_index + 1).copied();
        (prev, next)
    }

    /// Copy with every track z-scored per speaker.
    pub fn zscored(&self) -> Dataset {
        let speakers: Vec<String> = self
            .utterances
            .iter()
            .map(|u| u.speaker_id.clone())
            .collect();
        let tracks: Vec<FeatureTrack> = self.utterances.iter().map(|u| u.track.clone()).collect();
        let normalized = zscore_per_speaker(&speakers, &tracks);
        let mut out = self.clone();
        for (u, t) in out.utterances.iter_mut().zip(normalized) {
            u.track = t;
        }
        out
    }

    /// Listing of every excluded token with its reason.
    pub fn exclusion_report(&self) -> String {
        let mut s = String::new();
        for x in &self.exclusions {
            s.push_str(&format!(
                "{}\t{}\t{:.3}\t{:.3}\t{}\t{}\n",
                x.token.utterance_id,
                x.token.word,
                x.token.start_s,
                x.token.end_s,
                x.tobi,
                x.reason
            ));
        }
        s
    }
}

/// Standardizes each feature row per speaker over all frames of that
/// speaker's utterances, using the population standard deviation. Rows with
/// zero spread map to 0. `speakers[i]` names the speaker of `tracks[i]`.
pub fn zscore_per_speaker(speakers: &[String], tracks: &[FeatureTrack]) -> Vec<FeatureTrack> {
    assert_eq!(speakers.len(), tracks.len());
    let dim = tracks.first().map_or(0, |t| t.dim());
    // speaker -> (count, per-row sum, per-row sum of squared deviations)
    let mut stats: BTreeMap<&str, (usize, Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (spk, t) in speakers.iter().zip(tracks) {
        let e = stats
            .entry(spk.as_str())
            .or_insert_with(|| (0, vec![0.0; dim], vec![0.0; dim]));
        e.0 += t.num_frames();
        for (i, row) in t.values.rows().into_iter().enumerate() {
            e.1[i] += row.sum();
        }
    }
    for (spk, t) in speakers.iter().zip(tracks) {
        let e = stats.get_mut(spk.as_str()).unwrap();
        let n = e.0 as f64;
        for (i, row) in t.values.rows().into_iter().enumerate() {
            let mean = e.1[i] / n;
            e.2[i] += row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
        }
    }
    speakers
        .iter()
        .zip(tracks)
        .map(|(spk, t)| {
            let (count, sum, ssd) = &stats[spk.as_str()];
            let n = *count as f64;
            let mut out = t.clone();
            for (i, mut row) in out.values.rows_mut().into_iter().enumerate() {
                let mean = sum[i] / n;
                let sd = (ssd[i] / n).sqrt();
                // Rounding in the mean leaves a tiny spread on constant rows.
                if sd > 1e-12 * (1.0 + mean.abs()) && sd.is_finite() {
                    row.mapv_inplace(|v| (v - mean) / sd);
                } else {
                    row.fill(0.0);
                }
            }
            out
        })
        .collect()
}
