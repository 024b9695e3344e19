//! Per-word CNN input matrices.
//!
//! A window holds the frames of the current word, optionally preceded and
//! followed by its neighbours in the same utterance, right-padded with zeros
//! to a fixed width. With the position feature enabled an extra bottom row
//! is 1.0 on the current word's frames and 0.0 elsewhere.

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Dataset, DatasetEntry, FrameSpan};
use crate::signal::FeatureTrack;

#[derive(Debug, Error, PartialEq)]
pub enum WindowError {
    #[error("frames {start}..{end} lie outside the {num_frames}-frame track of {utterance}")]
    RangeError {
        utterance: String,
        start: usize,
        end: usize,
        num_frames: usize,
    },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("the position feature requires a three-word context")]
    PositionWithoutContext,
    #[error("track has {found} feature rows, window expects {expected}")]
    DimMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Context {
    OneWord,
    ThreeWords,
}

/// The three input variants compared in experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowVariant {
    OneWord,
    ThreeWords,
    ThreeWordsPf,
}

impl WindowVariant {
    pub const ALL: [WindowVariant; 3] = [
        WindowVariant::OneWord,
        WindowVariant::ThreeWords,
        WindowVariant::ThreeWordsPf,
    ];

    pub fn context(self) -> Context {
        match self {
            WindowVariant::OneWord => Context::OneWord,
            _ => Context::ThreeWords,
        }
    }

    pub fn position_feature(self) -> bool {
        self == WindowVariant::ThreeWordsPf
    }

    pub fn code(self) -> &'static str {
        match self {
            WindowVariant::OneWord => "1w",
            WindowVariant::ThreeWords => "3w",
            WindowVariant::ThreeWordsPf => "3w-pf",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            WindowVariant::OneWord => "1 word",
            WindowVariant::ThreeWords => "3 words",
            WindowVariant::ThreeWordsPf => "3 words + PF",
        }
    }
}

impl std::str::FromStr for WindowVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        WindowVariant::ALL
            .iter()
            .copied()
            .find(|v| v.code() == s)
            .ok_or_else(|| format!("unknown context `{s}` (expected 1w, 3w or 3w-pf)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub context: Context,
    pub position_feature: bool,
    /// Padded width `S`.
    pub max_frames: usize,
    /// Feature rows of the underlying track.
    pub base_dim: usize,
}

impl WindowConfig {
    pub fn new(variant: WindowVariant, max_frames: usize, base_dim: usize) -> Self {
        Self {
            context: variant.context(),
            position_feature: variant.position_feature(),
            max_frames,
            base_dim,
        }
    }

    pub fn validate(&self) -> Result<(), WindowError> {
        if self.position_feature && self.context != Context::ThreeWords {
            return Err(WindowError::PositionWithoutContext);
        }
        Ok(())
    }

    /// Rows of the assembled matrix.
    pub fn input_dim(&self) -> usize {
        self.base_dim + usize::from(self.position_feature)
    }

    pub fn variant(&self) -> WindowVariant {
        match (self.context, self.position_feature) {
            (Context::OneWord, _) => WindowVariant::OneWord,
            (Context::ThreeWords, false) => WindowVariant::ThreeWords,
            (Context::ThreeWords, true) => WindowVariant::ThreeWordsPf,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputWindow {
    /// `input_dim × max_frames`.
    pub matrix: Array2<f64>,
    /// Current word's frames in window coordinates.
    pub current_span: FrameSpan,
    /// Frames before right padding.
    pub true_len: usize,
    pub class_index: usize,
}

fn check_span(track: &FeatureTrack, span: FrameSpan) -> Result<(), WindowError> {
    if span.is_empty() || span.end > track.num_frames() {
        return Err(WindowError::RangeError {
            utterance: track.utterance_id.clone(),
            start: span.start,
            end: span.end,
            num_frames: track.num_frames(),
        });
    }
    Ok(())
}

/// Picks which `width` of `total` frames to keep so the current word
/// `[a, b)` stays centered and, when it fits, complete.
fn truncation_offset(total: usize, width: usize, a: usize, b: usize) -> usize {
    let center = (a + b) / 2;
    let mut start = center.saturating_sub(width / 2).min(total - width);
    if b - a <= width {
        if b > start + width {
            start = b - width;
        }
        if a < start {
            start = a;
        }
    }
    start
}

/// Builds the padded input matrix for one word.
///
/// `prev` and `next` are the neighbouring words' frame spans in the same
/// utterance (absent at utterance edges) and are ignored for one-word
/// windows.
pub fn assemble_window(
    current: FrameSpan,
    neighbors: (Option<FrameSpan>, Option<FrameSpan>),
    track: &FeatureTrack,
    cfg: &WindowConfig,
    class_index: usize,
) -> Result<InputWindow, WindowError> {
    cfg.validate()?;
    if track.dim() != cfg.base_dim {
        return Err(WindowError::DimMismatch {
            expected: cfg.base_dim,
            found: track.dim(),
        });
    }
    check_span(track, current)?;
    let parts: Vec<FrameSpan> = match cfg.context {
        Context::OneWord => vec![current],
        Context::ThreeWords => {
            for n in [neighbors.0, neighbors.1].into_iter().flatten() {
                check_span(track, n)?;
            }
            neighbors
                .0
                .into_iter()
                .chain(std::iter::once(current))
                .chain(neighbors.1)
                .collect()
        }
    };
    let total: usize = parts.iter().map(FrameSpan::len).sum();
    let cur_start: usize = match (cfg.context, neighbors.0) {
        (Context::ThreeWords, Some(p)) => p.len(),
        _ => 0,
    };
    let cur_end = cur_start + current.len();

    let width = cfg.max_frames;
    let offset = if total > width {
        log::warn!(
            "window of {total} frames in {} exceeds width {width}; truncating around the current word",
            track.utterance_id
        );
        truncation_offset(total, width, cur_start, cur_end)
    } else {
        0
    };
    let true_len = total.min(width);

    let mut matrix = Array2::zeros((cfg.input_dim(), width));
    let mut col = 0usize;
    for span in &parts {
        for f in span.start..span.end {
            if col >= offset && col - offset < width {
                matrix
                    .slice_mut(s![..cfg.base_dim, col - offset])
                    .assign(&track.values.column(f));
            }
            col += 1;
        }
    }
    let a = cur_start.saturating_sub(offset).min(true_len);
    let b = cur_end.saturating_sub(offset).min(true_len);
    let (a, b) = if b > a {
        (a, b)
    } else {
        (a.min(true_len - 1), a.min(true_len - 1) + 1)
    };
    if cfg.position_feature {
        matrix.slice_mut(s![cfg.base_dim, a..b]).fill(1.0);
    }
    Ok(InputWindow {
        matrix,
        current_span: FrameSpan::new(a, b),
        true_len,
        class_index,
    })
}

/// Window length for one entry before padding.
pub fn window_length(dataset: &Dataset, entry: &DatasetEntry, context: Context) -> usize {
    match context {
        Context::OneWord => entry.frames.len(),
        Context::ThreeWords => {
            let (p, n) = dataset.neighbors(entry);
            entry.frames.len() + p.map_or(0, |s| s.len()) + n.map_or(0, |s| s.len())
        }
    }
}

/// Longest window in the dataset for the configured context.
pub fn scan_max_frames(dataset: &Dataset, context: Context) -> Result<usize, WindowError> {
    dataset
        .entries
        .iter()
        .map(|e| window_length(dataset, e, context))
        .max()
        .ok_or(WindowError::EmptyDataset)
}

/// Assembles the window of every listed entry.
pub fn assemble_entries(
    dataset: &Dataset,
    ids: &[usize],
    cfg: &WindowConfig,
) -> Result<Vec<InputWindow>, WindowError> {
    ids.iter()
        .map(|&id| {
            let e = &dataset.entries[id];
            let track = &dataset.utterances[e.utterance].track;
            assemble_window(e.frames, dataset.neighbors(e), track, cfg, e.class_index)
        })
        .collect()
}
