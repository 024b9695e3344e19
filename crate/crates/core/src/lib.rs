//! Prosodic event recognition on words from frame-based acoustic features.
//!
//! The pipeline runs audio through [`signal`] feature extraction, joins word
//! alignments and ToBI labels in [`corpus`], assembles padded per-word input
//! matrices in [`windows`], and trains the two-layer CNN in [`net`].
//! [`harness`] runs k-fold and leave-one-speaker-out experiments, and
//! [`synth`] generates a labelled corpus with planted events.

pub mod corpus;
pub mod harness;
pub mod io;
pub mod net;
pub mod seed;
pub mod signal;
pub mod synth;
pub mod windows;

pub use corpus::{
    Dataset, DatasetEntry, EventKind, EventLabel, Gender, LabelScheme, Task, WordToken,
};
pub use harness::{CvKind, CvPlan, Metrics, Report, RunConfig};
pub use net::{AdamState, Geometry, ModelParams};
pub use signal::{AudioBuffer, FeatureSet, FeatureTrack, FrameSpec};
pub use windows::{Context, InputWindow, WindowConfig};
