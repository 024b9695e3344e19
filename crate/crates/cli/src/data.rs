use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use prosody_core::corpus::{build_dataset, parse_alignments, parse_labels};
use prosody_core::io::read_wav;
use prosody_core::signal::{extract_many, FeatureSet, FrameSpec};
use prosody_core::{Dataset, LabelScheme};

use crate::CliError;

/// Reads the alignment and label TSVs, loads `<audio_dir>/<utterance>.wav`
/// for every aligned utterance and extracts features.
pub fn load_dataset(
    audio_dir: &Path,
    alignments: &Path,
    labels: &Path,
    set: FeatureSet,
    frames: &FrameSpec,
    scheme: &LabelScheme,
) -> Result<Dataset, CliError> {
    let open = |p: &Path| {
        File::open(p)
            .map(BufReader::new)
            .map_err(|e| CliError::Input(vec![format!("{}: {e}", p.display())]))
    };
    let tokens = parse_alignments(open(alignments)?)
        .map_err(|e| CliError::Input(vec![format!("{}: {e}", alignments.display())]))?;
    let records = parse_labels(open(labels)?)
        .map_err(|e| CliError::Input(vec![format!("{}: {e}", labels.display())]))?;

    let mut seen = BTreeSet::new();
    let ids: Vec<&str> = tokens
        .iter()
        .map(|t| t.utterance_id.as_str())
        .filter(|id| seen.insert(*id))
        .collect();
    let mut audio = Vec::with_capacity(ids.len());
    let mut errors = Vec::new();
    for id in ids {
        match read_wav(&audio_dir.join(format!("{id}.wav"))) {
            Ok(a) => audio.push((id.to_string(), a)),
            Err(e) => errors.push(e.to_string()),
        }
    }
    if !errors.is_empty() {
        return Err(CliError::Input(errors));
    }
    let tracks =
        extract_many(&audio, frames, set).map_err(|e| CliError::Input(vec![e.to_string()]))?;
    build_dataset(&tokens, &records, tracks, scheme)
        .map_err(|e| CliError::Input(vec![e.to_string()]))
}
