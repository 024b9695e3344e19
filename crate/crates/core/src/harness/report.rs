use std::collections::BTreeMap;
use std::fmt::Write;

use super::experiment::{CvSpec, Report};
use super::train::EpochLog;
use crate::signal::FeatureSet;
use crate::windows::WindowVariant;

/// CSV `epoch,train_loss,val_accuracy`.
pub fn write_training_log(log: &[EpochLog]) -> String {
    let mut s = String::from("epoch,train_loss,val_accuracy\n");
    for e in log {
        let _ = writeln!(s, "{},{:.6},{:.6}", e.epoch, e.train_loss, e.val_accuracy);
    }
    s
}

fn pct(v: f64) -> String {
    format!("{:.1}", 100.0 * v)
}

/// Accuracy table with context variants as rows and feature sets as
/// columns, one block per (task, cross-validation, normalization) group,
/// followed by per-speaker rows for leave-one-speaker-out runs.
pub fn render_table(reports: &[Report]) -> String {
    type Key = (String, String, bool);
    let mut groups: BTreeMap<Key, Vec<&Report>> = BTreeMap::new();
    for r in reports {
        let cv = match r.config.cv {
            CvSpec::Kfold { k, .. } => format!("{k}-fold"),
            CvSpec::Loso { .. } => "leave-one-speaker-out".to_string(),
        };
        groups
            .entry((r.config.task.code().to_string(), cv, r.config.zscore))
            .or_default()
            .push(r);
    }
    let mut out = String::new();
    for ((task, cv, zscore), rs) in &groups {
        let mut sets: Vec<FeatureSet> = rs.iter().map(|r| r.config.feature_set).collect();
        sets.sort_by_key(|s| s.dim());
        sets.dedup();
        let _ = writeln!(
            out,
            "{task}, {cv}{}: accuracy (%), majority baseline {}",
            if *zscore { ", z-scored" } else { "" },
            pct(rs[0].baseline)
        );
        let _ = write!(out, "{:<14}", "");
        for s in &sets {
            let _ = write!(out, " | {:>12}", s.name());
        }
        out.push('\n');
        for v in WindowVariant::ALL {
            if !rs.iter().any(|r| r.config.variant == v) {
                continue;
            }
            let _ = write!(out, "{:<14}", v.label());
            for s in &sets {
                let cell = rs
                    .iter()
                    .find(|r| r.config.variant == v && r.config.feature_set == *s)
                    .map_or("-".to_string(), |r| pct(r.accuracy));
                let _ = write!(out, " | {cell:>12}");
            }
            out.push('\n');
        }
        for r in rs.iter().filter(|r| !r.per_speaker.is_empty()) {
            let _ = writeln!(
                out,
                "  per speaker ({}, {}):",
                r.config.variant.label(),
                r.config.feature_set.name()
            );
            for row in &r.per_speaker {
                let _ = writeln!(
                    out,
                    "    {:<10} {:>6} words  {}",
                    row.speaker,
                    row.n_test,
                    pct(row.accuracy)
                );
            }
        }
        for r in rs.iter().filter(|r| r.failed_folds > 0) {
            let _ = writeln!(
                out,
                "  {} fold(s) failed in {}",
                r.failed_folds,
                r.config.variant.label()
            );
        }
        out.push('\n');
    }
    out
}
