//! Metric tables for the verb, noun and action tasks.

use std::fmt::Write as _;

use crate::composition::VocabSpec;
use crate::error::Result;
use crate::evaluation::{evaluate_all, GroundTruthInstance, MapReport};
use crate::suppression::ActionDetection;

use super::submission::SubmissionDocument;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsTable {
    pub reports: Vec<MapReport>,
}

impl MetricsTable {
    pub fn new(dets: &[ActionDetection], gts: &[GroundTruthInstance], thresholds: &[f64]) -> Result<Self> {
        Ok(Self {
            reports: evaluate_all(dets, gts, thresholds)?,
        })
    }

    /// Aligned rows of mAP in percent, one per task, with the average last.
    pub fn to_text(&self) -> String {
        let mut out = String::from("task  ");
        if let Some(first) = self.reports.first() {
            for t in &first.thresholds {
                let _ = write!(out, "  @{t:<5}");
            }
        }
        out.push_str("    avg\n");
        for r in &self.reports {
            let _ = write!(out, "{:<6}", r.task.to_string());
            for m in &r.map {
                let _ = write!(out, " {:>7.2}", 100.0 * m);
            }
            let _ = writeln!(out, " {:>7.2}", 100.0 * r.average);
        }
        out
    }

    /// `task_map@tau=value` lines (fractions, six decimals).
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        for r in &self.reports {
            for (t, m) in r.thresholds.iter().zip(&r.map) {
                let _ = writeln!(out, "{}_map@{}={:.6}", r.task, t, m);
            }
            let _ = writeln!(out, "{}_map_avg={:.6}", r.task, r.average);
        }
        out
    }
}

/// Scores a submission against ground truth.
pub fn evaluate_files(
    submission: &SubmissionDocument,
    gts: &[GroundTruthInstance],
    thresholds: &[f64],
    vocab: &VocabSpec,
) -> Result<MetricsTable> {
    let dets = submission.detections(vocab)?;
    if !submission.results.is_empty()
        && !gts.is_empty()
        && !gts.iter().any(|g| submission.results.contains_key(&g.video_id))
    {
        log::warn!("submission and ground truth share no video ids");
    }
    MetricsTable::new(&dets, gts, thresholds)
}
