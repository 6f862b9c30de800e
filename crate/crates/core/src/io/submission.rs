//! Challenge-style JSON submission.
//!
//! ```json
//! {
//!   "version": "0.2",
//!   "challenge": "action_detection",
//!   "sls_pt": 2,
//!   "sls_tl": 3,
//!   "sls_td": 4,
//!   "results": {
//!     "P01_11": [
//!       {"verb": 2, "noun": 3, "action": "2,3", "score": 0.7312, "segment": [12.4000, 20.1333]}
//!     ]
//!   }
//! }
//! ```
//!
//! The writer is hand-rolled so that key order and number formatting (four
//! fractional digits) are fixed; reading goes through serde.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::composition::VocabSpec;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::suppression::{detection_order, ActionDetection};

const DECIMALS: i32 = 4;

/// Rounds to the precision the submission is written with.
pub fn round_fixed(x: f64) -> f64 {
    let scale = 10f64.powi(DECIMALS);
    let r = (x * scale).round() / scale;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmissionEntry {
    pub verb: usize,
    pub noun: usize,
    /// `"verb,noun"`.
    pub action: String,
    pub score: f64,
    pub segment: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmissionDocument {
    pub version: String,
    pub challenge: String,
    #[serde(default)]
    pub sls_pt: Option<u32>,
    #[serde(default)]
    pub sls_tl: Option<u32>,
    #[serde(default)]
    pub sls_td: Option<u32>,
    pub results: BTreeMap<String, Vec<SubmissionEntry>>,
}

impl SubmissionDocument {
    pub fn empty(version: &str, challenge: &str) -> Self {
        Self {
            version: version.to_string(),
            challenge: challenge.to_string(),
            sls_pt: None,
            sls_tl: None,
            sls_td: None,
            results: BTreeMap::new(),
        }
    }

    /// Adds one video's detections, sorted best first and rounded to the
    /// written precision. Detections whose rounded segment is empty are
    /// dropped.
    pub fn insert_video(&mut self, video_id: &str, mut dets: Vec<ActionDetection>) {
        dets.sort_by(detection_order);
        let entries = dets
            .iter()
            .filter_map(|d| {
                let start = round_fixed(d.interval.start.max(0.0));
                let end = round_fixed(d.interval.end);
                if start >= end {
                    log::warn!("{video_id}: dropping detection with sub-precision segment {:?}", d.interval);
                    return None;
                }
                Some(SubmissionEntry {
                    verb: d.verb,
                    noun: d.noun,
                    action: format!("{},{}", d.verb, d.noun),
                    score: round_fixed(d.score),
                    segment: [start, end],
                })
            })
            .collect();
        self.results.insert(video_id.to_string(), entries);
    }

    pub fn num_detections(&self) -> usize {
        self.results.values().map(Vec::len).sum()
    }

    pub fn to_json(&self) -> String {
        let q = |s: &str| serde_json::to_string(s).expect("string serialization cannot fail");
        let mut out = String::new();
        out.push_str("{\n");
        let _ = writeln!(out, "  \"version\": {},", q(&self.version));
        let _ = writeln!(out, "  \"challenge\": {},", q(&self.challenge));
        for (key, val) in [("sls_pt", self.sls_pt), ("sls_tl", self.sls_tl), ("sls_td", self.sls_td)] {
            if let Some(v) = val {
                let _ = writeln!(out, "  \"{key}\": {v},");
            }
        }
        out.push_str("  \"results\": {");
        for (vi, (video, entries)) in self.results.iter().enumerate() {
            out.push_str(if vi == 0 { "\n" } else { ",\n" });
            let _ = write!(out, "    {}: [", q(video));
            for (ei, e) in entries.iter().enumerate() {
                out.push_str(if ei == 0 { "\n" } else { ",\n" });
                let _ = write!(
                    out,
                    "      {{\"verb\": {}, \"noun\": {}, \"action\": {}, \"score\": {:.4}, \"segment\": [{:.4}, {:.4}]}}",
                    e.verb,
                    e.noun,
                    q(&e.action),
                    e.score,
                    e.segment[0],
                    e.segment[1]
                );
            }
            out.push_str(if entries.is_empty() { "]" } else { "\n    ]" });
        }
        out.push_str(if self.results.is_empty() { "}\n" } else { "\n  }\n" });
        out.push_str("}\n");
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Flattens back into detections, checking every entry against the
    /// vocabulary and the document invariants.
    pub fn detections(&self, vocab: &VocabSpec) -> Result<Vec<ActionDetection>> {
        let mut out = Vec::with_capacity(self.num_detections());
        for (video, entries) in &self.results {
            for e in entries {
                let expected = format!("{},{}", e.verb, e.noun);
                if e.action != expected {
                    return Err(Error::SchemaMismatch(format!(
                        "{video}: action `{}` does not match verb {} / noun {}",
                        e.action, e.verb, e.noun
                    )));
                }
                if e.verb >= vocab.verb_count || e.noun >= vocab.noun_count {
                    return Err(Error::VocabularyMismatch(format!(
                        "{video}: verb {} / noun {} outside the vocabulary",
                        e.verb, e.noun
                    )));
                }
                let interval = Interval::new(e.segment[0], e.segment[1])
                    .map_err(|_| Error::SchemaMismatch(format!("{video}: segment {:?} is empty", e.segment)))?;
                if e.segment[0] < 0.0 {
                    return Err(Error::SchemaMismatch(format!("{video}: negative segment start")));
                }
                out.push(ActionDetection {
                    video_id: video.clone(),
                    interval,
                    verb: e.verb,
                    noun: e.noun,
                    action_id: vocab.encode(e.noun, e.verb),
                    score: e.score,
                });
            }
        }
        Ok(out)
    }
}
