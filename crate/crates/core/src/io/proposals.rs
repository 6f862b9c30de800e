//! Line-oriented aligned proposal file.
//!
//! One aligned noun/verb proposal per line, whitespace separated:
//!
//! ```text
//! # video_id  window_start  noun_s noun_e  noun_scores  verb_s verb_e  verb_scores
//! P01_11      0             12.5   40.0    3:0.81,17:0.05  13.0 41.5  2:0.66
//! ```
//!
//! Boundaries are feature coordinates local to the window that starts at
//! feature `window_start`. Score vectors are sparse `index:score` lists
//! (`-` for an empty list); missing entries are zero.

use std::fmt::Write as _;
use std::path::Path;

use crate::composition::VocabSpec;
use crate::error::{Error, Result};
use crate::interval::Interval;

#[derive(Debug, Clone, PartialEq)]
pub struct ProposalRecord {
    pub video_id: String,
    pub window_start_feature: usize,
    pub noun_boundary: Interval,
    pub noun_scores: Vec<(usize, f64)>,
    pub verb_boundary: Interval,
    pub verb_scores: Vec<(usize, f64)>,
}

impl ProposalRecord {
    /// Dense noun and verb score vectors.
    pub fn dense_scores(&self, vocab: &VocabSpec) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok((
            densify(&self.noun_scores, vocab.noun_count, "noun")?,
            densify(&self.verb_scores, vocab.verb_count, "verb")?,
        ))
    }
}

fn densify(sparse: &[(usize, f64)], len: usize, stream: &str) -> Result<Vec<f64>> {
    let mut v = vec![0.0; len];
    for &(i, s) in sparse {
        let slot = v.get_mut(i).ok_or_else(|| {
            Error::VocabularyMismatch(format!("{stream} index {i} is outside a vocabulary of {len}"))
        })?;
        *slot = s;
    }
    Ok(v)
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_sparse(field: &str, line: usize) -> Result<Vec<(usize, f64)>> {
    if field == "-" {
        return Ok(Vec::new());
    }
    field
        .split(',')
        .map(|pair| {
            let (i, s) = pair
                .split_once(':')
                .ok_or_else(|| parse_err(line, format!("expected `index:score`, got `{pair}`")))?;
            let i: usize = i
                .parse()
                .map_err(|_| parse_err(line, format!("bad class index `{i}`")))?;
            let s: f64 = s
                .parse()
                .map_err(|_| parse_err(line, format!("bad score `{s}`")))?;
            if !(0.0..=1.0).contains(&s) {
                return Err(parse_err(line, format!("score {s} is outside [0, 1]")));
            }
            Ok((i, s))
        })
        .collect()
}

fn parse_boundary(s: &str, e: &str, line: usize) -> Result<Interval> {
    let s: f64 = s.parse().map_err(|_| parse_err(line, format!("bad boundary `{s}`")))?;
    let e: f64 = e.parse().map_err(|_| parse_err(line, format!("bad boundary `{e}`")))?;
    Interval::new(s, e).map_err(|_| parse_err(line, format!("boundary ({s}, {e}) is not a valid interval")))
}

/// Parses a proposal file. Class indices are checked against `vocab`.
pub fn parse_proposals(text: &str, vocab: &VocabSpec) -> Result<Vec<ProposalRecord>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let f: Vec<&str> = content.split_whitespace().collect();
        if f.len() != 8 {
            return Err(parse_err(line, format!("expected 8 fields, found {}", f.len())));
        }
        let window_start_feature = f[1]
            .parse()
            .map_err(|_| parse_err(line, format!("bad window start `{}`", f[1])))?;
        let record = ProposalRecord {
            video_id: f[0].to_string(),
            window_start_feature,
            noun_boundary: parse_boundary(f[2], f[3], line)?,
            noun_scores: parse_sparse(f[4], line)?,
            verb_boundary: parse_boundary(f[5], f[6], line)?,
            verb_scores: parse_sparse(f[7], line)?,
        };
        record.dense_scores(vocab).map_err(|e| match e {
            Error::VocabularyMismatch(m) => Error::VocabularyMismatch(format!("line {line}: {m}")),
            other => other,
        })?;
        out.push(record);
    }
    Ok(out)
}

pub fn read_proposals(path: impl AsRef<Path>, vocab: &VocabSpec) -> Result<Vec<ProposalRecord>> {
    parse_proposals(&std::fs::read_to_string(path)?, vocab)
}

fn write_sparse(out: &mut String, scores: &[(usize, f64)]) {
    if scores.is_empty() {
        out.push('-');
        return;
    }
    for (k, (i, s)) in scores.iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        let _ = write!(out, "{i}:{s}");
    }
}

/// Serializes records in the format read by [`parse_proposals`]. Floats use
/// the shortest representation that parses back to the same value.
pub fn write_proposals(records: &[ProposalRecord]) -> String {
    let mut out = String::from("# video_id window_start noun_s noun_e noun_scores verb_s verb_e verb_scores\n");
    for r in records {
        let _ = write!(
            out,
            "{} {} {} {} ",
            r.video_id, r.window_start_feature, r.noun_boundary.start, r.noun_boundary.end
        );
        write_sparse(&mut out, &r.noun_scores);
        let _ = write!(out, " {} {} ", r.verb_boundary.start, r.verb_boundary.end);
        write_sparse(&mut out, &r.verb_scores);
        out.push('\n');
    }
    out
}
