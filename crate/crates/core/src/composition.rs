//! Noun x verb action composition.
//!
//! Each aligned proposal pair yields `k_n * k_v` action hypotheses. A
//! hypothesis scores `sqrt(P_noun * P_verb)` and gets the flat id
//! `noun_count * verb + noun`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::decode::StreamProposal;
use crate::error::{Error, Result};
use crate::interval::Interval;

pub const DEFAULT_NOUN_COUNT: usize = 300;
pub const DEFAULT_VERB_COUNT: usize = 97;
pub const DEFAULT_TOP_K_NOUN: usize = 10;
pub const DEFAULT_TOP_K_VERB: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabSpec {
    pub noun_count: usize,
    pub verb_count: usize,
}

impl Default for VocabSpec {
    fn default() -> Self {
        Self {
            noun_count: DEFAULT_NOUN_COUNT,
            verb_count: DEFAULT_VERB_COUNT,
        }
    }
}

impl VocabSpec {
    pub fn new(noun_count: usize, verb_count: usize) -> Result<Self> {
        if noun_count == 0 || verb_count == 0 {
            return Err(Error::InvalidConfig("vocabulary sizes must be >= 1".into()));
        }
        Ok(Self { noun_count, verb_count })
    }

    pub fn action_count(&self) -> usize {
        self.noun_count * self.verb_count
    }

    pub fn encode(&self, noun: usize, verb: usize) -> usize {
        debug_assert!(noun < self.noun_count && verb < self.verb_count);
        self.noun_count * verb + noun
    }

    /// Inverse of [`encode`](Self::encode): `(noun, verb)`.
    pub fn decode(&self, action_id: usize) -> Result<(usize, usize)> {
        if action_id >= self.action_count() {
            return Err(Error::ActionIdOutOfRange {
                id: action_id,
                size: self.action_count(),
            });
        }
        Ok((action_id % self.noun_count, action_id / self.noun_count))
    }
}

pub fn encode_action_id(noun: usize, verb: usize, vocab: &VocabSpec) -> usize {
    vocab.encode(noun, verb)
}

pub fn decode_action_id(action_id: usize, vocab: &VocabSpec) -> Result<(usize, usize)> {
    vocab.decode(action_id)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionCandidate {
    pub noun: usize,
    pub verb: usize,
    pub action_id: usize,
    pub score: f64,
    pub noun_boundary: Interval,
    pub verb_boundary: Interval,
}

/// The `k` largest entries as `(index, score)`, best first; equal scores keep
/// ascending index order.
pub fn top_k(scores: &[f64], k: usize) -> Vec<(usize, f64)> {
    let mut ranked: Vec<(usize, f64)> = scores.iter().copied().enumerate().collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)));
    ranked.truncate(k);
    ranked
}

/// Crosses the top nouns with the top verbs of one aligned proposal pair.
///
/// Candidates come back sorted by score, ties by ascending action id.
pub fn compose_actions(
    noun: &StreamProposal,
    verb: &StreamProposal,
    k_n: usize,
    k_v: usize,
    vocab: &VocabSpec,
) -> Result<Vec<ActionCandidate>> {
    if noun.scores.len() != vocab.noun_count {
        return Err(Error::VocabularyMismatch(format!(
            "noun scores have {} entries, vocabulary has {}",
            noun.scores.len(),
            vocab.noun_count
        )));
    }
    if verb.scores.len() != vocab.verb_count {
        return Err(Error::VocabularyMismatch(format!(
            "verb scores have {} entries, vocabulary has {}",
            verb.scores.len(),
            vocab.verb_count
        )));
    }
    let nouns = top_k(&noun.scores, k_n);
    let verbs = top_k(&verb.scores, k_v);
    let mut out = Vec::with_capacity(nouns.len() * verbs.len());
    for &(p, pn) in &nouns {
        for &(q, pv) in &verbs {
            out.push(ActionCandidate {
                noun: p,
                verb: q,
                action_id: vocab.encode(p, q),
                score: (pn * pv).sqrt(),
                noun_boundary: noun.boundary,
                verb_boundary: verb.boundary,
            });
        }
    }
    out.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then(a.action_id.cmp(&b.action_id))
    });
    Ok(out)
}
