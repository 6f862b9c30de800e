//! Class-wise Soft-NMS with boundary voting.
//!
//! Within one class of one video, the best remaining detection is kept and
//! every other detection's score decays by `exp(-iou^2 / sigma)` relative to
//! it. Detections that fall below `min_score` are dropped. The kept
//! detection's interval is then refined by a score-weighted vote over the
//! round's candidates that overlap it by at least `vote_threshold`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use crate::interval::temporal_iou;
use crate::interval::Interval;

pub const DEFAULT_PRE_NMS_CAP: usize = 5000;
pub const DEFAULT_MAX_PER_VIDEO: usize = 3000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NmsConfig {
    pub sigma: f64,
    pub min_score: f64,
    pub vote_threshold: f64,
    pub pre_nms_cap: usize,
    pub max_per_video: usize,
}

impl NmsConfig {
    pub fn noun() -> Self {
        Self {
            sigma: 0.6,
            min_score: 0.005,
            vote_threshold: 0.65,
            pre_nms_cap: DEFAULT_PRE_NMS_CAP,
            max_per_video: DEFAULT_MAX_PER_VIDEO,
        }
    }

    pub fn verb_action() -> Self {
        Self {
            sigma: 0.4,
            min_score: 0.001,
            vote_threshold: 0.75,
            pre_nms_cap: DEFAULT_PRE_NMS_CAP,
            max_per_video: DEFAULT_MAX_PER_VIDEO,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) {
            return Err(Error::InvalidConfig(format!("sigma must be > 0, got {}", self.sigma)));
        }
        if !(self.min_score >= 0.0) {
            return Err(Error::InvalidConfig("min_score must be >= 0".into()));
        }
        if !(self.vote_threshold > 0.0 && self.vote_threshold <= 1.0) {
            return Err(Error::InvalidConfig("vote_threshold must be in (0, 1]".into()));
        }
        if self.pre_nms_cap == 0 || self.max_per_video == 0 {
            return Err(Error::InvalidConfig("candidate caps must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NmsPreset {
    Noun,
    #[default]
    VerbAction,
}

impl NmsPreset {
    pub fn config(self) -> NmsConfig {
        match self {
            NmsPreset::Noun => NmsConfig::noun(),
            NmsPreset::VerbAction => NmsConfig::verb_action(),
        }
    }
}

impl FromStr for NmsPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noun" => Ok(NmsPreset::Noun),
            "verb_action" => Ok(NmsPreset::VerbAction),
            other => Err(Error::ConfigValue {
                key: "nms_preset".into(),
                message: format!("expected `noun` or `verb_action`, got `{other}`"),
            }),
        }
    }
}

impl fmt::Display for NmsPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NmsPreset::Noun => "noun",
            NmsPreset::VerbAction => "verb_action",
        })
    }
}

/// A final detection in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionDetection {
    pub video_id: String,
    pub interval: Interval,
    pub verb: usize,
    pub noun: usize,
    pub action_id: usize,
    pub score: f64,
}

/// Which label detections are grouped (and evaluated) by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassKey {
    Verb,
    Noun,
    Action,
}

impl ClassKey {
    pub const ALL: [ClassKey; 3] = [ClassKey::Verb, ClassKey::Noun, ClassKey::Action];

    pub fn of(self, det: &ActionDetection) -> usize {
        match self {
            ClassKey::Verb => det.verb,
            ClassKey::Noun => det.noun,
            ClassKey::Action => det.action_id,
        }
    }
}

impl fmt::Display for ClassKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassKey::Verb => "verb",
            ClassKey::Noun => "noun",
            ClassKey::Action => "action",
        })
    }
}

/// Descending score; ties go to the earlier start, then the smaller action
/// id.
pub fn detection_order(a: &ActionDetection, b: &ActionDetection) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| {
            a.interval
                .start
                .partial_cmp(&b.interval.start)
                .unwrap_or(Ordering::Equal)
        })
        .then(a.action_id.cmp(&b.action_id))
}

/// Score-weighted average of the intervals of `kept` and every neighbor with
/// `tIoU(kept, n) >= vote_threshold`. Weights are the scores carried by the
/// detections passed in, so callers pass pre-decay scores.
pub fn boundary_vote(kept: &ActionDetection, neighbors: &[ActionDetection], vote_threshold: f64) -> ActionDetection {
    // offsets from the kept interval, so equal intervals vote back exactly
    let mut weight = kept.score;
    let mut d_start = 0.0;
    let mut d_end = 0.0;
    for n in neighbors {
        if temporal_iou(&kept.interval, &n.interval) >= vote_threshold {
            weight += n.score;
            d_start += n.score * (n.interval.start - kept.interval.start);
            d_end += n.score * (n.interval.end - kept.interval.end);
        }
    }
    let mut out = kept.clone();
    if weight > 0.0 {
        let voted = Interval::new(kept.interval.start + d_start / weight, kept.interval.end + d_end / weight);
        if let Ok(iv) = voted {
            out.interval = iv;
        }
    }
    out
}

/// One selection round: the kept detection (with its pre-decay score), the
/// score it was kept at, and the round's candidates close enough to vote.
struct Round {
    kept: ActionDetection,
    kept_score: f64,
    pool: Vec<ActionDetection>,
}

fn order_at(a: (f64, &ActionDetection), b: (f64, &ActionDetection)) -> Ordering {
    b.0.partial_cmp(&a.0)
        .unwrap_or(Ordering::Equal)
        .then_with(|| {
            a.1.interval
                .start
                .partial_cmp(&b.1.interval.start)
                .unwrap_or(Ordering::Equal)
        })
        .then(a.1.action_id.cmp(&b.1.action_id))
}

fn soft_nms_rounds(dets: &[ActionDetection], cfg: &NmsConfig) -> Vec<Round> {
    // (decayed score, detection with its original score)
    let mut remaining: Vec<(f64, &ActionDetection)> = dets
        .iter()
        .filter(|d| d.score >= cfg.min_score)
        .map(|d| (d.score, d))
        .collect();
    let mut rounds = Vec::new();
    while !remaining.is_empty() && rounds.len() < cfg.max_per_video {
        let best = (0..remaining.len())
            .min_by(|&i, &j| order_at(remaining[i], remaining[j]))
            .expect("non-empty");
        let (kept_score, kept) = remaining.swap_remove(best);
        let pool = remaining
            .iter()
            .filter(|(_, d)| temporal_iou(&kept.interval, &d.interval) >= cfg.vote_threshold)
            .map(|&(_, d)| d.clone())
            .collect();
        remaining.retain_mut(|(s, d)| {
            let iou = temporal_iou(&kept.interval, &d.interval);
            *s *= (-(iou * iou) / cfg.sigma).exp();
            *s >= cfg.min_score
        });
        rounds.push(Round {
            kept: kept.clone(),
            kept_score,
            pool,
        });
    }
    rounds
}

/// Gaussian Soft-NMS over detections of one class in one video.
pub fn soft_nms(dets: &[ActionDetection], cfg: &NmsConfig) -> Vec<ActionDetection> {
    let mut out: Vec<_> = soft_nms_rounds(dets, cfg)
        .into_iter()
        .map(|r| ActionDetection {
            score: r.kept_score,
            ..r.kept
        })
        .collect();
    out.sort_by(detection_order);
    out
}

/// Soft-NMS followed by boundary voting on every kept detection.
pub fn soft_nms_with_voting(dets: &[ActionDetection], cfg: &NmsConfig) -> Vec<ActionDetection> {
    let mut out: Vec<_> = soft_nms_rounds(dets, cfg)
        .into_iter()
        .map(|r| ActionDetection {
            score: r.kept_score,
            ..boundary_vote(&r.kept, &r.pool, cfg.vote_threshold)
        })
        .collect();
    out.sort_by(detection_order);
    out
}

/// Full per-video suppression: global candidate cap, class-wise Soft-NMS
/// with voting, then the per-video cap.
pub fn suppress_video(dets: Vec<ActionDetection>, cfg: &NmsConfig, class_key: ClassKey) -> Vec<ActionDetection> {
    let mut dets = dets;
    dets.sort_by(detection_order);
    dets.truncate(cfg.pre_nms_cap);

    let mut groups: BTreeMap<usize, Vec<ActionDetection>> = BTreeMap::new();
    for d in dets {
        groups.entry(class_key.of(&d)).or_default().push(d);
    }
    let mut out: Vec<ActionDetection> = groups
        .values()
        .flat_map(|group| soft_nms_with_voting(group, cfg))
        .collect();
    out.sort_by(detection_order);
    out.truncate(cfg.max_per_video);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn det(start: f64, end: f64, score: f64, action_id: usize) -> ActionDetection {
        ActionDetection {
            video_id: "v".into(),
            interval: Interval::new(start, end).unwrap(),
            verb: action_id / 300,
            noun: action_id % 300,
            action_id,
            score,
        }
    }

    #[test]
    fn presets() {
        let n = NmsConfig::noun();
        assert_eq!((n.sigma, n.min_score, n.vote_threshold), (0.6, 0.005, 0.65));
        let v = NmsConfig::verb_action();
        assert_eq!((v.sigma, v.min_score, v.vote_threshold), (0.4, 0.001, 0.75));
        assert_eq!((v.pre_nms_cap, v.max_per_video), (5000, 3000));
        assert_eq!("noun".parse::<NmsPreset>().unwrap().config(), n);
        assert_eq!("verb_action".parse::<NmsPreset>().unwrap().config(), v);
        assert!("verb".parse::<NmsPreset>().is_err());
    }

    #[test]
    fn disjoint_pass_through() {
        let dets = vec![det(0.0, 1.0, 0.9, 1), det(2.0, 3.0, 0.4, 1)];
        let out = soft_nms(&dets, &NmsConfig::verb_action());
        assert_eq!(out, dets);
    }

    #[test]
    fn full_overlap_decay() {
        let dets = vec![det(0.0, 1.0, 0.9, 1), det(0.0, 1.0, 0.5, 1)];
        let out = soft_nms(&dets, &NmsConfig::verb_action());
        assert_eq!(out.len(), 2);
        let expected = 0.5 * (-2.5f64).exp();
        assert!((out[1].score - expected).abs() < 1e-15);
        assert!((out[1].score - 0.04104).abs() < 1e-5);
    }

    #[test]
    fn half_overlap_decay() {
        // [0, 3) and [1, 4): inter 2, union 4
        let dets = vec![det(0.0, 3.0, 1.0, 1), det(1.0, 4.0, 1.0, 1)];
        let out = soft_nms(&dets, &NmsConfig::verb_action());
        assert!((out[1].score - (-0.625f64).exp()).abs() < 1e-15);
        assert!((out[1].score - 0.53526).abs() < 1e-5);
    }

    #[test]
    fn decayed_below_min_score_is_dropped() {
        let dets = vec![det(0.0, 1.0, 0.9, 1), det(0.0, 1.0, 0.02, 1)];
        // 0.02 * exp(-2.5) = 0.00164 survives min 0.001 but not 0.005
        assert_eq!(soft_nms(&dets, &NmsConfig::verb_action()).len(), 2);
        let mut strict = NmsConfig::verb_action();
        strict.min_score = 0.005;
        assert_eq!(soft_nms(&dets, &strict).len(), 1);
    }

    #[test]
    fn vote_without_neighbors_is_identity() {
        let k = det(10.0, 20.0, 0.8, 1);
        assert_eq!(boundary_vote(&k, &[det(30.0, 40.0, 0.9, 1)], 0.75), k);
        assert_eq!(boundary_vote(&k, &[], 0.75), k);
    }

    #[test]
    fn vote_weighted_average() {
        let k = det(10.0, 20.0, 0.8, 1);
        let out = boundary_vote(&k, &[det(12.0, 22.0, 0.2, 1)], 0.65);
        assert!((out.interval.start - 10.4).abs() < 1e-12);
        assert!((out.interval.end - 20.4).abs() < 1e-12);
        assert_eq!(out.score, 0.8);
        let same = boundary_vote(&k, &[det(10.0, 20.0, 0.3, 1), det(10.0, 20.0, 0.1, 1)], 0.75);
        assert_eq!(same.interval, k.interval);
    }

    #[test]
    fn voting_uses_pre_decay_scores() {
        let dets = vec![det(10.0, 20.0, 0.8, 1), det(12.0, 22.0, 0.2, 1)];
        let mut cfg = NmsConfig::verb_action();
        cfg.vote_threshold = 0.65;
        let out = soft_nms_with_voting(&dets, &cfg);
        assert!((out[0].interval.start - 10.4).abs() < 1e-12);
        assert_eq!(out[0].score, 0.8);
    }

    #[test]
    fn class_isolation_and_caps() {
        let cfg = NmsConfig::verb_action();
        let dets = vec![det(0.0, 5.0, 0.9, 605), det(0.0, 5.0, 0.8, 606)];
        let out = suppress_video(dets.clone(), &cfg, ClassKey::Action);
        assert_eq!(out, dets);

        let many: Vec<_> = (0..4000).map(|i| det(0.0, 1.0, 0.1 + i as f64 * 1e-4, i)).collect();
        let out = suppress_video(many.clone(), &cfg, ClassKey::Action);
        assert_eq!(out.len(), 3000);
        assert!(out.iter().all(|d| d.score >= 0.1 + 1000.0 * 1e-4 - 1e-12));
    }

    #[test]
    fn one_per_class_all_retained() {
        let dets: Vec<_> = (0..50).map(|i| det(0.0, 1.0, 0.5, i)).collect();
        assert_eq!(suppress_video(dets, &NmsConfig::verb_action(), ClassKey::Action).len(), 50);
    }

    #[test]
    fn regrouping_by_verb_suppresses_across_nouns() {
        // same verb (0), different nouns: duplicate under the verb key
        let dets = vec![det(0.0, 5.0, 0.9, 1), det(0.0, 5.0, 0.8, 2)];
        let out = suppress_video(dets, &NmsConfig::verb_action(), ClassKey::Verb);
        assert!(out[1].score < 0.8 * 0.1);
    }

    fn random_set() -> impl Strategy<Value = Vec<ActionDetection>> {
        proptest::collection::vec((0.0f64..50.0, 0.5f64..10.0, 0.002f64..1.0, 0usize..3), 0..40)
            .prop_map(|v| v.into_iter().map(|(s, l, sc, c)| det(s, s + l, sc, c)).collect())
    }

    proptest! {
        #[test]
        fn scores_never_increase(dets in random_set()) {
            let cfg = NmsConfig::verb_action();
            let out = suppress_video(dets.clone(), &cfg, ClassKey::Action);
            prop_assert!(out.len() <= cfg.max_per_video);
            prop_assert!(out.windows(2).all(|w| detection_order(&w[0], &w[1]) != Ordering::Greater));
            for o in &out {
                let best_original = dets
                    .iter()
                    .filter(|d| d.action_id == o.action_id)
                    .map(|d| d.score)
                    .fold(0.0, f64::max);
                prop_assert!(o.score <= best_original);
            }
        }

        #[test]
        fn classes_do_not_interact(dets in random_set()) {
            let cfg = NmsConfig::verb_action();
            let all = suppress_video(dets.clone(), &cfg, ClassKey::Action);
            for class in 0..3 {
                let only: Vec<_> = dets.iter().filter(|d| d.action_id == class).cloned().collect();
                let alone = suppress_video(only, &cfg, ClassKey::Action);
                let from_all: Vec<_> = all.iter().filter(|d| d.action_id == class).cloned().collect();
                prop_assert_eq!(alone, from_all);
            }
        }
    }
}
