//! Detection mAP over tIoU thresholds for the verb, noun and action tasks.
//!
//! Matching is greedy and one-to-one: detections are visited best first and
//! each claims the unmatched ground truth of the same video and class with
//! the highest tIoU, if that tIoU reaches the threshold. AP is the area under
//! the precision envelope (precision at each rank replaced by the best
//! precision at any later rank). Classes without ground truth are left out
//! of the class mean.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{temporal_iou, Interval};
use crate::suppression::{detection_order, ActionDetection, ClassKey};

pub const DEFAULT_TIOU_THRESHOLDS: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthInstance {
    pub video_id: String,
    pub interval: Interval,
    pub verb: usize,
    pub noun: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub thresholds: Vec<f64>,
    pub task: ClassKey,
}

impl EvalConfig {
    pub fn new(thresholds: Vec<f64>, task: ClassKey) -> Result<Self> {
        if thresholds.is_empty() {
            return Err(Error::InvalidConfig("at least one tIoU threshold is required".into()));
        }
        if thresholds.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
            return Err(Error::InvalidConfig("tIoU thresholds must lie in (0, 1]".into()));
        }
        if thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("tIoU thresholds must be strictly increasing".into()));
        }
        Ok(Self { thresholds, task })
    }

    pub fn for_task(task: ClassKey) -> Self {
        Self {
            thresholds: DEFAULT_TIOU_THRESHOLDS.to_vec(),
            task,
        }
    }
}

/// A class label under a task. Unused factors are masked so that, for
/// example, all verbs of the same index compare equal in the verb task.
pub type ClassLabel = (Option<usize>, Option<usize>);

pub fn class_label(task: ClassKey, verb: usize, noun: usize) -> ClassLabel {
    match task {
        ClassKey::Verb => (Some(verb), None),
        ClassKey::Noun => (None, Some(noun)),
        ClassKey::Action => (Some(verb), Some(noun)),
    }
}

/// True/false-positive flag for each detection, in the order given.
/// Detections are expected to be sorted best first.
pub fn match_detections(
    dets: &[ActionDetection],
    gts: &[GroundTruthInstance],
    tau: f64,
    task: ClassKey,
) -> Vec<bool> {
    let mut by_key: HashMap<(&str, ClassLabel), Vec<usize>> = HashMap::new();
    for (i, g) in gts.iter().enumerate() {
        by_key
            .entry((g.video_id.as_str(), class_label(task, g.verb, g.noun)))
            .or_default()
            .push(i);
    }
    let mut matched = vec![false; gts.len()];
    dets.iter()
        .map(|d| {
            let Some(candidates) = by_key.get(&(d.video_id.as_str(), class_label(task, d.verb, d.noun))) else {
                return false;
            };
            let mut best: Option<(usize, f64)> = None;
            for &g in candidates {
                if matched[g] {
                    continue;
                }
                let iou = temporal_iou(&d.interval, &gts[g].interval);
                if best.is_none_or(|(_, b)| iou > b) {
                    best = Some((g, iou));
                }
            }
            match best {
                Some((g, iou)) if iou >= tau => {
                    matched[g] = true;
                    true
                }
                _ => false,
            }
        })
        .collect()
}

/// Interpolated AP of a ranked list of TP/FP flags against `num_gt`
/// ground-truth instances.
pub fn average_precision(flags: &[bool], num_gt: usize) -> f64 {
    if num_gt == 0 {
        return 0.0;
    }
    let mut tp = 0usize;
    let mut precision: Vec<f64> = flags
        .iter()
        .enumerate()
        .map(|(rank, &hit)| {
            tp += usize::from(hit);
            tp as f64 / (rank + 1) as f64
        })
        .collect();
    for i in (0..precision.len().saturating_sub(1)).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    let area: f64 = flags
        .iter()
        .zip(&precision)
        .filter(|(hit, _)| **hit)
        .map(|(_, p)| *p)
        .sum();
    area / num_gt as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapReport {
    pub task: ClassKey,
    pub thresholds: Vec<f64>,
    /// mAP at each threshold, aligned with `thresholds`.
    pub map: Vec<f64>,
    /// Unweighted mean over thresholds.
    pub average: f64,
    /// Number of classes with at least one ground-truth instance.
    pub num_classes: usize,
}

pub fn mean_ap(dets: &[ActionDetection], gts: &[GroundTruthInstance], cfg: &EvalConfig) -> MapReport {
    let task = cfg.task;
    let mut gt_by_class: BTreeMap<ClassLabel, Vec<GroundTruthInstance>> = BTreeMap::new();
    for g in gts {
        gt_by_class
            .entry(class_label(task, g.verb, g.noun))
            .or_default()
            .push(g.clone());
    }
    let mut det_by_class: HashMap<ClassLabel, Vec<ActionDetection>> = HashMap::new();
    for d in dets {
        let label = class_label(task, d.verb, d.noun);
        if gt_by_class.contains_key(&label) {
            det_by_class.entry(label).or_default().push(d.clone());
        }
    }
    for v in det_by_class.values_mut() {
        v.sort_by(detection_order);
    }

    let num_classes = gt_by_class.len();
    let map: Vec<f64> = cfg
        .thresholds
        .iter()
        .map(|&tau| {
            if num_classes == 0 {
                return 0.0;
            }
            let total: f64 = gt_by_class
                .iter()
                .map(|(label, class_gts)| {
                    let class_dets = det_by_class.get(label).map_or(&[][..], Vec::as_slice);
                    let flags = match_detections(class_dets, class_gts, tau, task);
                    average_precision(&flags, class_gts.len())
                })
                .sum();
            total / num_classes as f64
        })
        .collect();
    let average = map.iter().sum::<f64>() / map.len() as f64;
    MapReport {
        task,
        thresholds: cfg.thresholds.clone(),
        map,
        average,
        num_classes,
    }
}

/// Verb, noun and action reports over the same thresholds.
pub fn evaluate_all(dets: &[ActionDetection], gts: &[GroundTruthInstance], thresholds: &[f64]) -> Result<Vec<MapReport>> {
    ClassKey::ALL
        .iter()
        .map(|&task| {
            let cfg = EvalConfig::new(thresholds.to_vec(), task)?;
            Ok(mean_ap(dets, gts, &cfg))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gt(video: &str, s: f64, e: f64, verb: usize, noun: usize) -> GroundTruthInstance {
        GroundTruthInstance {
            video_id: video.into(),
            interval: Interval::new(s, e).unwrap(),
            verb,
            noun,
        }
    }

    fn det(video: &str, s: f64, e: f64, verb: usize, noun: usize, score: f64) -> ActionDetection {
        ActionDetection {
            video_id: video.into(),
            interval: Interval::new(s, e).unwrap(),
            verb,
            noun,
            action_id: 300 * verb + noun,
            score,
        }
    }

    #[test]
    fn exact_hit_is_tp() {
        let flags = match_detections(&[det("a", 1.0, 2.0, 0, 0, 0.9)], &[gt("a", 1.0, 2.0, 0, 0)], 1.0, ClassKey::Action);
        assert_eq!(flags, vec![true]);
    }

    #[test]
    fn one_to_one() {
        let dets = [det("a", 1.0, 2.0, 0, 0, 0.9), det("a", 1.0, 2.1, 0, 0, 0.8)];
        let flags = match_detections(&dets, &[gt("a", 1.0, 2.0, 0, 0)], 0.5, ClassKey::Action);
        assert_eq!(flags, vec![true, false]);
    }

    #[test]
    fn wrong_class_or_video_is_fp() {
        let g = [gt("a", 1.0, 2.0, 0, 0)];
        assert_eq!(match_detections(&[det("a", 1.0, 2.0, 0, 1, 0.9)], &g, 0.1, ClassKey::Action), vec![false]);
        assert_eq!(match_detections(&[det("b", 1.0, 2.0, 0, 0, 0.9)], &g, 0.1, ClassKey::Action), vec![false]);
        // same verb, wrong noun: right for the verb task
        assert_eq!(match_detections(&[det("a", 1.0, 2.0, 0, 1, 0.9)], &g, 0.1, ClassKey::Verb), vec![true]);
        assert_eq!(match_detections(&[det("a", 1.0, 2.0, 0, 1, 0.9)], &g, 0.1, ClassKey::Noun), vec![false]);
    }

    #[test]
    fn prefers_highest_overlap() {
        let gts = [gt("a", 0.0, 10.0, 0, 0), gt("a", 2.0, 6.0, 0, 0)];
        let flags = match_detections(
            &[det("a", 2.0, 6.0, 0, 0, 0.9), det("a", 0.0, 10.0, 0, 0, 0.8)],
            &gts,
            0.5,
            ClassKey::Action,
        );
        assert_eq!(flags, vec![true, true]);
    }

    #[test]
    fn ap_examples() {
        assert_eq!(average_precision(&[true], 1), 1.0);
        assert_eq!(average_precision(&[false], 1), 0.0);
        let ap = average_precision(&[true, false, true], 2);
        assert!((ap - (0.5 + 0.5 * 2.0 / 3.0)).abs() < 1e-15);
        assert!((ap - 0.8333).abs() < 1e-4);
        assert_eq!(average_precision(&[], 3), 0.0);
        assert_eq!(average_precision(&[true], 0), 0.0);
    }

    #[test]
    fn empty_and_perfect_detections() {
        let gts = vec![gt("a", 0.0, 1.0, 0, 0), gt("a", 5.0, 9.0, 1, 2), gt("b", 3.0, 4.0, 2, 2)];
        for task in ClassKey::ALL {
            let r = mean_ap(&[], &gts, &EvalConfig::for_task(task));
            assert!(r.map.iter().all(|&m| m == 0.0));
            let perfect: Vec<_> = gts
                .iter()
                .map(|g| det(&g.video_id, g.interval.start, g.interval.end, g.verb, g.noun, 0.5))
                .collect();
            let r = mean_ap(&perfect, &gts, &EvalConfig::for_task(task));
            assert!(r.map.iter().all(|&m| m == 1.0), "{task}: {:?}", r.map);
            assert_eq!(r.average, 1.0);
        }
    }

    #[test]
    fn shifted_detection_drops_only_at_half() {
        // class 0: [0,10) detected at [x, x+10) with tIoU 0.45
        // tIoU = (10 - x) / (10 + x) = 0.45  =>  x = 5.5 / 1.45
        let x = 5.5 / 1.45;
        let gts = vec![gt("a", 0.0, 10.0, 0, 0), gt("a", 20.0, 30.0, 1, 1), gt("a", 40.0, 50.0, 2, 2)];
        let dets = vec![
            det("a", x, x + 10.0, 0, 0, 0.9),
            det("a", 20.0, 30.0, 1, 1, 0.8),
            det("a", 40.0, 50.0, 2, 2, 0.7),
            det("a", 60.0, 61.0, 2, 2, 0.95),
        ];
        assert!((temporal_iou(&dets[0].interval, &gts[0].interval) - 0.45).abs() < 1e-12);
        let r = mean_ap(&dets, &gts, &EvalConfig::for_task(ClassKey::Action));
        // classes 0 and 1 perfect; class 2 has an FP ranked above its TP (AP 0.5)
        let low = (1.0 + 1.0 + 0.5) / 3.0;
        for &m in &r.map[..4] {
            assert!((m - low).abs() < 1e-15);
        }
        assert!((r.map[4] - (0.0 + 1.0 + 0.5) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn eval_config_validation() {
        assert!(EvalConfig::new(vec![0.5, 0.3], ClassKey::Action).is_err());
        assert!(EvalConfig::new(vec![0.0, 0.3], ClassKey::Action).is_err());
        assert!(EvalConfig::new(vec![], ClassKey::Action).is_err());
        assert!(EvalConfig::new(vec![0.3, 1.0], ClassKey::Action).is_ok());
    }

    proptest! {
        #[test]
        fn ap_depends_only_on_order(
            raw in proptest::collection::vec((0.0f64..20.0, 0.5f64..5.0, 0usize..2, 0.01f64..1.0), 1..10),
        ) {
            let gts = vec![gt("a", 2.0, 6.0, 0, 0), gt("a", 10.0, 14.0, 1, 1), gt("a", 15.0, 17.0, 0, 0)];
            let dets: Vec<_> = raw.iter().map(|&(s, l, c, sc)| det("a", s, s + l, c, c, sc)).collect();
            let transformed: Vec<_> = dets
                .iter()
                .map(|d| ActionDetection { score: d.score.powi(3) * 0.5 + 0.1, ..d.clone() })
                .collect();
            let cfg = EvalConfig::for_task(ClassKey::Action);
            let a = mean_ap(&dets, &gts, &cfg);
            let b = mean_ap(&transformed, &gts, &cfg);
            prop_assert_eq!(a.map, b.map);
        }

        #[test]
        fn trailing_zero_overlap_fp_never_helps(flags in proptest::collection::vec(any::<bool>(), 0..15), extra in 0usize..3) {
            let num_gt = flags.iter().filter(|&&f| f).count() + extra;
            let mut longer = flags.clone();
            longer.push(false);
            prop_assert!(average_precision(&longer, num_gt) <= average_precision(&flags, num_gt));
        }
    }
}
