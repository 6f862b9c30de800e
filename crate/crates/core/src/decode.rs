//! Anchor-free head decoding and per-window pooling.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::timeline::Window;

/// Strides of the seven pyramid levels.
pub const PYRAMID_STRIDES: [usize; 7] = [1, 2, 4, 8, 16, 32, 64];
pub const DEFAULT_PRE_NMS_TOP_K: usize = 5000;

/// Output of one pyramid level of a stream's anchor-free head.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadOutput {
    pub level: usize,
    pub level_stride: usize,
    /// Per-point class probabilities.
    pub point_scores: Vec<Vec<f64>>,
    /// Per-point `(to_start, to_end)` distances, in units of `level_stride`.
    pub point_distances: Vec<(f64, f64)>,
    pub validity_mask: Vec<bool>,
}

impl HeadOutput {
    pub fn validate(&self) -> Result<()> {
        let n = self.point_scores.len();
        for len in [self.point_distances.len(), self.validity_mask.len()] {
            if len != n {
                return Err(Error::LengthMismatch { expected: n, found: len });
            }
        }
        if self.level_stride == 0 {
            return Err(Error::InvalidConfig("level stride must be >= 1".into()));
        }
        if self
            .point_scores
            .iter()
            .flatten()
            .any(|p| !(0.0..=1.0).contains(p))
        {
            return Err(Error::InvalidConfig("point scores must lie in [0, 1]".into()));
        }
        if self
            .point_distances
            .iter()
            .any(|&(s, e)| !(s >= 0.0 && e >= 0.0))
        {
            return Err(Error::InvalidConfig("regression distances must be >= 0".into()));
        }
        Ok(())
    }
}

/// One stream's candidate: an interval in feature coordinates plus the full
/// class-score vector of that stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamProposal {
    pub boundary: Interval,
    pub scores: Vec<f64>,
    pub source_window: Window,
}

impl StreamProposal {
    pub fn max_score(&self) -> f64 {
        self.scores.iter().copied().fold(0.0, f64::max)
    }
}

/// Decodes every valid point of `head` into a proposal in window-local
/// feature coordinates.
pub fn decode_anchor_free(head: &HeadOutput, window: Window) -> Result<Vec<StreamProposal>> {
    head.validate()?;
    let stride = head.level_stride as f64;
    let proposals = head
        .point_scores
        .iter()
        .zip(&head.point_distances)
        .zip(&head.validity_mask)
        .enumerate()
        .filter_map(|(t, ((scores, &(d_s, d_e)), &valid))| {
            if !valid || d_s + d_e <= 0.0 {
                return None;
            }
            let location = (t * head.level_stride) as f64;
            let boundary = Interval::new(location - d_s * stride, location + d_e * stride).ok()?;
            Some(StreamProposal {
                boundary,
                scores: scores.clone(),
                source_window: window,
            })
        })
        .collect();
    Ok(proposals)
}

/// Drops proposals whose best class score is below `min_score` and keeps the
/// `top_k` best. Ties go to the earlier start, then to the earlier input
/// position.
pub fn pre_nms_select(proposals: Vec<StreamProposal>, min_score: f64, top_k: usize) -> Vec<StreamProposal> {
    let mut keyed: Vec<(f64, usize, StreamProposal)> = proposals
        .into_iter()
        .enumerate()
        .map(|(i, p)| (p.max_score(), i, p))
        .filter(|(s, _, _)| *s >= min_score)
        .collect();
    keyed.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| {
                a.2.boundary
                    .start
                    .partial_cmp(&b.2.boundary.start)
                    .unwrap_or(Ordering::Equal)
            })
            .then(a.1.cmp(&b.1))
    });
    keyed.truncate(top_k);
    keyed.into_iter().map(|(_, _, p)| p).collect()
}

/// Moves each window's proposals into the global feature frame. Overlapping
/// windows may yield duplicates; those are left for suppression.
///
/// Output order depends only on window starts, not on input order.
pub fn pool_windows(per_window: Vec<(Window, Vec<StreamProposal>)>) -> Result<Vec<StreamProposal>> {
    let mut by_window: BTreeMap<Window, Vec<StreamProposal>> = BTreeMap::new();
    for (window, props) in per_window {
        by_window.entry(window).or_default().extend(props);
    }
    let mut pooled = Vec::new();
    for (window, props) in by_window {
        for mut p in props {
            if p.source_window != window {
                return Err(Error::WindowMismatch {
                    start_feature: p.source_window.start_feature,
                });
            }
            p.boundary = p.boundary.shift(window.start_feature as f64);
            pooled.push(p);
        }
    }
    Ok(pooled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const W0: Window = Window {
        start_feature: 0,
        length_features: 4608,
    };

    fn head(stride: usize, t_len: usize, at: usize, d: (f64, f64)) -> HeadOutput {
        let mut distances = vec![(0.0, 0.0); t_len];
        distances[at] = d;
        HeadOutput {
            level: 1,
            level_stride: stride,
            point_scores: vec![vec![0.2, 0.7]; t_len],
            point_distances: distances,
            validity_mask: vec![true; t_len],
        }
    }

    fn prop(start: f64, end: f64, scores: Vec<f64>) -> StreamProposal {
        StreamProposal {
            boundary: Interval::new(start, end).unwrap(),
            scores,
            source_window: W0,
        }
    }

    #[test]
    fn decodes_stride_four() {
        let out = decode_anchor_free(&head(4, 30, 25, (2.0, 3.0)), W0).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].boundary, Interval { start: 92.0, end: 112.0 });
        assert_eq!(out[0].scores, vec![0.2, 0.7]);
    }

    #[test]
    fn decodes_stride_one() {
        let out = decode_anchor_free(&head(1, 12, 10, (1.0, 1.0)), W0).unwrap();
        assert_eq!(out[0].boundary, Interval { start: 9.0, end: 11.0 });
    }

    #[test]
    fn zero_distance_and_masked_points_are_skipped() {
        assert!(decode_anchor_free(&head(4, 5, 2, (0.0, 0.0)), W0).unwrap().is_empty());
        let mut h = head(2, 5, 2, (1.0, 1.0));
        h.validity_mask[2] = false;
        assert!(decode_anchor_free(&h, W0).unwrap().is_empty());
    }

    #[test]
    fn rejects_ragged_head() {
        let mut h = head(2, 5, 2, (1.0, 1.0));
        h.validity_mask.pop();
        assert!(matches!(
            decode_anchor_free(&h, W0),
            Err(Error::LengthMismatch { expected: 5, found: 4 })
        ));
    }

    #[test]
    fn select_thresholds_and_orders() {
        let ps = vec![
            prop(0.0, 1.0, vec![0.9]),
            prop(0.0, 1.0, vec![0.004]),
            prop(0.0, 1.0, vec![0.5]),
        ];
        let out = pre_nms_select(ps, 0.005, 5000);
        let scores: Vec<_> = out.iter().map(|p| p.max_score()).collect();
        assert_eq!(scores, vec![0.9, 0.5]);
        assert!(pre_nms_select(vec![], 0.005, 5000).is_empty());
    }

    #[test]
    fn select_caps_at_top_k() {
        let ps: Vec<_> = (0..6000)
            .map(|i| prop(i as f64, i as f64 + 1.0, vec![0.01 + (i as f64) / 10_000.0]))
            .collect();
        let mut all: Vec<f64> = ps.iter().map(|p| p.max_score()).collect();
        all.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let kth = all[4999];
        let out = pre_nms_select(ps, 0.005, 5000);
        assert_eq!(out.len(), 5000);
        assert!(out.iter().all(|p| p.max_score() >= kth));
    }

    #[test]
    fn select_ties_prefer_earlier_start_then_input_order() {
        let ps = vec![
            prop(5.0, 6.0, vec![0.5]),
            prop(1.0, 6.0, vec![0.5]),
            prop(1.0, 9.0, vec![0.5]),
        ];
        let out = pre_nms_select(ps, 0.0, 10);
        let bounds: Vec<_> = out.iter().map(|p| (p.boundary.start, p.boundary.end)).collect();
        assert_eq!(bounds, vec![(1.0, 6.0), (1.0, 9.0), (5.0, 6.0)]);
    }

    #[test]
    fn pooling_shifts_by_window_start() {
        let w1 = Window { start_feature: 2304, length_features: 4608 };
        let mut p1 = prop(10.0, 20.0, vec![0.5]);
        p1.source_window = w1;
        let p0 = prop(10.0, 20.0, vec![0.5]);
        let pooled = pool_windows(vec![(w1, vec![p1.clone()]), (W0, vec![p0.clone()])]).unwrap();
        assert_eq!(pooled.len(), 2);
        assert_eq!(pooled[0].boundary, Interval { start: 10.0, end: 20.0 });
        assert_eq!(pooled[1].boundary, Interval { start: 2314.0, end: 2324.0 });
    }

    #[test]
    fn pooling_keeps_duplicates_from_overlapping_windows() {
        let w1 = Window { start_feature: 0, length_features: 100 };
        let w2 = Window { start_feature: 0, length_features: 200 };
        let mut a = prop(1.0, 2.0, vec![0.3]);
        a.source_window = w1;
        let mut b = a.clone();
        b.source_window = w2;
        let pooled = pool_windows(vec![(w1, vec![a]), (w2, vec![b])]).unwrap();
        assert_eq!(pooled.len(), 2);
        assert_eq!(pooled[0].boundary, pooled[1].boundary);
    }

    #[test]
    fn pooling_rejects_foreign_window() {
        let other = Window { start_feature: 99, length_features: 10 };
        let mut p = prop(1.0, 2.0, vec![0.3]);
        p.source_window = other;
        assert_eq!(
            pool_windows(vec![(W0, vec![p])]),
            Err(Error::WindowMismatch { start_feature: 99 })
        );
    }

    proptest! {
        #[test]
        fn decoded_length_is_distance_sum_times_stride(
            level in 0usize..7, t in 0usize..64, ds in 0.0f64..50.0, de in 0.01f64..50.0
        ) {
            let stride = PYRAMID_STRIDES[level];
            let out = decode_anchor_free(&head(stride, 64, t, (ds, de)), W0).unwrap();
            prop_assert_eq!(out.len(), 1);
            let expected = (ds + de) * stride as f64;
            prop_assert!((out[0].boundary.length() - expected).abs() <= 1e-9 * expected.max(1.0));
        }

        #[test]
        fn selection_is_bounded_and_sorted(scores in proptest::collection::vec(0.0f64..1.0, 0..200), k in 1usize..50) {
            let ps: Vec<_> = scores.iter().enumerate().map(|(i, &s)| prop(i as f64, i as f64 + 1.0, vec![s])).collect();
            let n = ps.len();
            let out = pre_nms_select(ps, 0.1, k);
            prop_assert!(out.len() <= n.min(k));
            prop_assert!(out.windows(2).all(|w| w[0].max_score() >= w[1].max_score()));
        }

        #[test]
        fn pooling_preserves_lengths(start in 0usize..100_000, s in 0.0f64..1000.0, len in 0.01f64..100.0) {
            let w = Window { start_feature: start, length_features: 4608 };
            let mut p = prop(s, s + len, vec![0.5]);
            p.source_window = w;
            let pooled = pool_windows(vec![(w, vec![p.clone()])]).unwrap();
            prop_assert!((pooled[0].boundary.length() - p.boundary.length()).abs() < 1e-6);
        }
    }
}
