//! Boundary fusion for composed noun-verb hypotheses.
//!
//! Dynamic weighted fusion takes each stream's peak class probability as its
//! confidence, normalizes the pair into weights, and blends the two
//! intervals coordinate-wise:
//!
//! ```text
//! C_n = max_p P_n[p]              C_v = max_q P_v[q]
//! W_n = C_n / (C_n + C_v + eps)   W_v = C_v / (C_n + C_v + eps)
//! fused = W_n * b_n + W_v * b_v
//! ```
//!
//! Only the interval changes. The action score is never touched here.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;

pub const DEFAULT_FUSION_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionMode {
    /// Confidence-weighted interpolation.
    #[default]
    Dwf,
    /// Equal-weight average of the two intervals.
    Mean,
}

impl FromStr for FusionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dwf" => Ok(FusionMode::Dwf),
            "mean" => Ok(FusionMode::Mean),
            other => Err(Error::ConfigValue {
                key: "fusion_mode".into(),
                message: format!("expected `dwf` or `mean`, got `{other}`"),
            }),
        }
    }
}

impl fmt::Display for FusionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FusionMode::Dwf => "dwf",
            FusionMode::Mean => "mean",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionWeights {
    pub noun_confidence: f64,
    pub verb_confidence: f64,
    pub noun_weight: f64,
    pub verb_weight: f64,
    pub epsilon: f64,
}

impl FusionWeights {
    /// Weights set by hand, bypassing the confidence normalization.
    pub fn manual(noun_weight: f64, verb_weight: f64) -> Self {
        Self {
            noun_confidence: noun_weight,
            verb_confidence: verb_weight,
            noun_weight,
            verb_weight,
            epsilon: 0.0,
        }
    }

    /// The equal-weight baseline expressed as weights.
    pub fn mean() -> Self {
        Self::manual(0.5, 0.5)
    }
}

/// Peak class probability of each stream.
pub fn stream_confidences(noun_scores: &[f64], verb_scores: &[f64]) -> Result<(f64, f64)> {
    if noun_scores.is_empty() || verb_scores.is_empty() {
        return Err(Error::EmptyVector);
    }
    let peak = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((peak(noun_scores), peak(verb_scores)))
}

pub fn dwf_weights(noun_confidence: f64, verb_confidence: f64, epsilon: f64) -> FusionWeights {
    debug_assert!(noun_confidence >= 0.0 && verb_confidence >= 0.0 && epsilon > 0.0);
    let denom = noun_confidence + verb_confidence + epsilon;
    FusionWeights {
        noun_confidence,
        verb_confidence,
        noun_weight: noun_confidence / denom,
        verb_weight: verb_confidence / denom,
        epsilon,
    }
}

/// `W_n * b_n + W_v * b_v`, applied to start and end independently.
pub fn fuse_boundaries(noun: &Interval, verb: &Interval, weights: &FusionWeights) -> Result<Interval> {
    let start = weights.noun_weight * noun.start + weights.verb_weight * verb.start;
    let end = weights.noun_weight * noun.end + weights.verb_weight * verb.end;
    Interval::new(start, end)
}

pub fn hard_mean_fusion(noun: &Interval, verb: &Interval) -> Interval {
    Interval {
        start: 0.5 * (noun.start + verb.start),
        end: 0.5 * (noun.end + verb.end),
    }
}

/// Fuses one aligned proposal pair under `mode`.
pub fn fuse_pair(
    mode: FusionMode,
    noun: &Interval,
    verb: &Interval,
    noun_scores: &[f64],
    verb_scores: &[f64],
    epsilon: f64,
) -> Result<Interval> {
    match mode {
        FusionMode::Mean => Ok(hard_mean_fusion(noun, verb)),
        FusionMode::Dwf => {
            let (cn, cv) = stream_confidences(noun_scores, verb_scores)?;
            fuse_boundaries(noun, verb, &dwf_weights(cn, cv, epsilon))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{FromPrimitive, ToPrimitive};
    use proptest::prelude::*;

    fn iv(s: f64, e: f64) -> Interval {
        Interval::new(s, e).unwrap()
    }

    fn rat(num: i64, den: i64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    #[test]
    fn confidences_are_maxima() {
        assert_eq!(stream_confidences(&[0.1, 0.8, 0.3], &[0.4, 0.2]).unwrap(), (0.8, 0.4));
        assert_eq!(stream_confidences(&[0.0; 4], &[0.0; 2]).unwrap(), (0.0, 0.0));
        assert_eq!(stream_confidences(&[0.5], &[0.5]).unwrap(), (0.5, 0.5));
        assert_eq!(stream_confidences(&[], &[0.5]), Err(Error::EmptyVector));
    }

    #[test]
    fn weights_match_exact_rationals() {
        let w = dwf_weights(0.8, 0.2, 1e-6);
        // 0.8 / 1.000001 and 0.2 / 1.000001
        let denom = rat(1_000_001, 1_000_000);
        let wn = (rat(8, 10) / &denom).to_f64().unwrap();
        let wv = (rat(2, 10) / &denom).to_f64().unwrap();
        assert!((w.noun_weight - wn).abs() < 1e-12);
        assert!((w.verb_weight - wv).abs() < 1e-12);
        assert!((w.noun_weight - 0.7999992).abs() < 1e-9);
        assert!((w.verb_weight - 0.1999998).abs() < 1e-9);
    }

    #[test]
    fn symmetric_and_zero_confidence_weights() {
        let w = dwf_weights(0.3, 0.3, 1e-6);
        assert_eq!(w.noun_weight, w.verb_weight);
        assert!((w.noun_weight - 0.3 / 0.600001).abs() < 1e-15);
        let z = dwf_weights(0.0, 0.0, 1e-6);
        assert_eq!((z.noun_weight, z.verb_weight), (0.0, 0.0));
        assert!(fuse_boundaries(&iv(10.0, 20.0), &iv(14.0, 24.0), &z).is_err());
    }

    #[test]
    fn asymmetric_fusion_against_rational_oracle() {
        let w = dwf_weights(0.8, 0.2, 1e-6);
        let fused = fuse_boundaries(&iv(10.0, 20.0), &iv(14.0, 24.0), &w).unwrap();
        let denom = rat(1_000_001, 1_000_000);
        let s = ((rat(8, 10) * rat(10, 1) + rat(2, 10) * rat(14, 1)) / &denom).to_f64().unwrap();
        let e = ((rat(8, 10) * rat(20, 1) + rat(2, 10) * rat(24, 1)) / &denom).to_f64().unwrap();
        assert!((fused.start - s).abs() < 1e-12);
        assert!((fused.end - e).abs() < 1e-12);
        // distance to the eps -> 0 limit is |b| * eps / (1 + eps): 1.08e-5 and 2.08e-5
        assert!((fused.start - 10.8).abs() < 1.1e-5);
        assert!((fused.end - 20.8).abs() < 2.1e-5);
    }

    #[test]
    fn equal_confidence_is_the_scaled_mean() {
        for c in [0.05, 0.3, 1.0] {
            let fused = fuse_boundaries(&iv(10.0, 20.0), &iv(14.0, 24.0), &dwf_weights(c, c, 1e-6)).unwrap();
            let scale = 2.0 * c / (2.0 * c + 1e-6);
            assert!((fused.start - 12.0 * scale).abs() < 1e-12);
            assert!((fused.end - 22.0 * scale).abs() < 1e-12);
            assert!((fused.end - 22.0).abs() <= 22.0 * 1e-6 / (2.0 * c) + 1e-12);
        }
    }

    #[test]
    fn manual_full_authority() {
        let fused = fuse_boundaries(&iv(10.0, 20.0), &iv(14.0, 24.0), &FusionWeights::manual(1.0, 0.0)).unwrap();
        assert_eq!(fused, iv(10.0, 20.0));
    }

    #[test]
    fn hard_mean() {
        assert_eq!(hard_mean_fusion(&iv(10.0, 20.0), &iv(14.0, 24.0)), iv(12.0, 22.0));
        assert_eq!(hard_mean_fusion(&iv(3.0, 4.5), &iv(3.0, 4.5)), iv(3.0, 4.5));
        assert_eq!(hard_mean_fusion(&iv(0.0, 10.0), &iv(10.0, 20.0)), iv(5.0, 15.0));
    }

    #[test]
    fn fusion_mode_parsing() {
        assert_eq!("dwf".parse::<FusionMode>().unwrap(), FusionMode::Dwf);
        assert_eq!("mean".parse::<FusionMode>().unwrap(), FusionMode::Mean);
        assert!("avg".parse::<FusionMode>().is_err());
        assert_eq!(FusionMode::default(), FusionMode::Dwf);
    }

    prop_compose! {
        fn interval()(s in -100.0f64..100.0, len in 0.1f64..50.0) -> Interval {
            iv(s, s + len)
        }
    }

    proptest! {
        #[test]
        fn weights_sum_below_one(cn in 0.0f64..1.0, cv in 0.0f64..1.0) {
            let w = dwf_weights(cn, cv, 1e-6);
            prop_assert!(w.noun_weight >= 0.0 && w.verb_weight >= 0.0);
            let sum = w.noun_weight + w.verb_weight;
            prop_assert!(sum <= 1.0);
            let target = BigRational::from_f64(cn + cv).unwrap()
                / (BigRational::from_f64(cn + cv).unwrap() + BigRational::from_f64(1e-6).unwrap());
            prop_assert!((sum - target.to_f64().unwrap()).abs() < 1e-12);
        }

        #[test]
        fn fused_lies_between_inputs(a in interval(), b in interval(), cn in 0.01f64..1.0, cv in 0.01f64..1.0) {
            prop_assume!(dwf_weights(cn, cv, 1e-12).noun_weight * a.length()
                + dwf_weights(cn, cv, 1e-12).verb_weight * b.length() > 1e-9);
            let f = fuse_boundaries(&a, &b, &dwf_weights(cn, cv, 1e-12)).unwrap();
            let tol = 1e-9;
            prop_assert!(f.start >= a.start.min(b.start) - tol && f.start <= a.start.max(b.start) + tol);
            prop_assert!(f.end >= a.end.min(b.end) - tol && f.end <= a.end.max(b.end) + tol);
        }

        #[test]
        fn swapping_streams_is_symmetric(a in interval(), b in interval(), cn in 0.01f64..1.0, cv in 0.01f64..1.0) {
            let f1 = fuse_boundaries(&a, &b, &dwf_weights(cn, cv, 1e-6)).unwrap();
            let f2 = fuse_boundaries(&b, &a, &dwf_weights(cv, cn, 1e-6)).unwrap();
            prop_assert!((f1.start - f2.start).abs() < 1e-12 * (1.0 + f1.start.abs()));
            prop_assert!((f1.end - f2.end).abs() < 1e-12 * (1.0 + f1.end.abs()));
        }

        #[test]
        fn more_noun_confidence_moves_toward_noun(
            a in interval(), shift in 0.5f64..20.0, cn in 0.01f64..0.9, bump in 0.01f64..0.1, cv in 0.01f64..1.0
        ) {
            let b = a.shift(shift);
            let f1 = fuse_boundaries(&a, &b, &dwf_weights(cn, cv, 1e-6)).unwrap();
            let f2 = fuse_boundaries(&a, &b, &dwf_weights(cn + bump, cv, 1e-6)).unwrap();
            prop_assert!((f2.start - a.start).abs() < (f1.start - a.start).abs());
            prop_assert!((f2.end - a.end).abs() < (f1.end - a.end).abs());
        }
    }
}
