//! Seeded two-stream boundary simulator.
//!
//! Every segment draws an independent confidence for each stream, and each
//! stream perturbs the true boundary with Gaussian noise whose standard
//! deviation falls linearly as confidence rises:
//! `sigma(c) = sigma_max * (1 - c) + sigma_min`. That is the regime where
//! confidence-weighted fusion should beat the plain average, and
//! [`compare_fusion`] measures by how much.
//!
//! Segment `i` draws from its own ChaCha stream derived from the master seed,
//! so results do not depend on generation order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::composition::VocabSpec;
use crate::decode::StreamProposal;
use crate::error::{Error, Result};
use crate::evaluation::GroundTruthInstance;
use crate::fusion::{dwf_weights, fuse_boundaries, hard_mean_fusion, stream_confidences, DEFAULT_FUSION_EPSILON};
use crate::interval::Interval;
use crate::io::proposals::ProposalRecord;
use crate::timeline::{FeatureGrid, Window};

/// Redraws allowed per segment before the configuration is declared unable
/// to produce in-bounds boundaries.
const MAX_RESAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub num_segments: usize,
    pub num_videos: usize,
    pub video_length_s: f64,
    pub min_duration_s: f64,
    pub max_duration_s: f64,
    /// Per-stream confidences are drawn uniformly from `[conf_lo, conf_hi]`.
    pub conf_lo: f64,
    pub conf_hi: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub vocab: VocabSpec,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    /// The asymmetric regime: confidences in `[0.1, 0.95]`, noise std from
    /// 0.05 s (fully confident) up to 1.05 s.
    fn default() -> Self {
        Self {
            num_segments: 10_000,
            num_videos: 1,
            video_length_s: 1200.0,
            min_duration_s: 1.0,
            max_duration_s: 8.0,
            conf_lo: 0.1,
            conf_hi: 0.95,
            sigma_min: 0.05,
            sigma_max: 1.0,
            vocab: VocabSpec::default(),
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.num_segments == 0 || self.num_videos == 0 {
            return bad("num_segments and num_videos must be >= 1");
        }
        if !(0.0 <= self.conf_lo && self.conf_lo <= self.conf_hi && self.conf_hi <= 1.0) {
            return bad("confidence range must satisfy 0 <= lo <= hi <= 1");
        }
        if !(self.sigma_min >= 0.0 && self.sigma_max >= self.sigma_min) {
            return bad("noise law must satisfy 0 <= sigma_min <= sigma_max");
        }
        if !(self.min_duration_s > 0.0 && self.max_duration_s >= self.min_duration_s) {
            return bad("durations must satisfy 0 < min <= max");
        }
        if !(self.video_length_s > self.max_duration_s + 2.0) {
            return bad("video_length_s must exceed max_duration_s by at least 2 s");
        }
        if self.vocab.noun_count == 0 || self.vocab.verb_count == 0 {
            return bad("vocabulary sizes must be >= 1");
        }
        Ok(())
    }

    pub fn noise_std(&self, confidence: f64) -> f64 {
        self.sigma_max * (1.0 - confidence) + self.sigma_min
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSegment {
    pub video_id: String,
    pub ground_truth: Interval,
    pub verb: usize,
    pub noun: usize,
    /// Boundaries in seconds.
    pub noun_stream: StreamProposal,
    pub verb_stream: StreamProposal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub segments: Vec<SimSegment>,
}

pub fn video_name(index: usize) -> String {
    format!("sim_{index:04}")
}

/// Score vector of length `len` whose maximum is exactly `confidence`, on
/// `true_class`. The remaining mass `1 - confidence` is spread evenly over
/// the other classes, capped at `confidence`.
pub fn confidence_scores(len: usize, true_class: usize, confidence: f64) -> Vec<f64> {
    let rest = if len > 1 {
        ((1.0 - confidence) / (len - 1) as f64).min(confidence)
    } else {
        0.0
    };
    let mut v = vec![rest; len];
    v[true_class] = confidence;
    v
}

fn noisy_copy(
    rng: &mut ChaCha8Rng,
    truth: &Interval,
    std: f64,
    video_length: f64,
) -> Result<Interval> {
    if std == 0.0 {
        return Ok(*truth);
    }
    let noise = Normal::new(0.0, std).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    for _ in 0..MAX_RESAMPLES {
        let start = truth.start + noise.sample(rng);
        let end = truth.end + noise.sample(rng);
        if start >= 0.0 && end <= video_length && start < end {
            return Ok(Interval { start, end });
        }
    }
    Err(Error::InvalidConfig(format!(
        "noise std {std} s cannot keep boundaries inside the video"
    )))
}

pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<Scenario> {
    cfg.validate()?;
    let window = Window {
        start_feature: 0,
        length_features: usize::MAX,
    };
    let segments = (0..cfg.num_segments)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            let duration = rng.random_range(cfg.min_duration_s..=cfg.max_duration_s);
            let start = rng.random_range(1.0..=cfg.video_length_s - 1.0 - duration);
            let truth = Interval::new(start, start + duration)?;
            let verb = rng.random_range(0..cfg.vocab.verb_count);
            let noun = rng.random_range(0..cfg.vocab.noun_count);
            let c_noun = rng.random_range(cfg.conf_lo..=cfg.conf_hi);
            let c_verb = rng.random_range(cfg.conf_lo..=cfg.conf_hi);
            let noun_boundary = noisy_copy(&mut rng, &truth, cfg.noise_std(c_noun), cfg.video_length_s)?;
            let verb_boundary = noisy_copy(&mut rng, &truth, cfg.noise_std(c_verb), cfg.video_length_s)?;
            Ok(SimSegment {
                video_id: video_name(i % cfg.num_videos),
                ground_truth: truth,
                verb,
                noun,
                noun_stream: StreamProposal {
                    boundary: noun_boundary,
                    scores: confidence_scores(cfg.vocab.noun_count, noun, c_noun),
                    source_window: window,
                },
                verb_stream: StreamProposal {
                    boundary: verb_boundary,
                    scores: confidence_scores(cfg.vocab.verb_count, verb, c_verb),
                    source_window: window,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Scenario {
        config: cfg.clone(),
        segments,
    })
}

impl Scenario {
    pub fn ground_truth(&self) -> Vec<GroundTruthInstance> {
        self.segments
            .iter()
            .map(|s| GroundTruthInstance {
                video_id: s.video_id.clone(),
                interval: s.ground_truth,
                verb: s.verb,
                noun: s.noun,
            })
            .collect()
    }

    /// The scenario as aligned proposal records on `grid`, all in window 0.
    /// Only the top `keep` classes of each stream are written.
    pub fn to_proposals(&self, grid: &FeatureGrid, keep: usize) -> Vec<ProposalRecord> {
        let to_features = |iv: &Interval| Interval {
            start: grid.seconds_to_coordinate(iv.start),
            end: grid.seconds_to_coordinate(iv.end),
        };
        let sparse = |scores: &[f64]| crate::composition::top_k(scores, keep);
        self.segments
            .iter()
            .map(|s| ProposalRecord {
                video_id: s.video_id.clone(),
                window_start_feature: 0,
                noun_boundary: to_features(&s.noun_stream.boundary),
                noun_scores: sparse(&s.noun_stream.scores),
                verb_boundary: to_features(&s.verb_stream.boundary),
                verb_scores: sparse(&s.verb_stream.scores),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentErrors {
    pub noun_confidence: f64,
    pub verb_confidence: f64,
    pub noun_weight: f64,
    pub verb_weight: f64,
    /// `|start - start*| + |end - end*|` for each stream and fusion rule.
    pub noun_error: f64,
    pub verb_error: f64,
    pub dwf_error: f64,
    pub mean_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionReport {
    pub num_segments: usize,
    pub mean_abs_err_dwf: f64,
    pub mean_abs_err_mean: f64,
    /// Mean of `mean_error - dwf_error`; positive when DWF is better.
    pub mean_gap: f64,
    /// Standard error of `mean_gap`.
    pub gap_stderr: f64,
    pub t_statistic: f64,
    /// One-sided paired t-test p-value for "DWF error < mean error".
    pub p_value: f64,
    /// Pearson correlation between `W_n - W_v` and `E_v - E_n`.
    pub weight_error_correlation: f64,
    pub per_segment: Vec<SegmentErrors>,
}

fn abs_error(a: &Interval, truth: &Interval) -> f64 {
    (a.start - truth.start).abs() + (a.end - truth.end).abs()
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

pub fn compare_fusion(scenario: &Scenario) -> Result<FusionReport> {
    let per_segment = scenario
        .segments
        .iter()
        .map(|s| {
            let (cn, cv) = stream_confidences(&s.noun_stream.scores, &s.verb_stream.scores)?;
            let w = dwf_weights(cn, cv, DEFAULT_FUSION_EPSILON);
            let nb = &s.noun_stream.boundary;
            let vb = &s.verb_stream.boundary;
            let dwf = fuse_boundaries(nb, vb, &w)?;
            let mean = hard_mean_fusion(nb, vb);
            Ok(SegmentErrors {
                noun_confidence: cn,
                verb_confidence: cv,
                noun_weight: w.noun_weight,
                verb_weight: w.verb_weight,
                noun_error: abs_error(nb, &s.ground_truth),
                verb_error: abs_error(vb, &s.ground_truth),
                dwf_error: abs_error(&dwf, &s.ground_truth),
                mean_error: abs_error(&mean, &s.ground_truth),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let n = per_segment.len();
    let nf = n as f64;
    let mean_abs_err_dwf = per_segment.iter().map(|e| e.dwf_error).sum::<f64>() / nf;
    let mean_abs_err_mean = per_segment.iter().map(|e| e.mean_error).sum::<f64>() / nf;
    let gaps: Vec<f64> = per_segment.iter().map(|e| e.mean_error - e.dwf_error).collect();
    let mean_gap = gaps.iter().sum::<f64>() / nf;
    let var = if n > 1 {
        gaps.iter().map(|g| (g - mean_gap).powi(2)).sum::<f64>() / (nf - 1.0)
    } else {
        0.0
    };
    let gap_stderr = (var / nf).sqrt();
    let (t_statistic, p_value) = if gap_stderr > 0.0 && n > 1 {
        let t = mean_gap / gap_stderr;
        let dist = StudentsT::new(0.0, 1.0, nf - 1.0).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        (t, dist.sf(t))
    } else if mean_gap > 0.0 {
        (f64::INFINITY, 0.0)
    } else {
        (0.0, 1.0)
    };
    let weight_diff: Vec<f64> = per_segment.iter().map(|e| e.noun_weight - e.verb_weight).collect();
    let error_diff: Vec<f64> = per_segment.iter().map(|e| e.verb_error - e.noun_error).collect();

    Ok(FusionReport {
        num_segments: n,
        mean_abs_err_dwf,
        mean_abs_err_mean,
        mean_gap,
        gap_stderr,
        t_statistic,
        p_value,
        weight_error_correlation: pearson(&weight_diff, &error_diff),
        per_segment,
    })
}

impl FusionReport {
    /// `key=value` lines, fixed order and precision.
    pub fn to_key_values(&self) -> String {
        format!(
            "segments={}\nmean_abs_err_dwf={:.6}\nmean_abs_err_mean={:.6}\nmean_gap={:.6}\ngap_stderr={:.6}\nt_statistic={:.4}\np_value={:.6e}\nweight_error_correlation={:.6}\n",
            self.num_segments,
            self.mean_abs_err_dwf,
            self.mean_abs_err_mean,
            self.mean_gap,
            self.gap_stderr,
            self.t_statistic,
            self.p_value,
            self.weight_error_correlation,
        )
    }

    /// Per-segment CSV for plotting.
    pub fn per_segment_csv(&self) -> String {
        let mut out = String::from(
            "segment,noun_confidence,verb_confidence,noun_weight,verb_weight,noun_error,verb_error,dwf_error,mean_error\n",
        );
        for (i, e) in self.per_segment.iter().enumerate() {
            out.push_str(&format!(
                "{i},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
                e.noun_confidence,
                e.verb_confidence,
                e.noun_weight,
                e.verb_weight,
                e.noun_error,
                e.verb_error,
                e.dwf_error,
                e.mean_error
            ));
        }
        out
    }
}
