//! compose -> filter -> fuse -> seconds -> class-wise suppression -> JSON.

use std::collections::BTreeMap;

use crate::composition::compose_actions;
use crate::decode::StreamProposal;
use crate::error::Result;
use crate::fusion::{dwf_weights, fuse_boundaries, hard_mean_fusion, stream_confidences, FusionMode, FusionWeights};
use crate::interval::Interval;
use crate::suppression::{suppress_video, ActionDetection, ClassKey};
use crate::timeline::Window;

use super::config::PipelineConfig;
use super::proposals::ProposalRecord;
use super::submission::SubmissionDocument;

#[derive(Debug, Clone, PartialEq)]
pub struct FusedProposal {
    pub video_id: String,
    pub window_start_feature: usize,
    pub weights: FusionWeights,
    /// Window-local feature coordinates.
    pub fused: Interval,
    pub seconds: Interval,
}

fn fuse_one(record: &ProposalRecord, noun: &[f64], verb: &[f64], cfg: &PipelineConfig) -> Result<(FusionWeights, Interval)> {
    match cfg.fusion_mode {
        FusionMode::Mean => Ok((
            FusionWeights::mean(),
            hard_mean_fusion(&record.noun_boundary, &record.verb_boundary),
        )),
        FusionMode::Dwf => {
            let (cn, cv) = stream_confidences(noun, verb)?;
            let w = dwf_weights(cn, cv, cfg.epsilon);
            Ok((w, fuse_boundaries(&record.noun_boundary, &record.verb_boundary, &w)?))
        }
    }
}

/// Fused interval of every record, without composition or suppression.
pub fn fuse_records(records: &[ProposalRecord], cfg: &PipelineConfig) -> Result<Vec<FusedProposal>> {
    records
        .iter()
        .map(|r| {
            let (noun, verb) = r.dense_scores(&cfg.vocab)?;
            let (weights, fused) = fuse_one(r, &noun, &verb, cfg)?;
            let seconds = cfg
                .grid
                .at_window(r.window_start_feature)
                .boundary_to_seconds(fused.start, fused.end)?;
            Ok(FusedProposal {
                video_id: r.video_id.clone(),
                window_start_feature: r.window_start_feature,
                weights,
                fused,
                seconds,
            })
        })
        .collect()
}

/// Composed, filtered and fused detections in seconds, grouped by video,
/// before suppression.
pub fn compose_detections(records: &[ProposalRecord], cfg: &PipelineConfig) -> Result<BTreeMap<String, Vec<ActionDetection>>> {
    let min_score = cfg.nms().min_score;
    let mut by_video: BTreeMap<String, Vec<ActionDetection>> = BTreeMap::new();
    for r in records {
        let (noun_scores, verb_scores) = r.dense_scores(&cfg.vocab)?;
        let window = Window {
            start_feature: r.window_start_feature,
            length_features: cfg.window_length,
        };
        let noun = StreamProposal {
            boundary: r.noun_boundary,
            scores: noun_scores,
            source_window: window,
        };
        let verb = StreamProposal {
            boundary: r.verb_boundary,
            scores: verb_scores,
            source_window: window,
        };
        let candidates: Vec<_> = compose_actions(&noun, &verb, cfg.top_k_noun, cfg.top_k_verb, &cfg.vocab)?
            .into_iter()
            .filter(|c| c.score >= min_score)
            .collect();
        if candidates.is_empty() {
            continue;
        }
        let (_, fused) = fuse_one(r, &noun.scores, &verb.scores, cfg)?;
        let seconds = cfg
            .grid
            .at_window(r.window_start_feature)
            .boundary_to_seconds(fused.start, fused.end)?;
        let dets = by_video.entry(r.video_id.clone()).or_default();
        dets.extend(candidates.into_iter().map(|c| ActionDetection {
            video_id: r.video_id.clone(),
            interval: seconds,
            verb: c.verb,
            noun: c.noun,
            action_id: c.action_id,
            score: c.score,
        }));
    }
    Ok(by_video)
}

/// Suppressed detections per video.
pub fn run_detections(records: &[ProposalRecord], cfg: &PipelineConfig) -> Result<BTreeMap<String, Vec<ActionDetection>>> {
    let nms = cfg.nms();
    Ok(compose_detections(records, cfg)?
        .into_iter()
        .map(|(video, dets)| {
            let kept = suppress_video(dets, &nms, ClassKey::Action);
            (video, kept)
        })
        .collect())
}

/// The whole pipeline, from aligned proposals to a submission document.
pub fn run_pipeline(records: &[ProposalRecord], cfg: &PipelineConfig) -> Result<SubmissionDocument> {
    cfg.validate()?;
    let mut doc = SubmissionDocument::empty(&cfg.version, &cfg.challenge);
    doc.sls_pt = Some(cfg.sls_pt);
    doc.sls_tl = Some(cfg.sls_tl);
    doc.sls_td = Some(cfg.sls_td);
    if records.is_empty() {
        log::warn!("no proposals in input; writing an empty submission");
        return Ok(doc);
    }
    for (video, dets) in run_detections(records, cfg)? {
        doc.insert_video(&video, dets);
    }
    Ok(doc)
}
