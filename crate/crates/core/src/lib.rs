//! Post-processing for decoupled noun/verb temporal action detection.
//!
//! Two independently trained detectors, one for nouns and one for verbs,
//! each emit intervals with class-score vectors. This crate turns aligned
//! pairs of those proposals into final action detections:
//!
//! * [`timeline`] maps feature-grid coordinates to seconds and tiles long
//!   sequences into overlapping windows.
//! * [`decode`] turns anchor-free head outputs into proposals and pools
//!   windows into one coordinate frame.
//! * [`composition`] crosses the top nouns with the top verbs and scores
//!   each pair by the geometric mean of its probabilities.
//! * [`fusion`] picks the action interval by weighting each stream's
//!   boundary by its peak class confidence, with the plain average as a
//!   baseline.
//! * [`suppression`] runs class-wise Gaussian Soft-NMS with boundary voting.
//! * [`evaluation`] computes tIoU-thresholded mAP for the verb, noun and
//!   action tasks.
//! * [`simulation`] generates seeded two-stream scenarios to measure how
//!   much confidence weighting helps.
//! * [`reliability`] holds the uncertainty-gated cross-stream attention
//!   arithmetic used by the dual-stream detector variant.
//! * [`io`] has the file formats and the end-to-end pipeline.

pub mod composition;
pub mod decode;
pub mod error;
pub mod evaluation;
pub mod fusion;
pub mod interval;
pub mod io;
pub mod reliability;
pub mod simulation;
pub mod suppression;
pub mod timeline;

pub use composition::{compose_actions, decode_action_id, encode_action_id, top_k, ActionCandidate, VocabSpec};
pub use decode::{decode_anchor_free, pool_windows, pre_nms_select, HeadOutput, StreamProposal};
pub use error::{Error, Result};
pub use evaluation::{average_precision, match_detections, mean_ap, EvalConfig, GroundTruthInstance, MapReport};
pub use fusion::{dwf_weights, fuse_boundaries, hard_mean_fusion, stream_confidences, FusionMode, FusionWeights};
pub use interval::{temporal_iou, Interval};
pub use simulation::{compare_fusion, generate_scenario, FusionReport, Scenario, ScenarioConfig};
pub use suppression::{boundary_vote, soft_nms, suppress_video, ActionDetection, ClassKey, NmsConfig, NmsPreset};
pub use timeline::{generate_windows, FeatureGrid, Window};
