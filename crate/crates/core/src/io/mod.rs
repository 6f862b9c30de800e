//! File formats, configuration and the end-to-end pipeline.

pub mod config;
pub mod ground_truth;
pub mod metrics;
pub mod pipeline;
pub mod proposals;
pub mod submission;

pub use config::{parse_config, parse_config_str, PipelineConfig};
pub use ground_truth::{read_ground_truth, write_ground_truth};
pub use metrics::{evaluate_files, MetricsTable};
pub use pipeline::{fuse_records, run_pipeline, FusedProposal};
pub use proposals::{parse_proposals, write_proposals, ProposalRecord};
pub use submission::{SubmissionDocument, SubmissionEntry};
