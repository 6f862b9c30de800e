//! `key = value` pipeline configuration.
//!
//! UTF-8 text, one assignment per line, `#` starts a comment. Every key is
//! optional; an empty file yields [`PipelineConfig::default`]. Unknown keys
//! are rejected.

use std::path::Path;

use crate::composition::{VocabSpec, DEFAULT_TOP_K_NOUN, DEFAULT_TOP_K_VERB};
use crate::error::{Error, Result};
use crate::fusion::{FusionMode, DEFAULT_FUSION_EPSILON};
use crate::suppression::{NmsConfig, NmsPreset, DEFAULT_MAX_PER_VIDEO, DEFAULT_PRE_NMS_CAP};
use crate::timeline::{FeatureGrid, DEFAULT_WINDOW_LENGTH, DEFAULT_WINDOW_OVERLAP};

pub const DEFAULT_SUBMISSION_VERSION: &str = "0.2";
pub const DEFAULT_CHALLENGE: &str = "action_detection";

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub grid: FeatureGrid,
    pub window_length: usize,
    pub overlap: f64,
    pub top_k_noun: usize,
    pub top_k_verb: usize,
    pub epsilon: f64,
    pub fusion_mode: FusionMode,
    pub nms_preset: NmsPreset,
    pub nms_sigma: Option<f64>,
    pub nms_min_score: Option<f64>,
    pub nms_vote_threshold: Option<f64>,
    pub pre_nms_cap: usize,
    pub max_per_video: usize,
    pub vocab: VocabSpec,
    pub version: String,
    pub challenge: String,
    pub sls_pt: u32,
    pub sls_tl: u32,
    pub sls_td: u32,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            grid: FeatureGrid::default(),
            window_length: DEFAULT_WINDOW_LENGTH,
            overlap: DEFAULT_WINDOW_OVERLAP,
            top_k_noun: DEFAULT_TOP_K_NOUN,
            top_k_verb: DEFAULT_TOP_K_VERB,
            epsilon: DEFAULT_FUSION_EPSILON,
            fusion_mode: FusionMode::Dwf,
            nms_preset: NmsPreset::VerbAction,
            nms_sigma: None,
            nms_min_score: None,
            nms_vote_threshold: None,
            pre_nms_cap: DEFAULT_PRE_NMS_CAP,
            max_per_video: DEFAULT_MAX_PER_VIDEO,
            vocab: VocabSpec::default(),
            version: DEFAULT_SUBMISSION_VERSION.to_string(),
            challenge: DEFAULT_CHALLENGE.to_string(),
            sls_pt: 2,
            sls_tl: 3,
            sls_td: 4,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    /// The preset's Soft-NMS constants with any explicit overrides applied.
    pub fn nms(&self) -> NmsConfig {
        let base = self.nms_preset.config();
        NmsConfig {
            sigma: self.nms_sigma.unwrap_or(base.sigma),
            min_score: self.nms_min_score.unwrap_or(base.min_score),
            vote_threshold: self.nms_vote_threshold.unwrap_or(base.vote_threshold),
            pre_nms_cap: self.pre_nms_cap,
            max_per_video: self.max_per_video,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.nms().validate()?;
        if self.window_length == 0 || self.top_k_noun == 0 || self.top_k_verb == 0 {
            return Err(Error::InvalidConfig("window_length and top_k_* must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(Error::InvalidOverlap(self.overlap));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig("epsilon must be > 0".into()));
        }
        VocabSpec::new(self.vocab.noun_count, self.vocab.verb_count)?;
        Ok(())
    }
}

fn value_err(key: &str, message: impl Into<String>) -> Error {
    Error::ConfigValue {
        key: key.to_string(),
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| value_err(key, format!("cannot parse `{raw}`")))
}

fn positive<T: std::str::FromStr + PartialOrd + Default + Copy>(key: &str, raw: &str) -> Result<T> {
    let v: T = parse_num(key, raw)?;
    if v > T::default() {
        Ok(v)
    } else {
        Err(value_err(key, "must be > 0"))
    }
}

fn unquote(raw: &str) -> &str {
    raw.strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .unwrap_or(raw)
}

pub fn parse_config_str(text: &str) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, raw)) = line.split_once('=') else {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("expected `key = value`, got `{line}`"),
            });
        };
        let key = key.trim();
        let raw = unquote(raw.trim());
        match key {
            "stride_frames" => cfg.grid.stride_frames = positive(key, raw)?,
            "offset_frames" => cfg.grid.offset_frames = parse_num(key, raw)?,
            "fps" => cfg.grid.fps = positive(key, raw)?,
            "window_length" => cfg.window_length = positive(key, raw)?,
            "overlap" => {
                let v: f64 = parse_num(key, raw)?;
                if !(0.0..1.0).contains(&v) {
                    return Err(value_err(key, format!("{v} is outside [0, 1)")));
                }
                cfg.overlap = v;
            }
            "top_k_noun" => cfg.top_k_noun = positive(key, raw)?,
            "top_k_verb" => cfg.top_k_verb = positive(key, raw)?,
            "epsilon" => cfg.epsilon = positive(key, raw)?,
            "fusion_mode" => cfg.fusion_mode = raw.parse()?,
            "nms_preset" => cfg.nms_preset = raw.parse()?,
            "nms_sigma" => cfg.nms_sigma = Some(positive(key, raw)?),
            "nms_min_score" => {
                let v: f64 = parse_num(key, raw)?;
                if !(v >= 0.0) {
                    return Err(value_err(key, "must be >= 0"));
                }
                cfg.nms_min_score = Some(v);
            }
            "nms_vote_threshold" => {
                let v: f64 = parse_num(key, raw)?;
                if !(v > 0.0 && v <= 1.0) {
                    return Err(value_err(key, "must be in (0, 1]"));
                }
                cfg.nms_vote_threshold = Some(v);
            }
            "pre_nms_cap" => cfg.pre_nms_cap = positive(key, raw)?,
            "max_per_video" => cfg.max_per_video = positive(key, raw)?,
            "noun_count" => cfg.vocab.noun_count = positive(key, raw)?,
            "verb_count" => cfg.vocab.verb_count = positive(key, raw)?,
            "version" => cfg.version = raw.to_string(),
            "challenge" => cfg.challenge = raw.to_string(),
            "sls_pt" => cfg.sls_pt = parse_num(key, raw)?,
            "sls_tl" => cfg.sls_tl = parse_num(key, raw)?,
            "sls_td" => cfg.sls_td = parse_num(key, raw)?,
            "seed" => cfg.seed = parse_num(key, raw)?,
            other => return Err(Error::UnknownKey(other.to_string())),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<PipelineConfig> {
    parse_config_str(&std::fs::read_to_string(path)?)
}
