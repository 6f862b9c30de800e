use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use tad_fusion::evaluation::DEFAULT_TIOU_THRESHOLDS;
use tad_fusion::io::{self, PipelineConfig, SubmissionDocument};
use tad_fusion::io::proposals::read_proposals;
use tad_fusion::simulation::{compare_fusion, generate_scenario, ScenarioConfig};
use tad_fusion::suppression::{suppress_video, ActionDetection, ClassKey};
use tad_fusion::{generate_windows, Error, FusionMode, NmsPreset};

#[derive(Parser)]
#[command(name = "tadfuse", version, about = "Post-processing for two-stream temporal action detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    fusion_mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    nms_preset: Option<PresetArg>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Dwf,
    Mean,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum PresetArg {
    Noun,
    VerbAction,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Text,
    Kv,
}

#[derive(Subcommand)]
enum Command {
    /// Proposals in, submission JSON out.
    Pipeline {
        /// Aligned proposal file.
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Fused interval and weights of every proposal, no suppression.
    Fuse {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Re-run class-wise Soft-NMS over an existing submission.
    Nms {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Score a submission against a ground-truth CSV.
    Eval {
        submission: PathBuf,
        ground_truth: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: TableFormat,
        /// Comma-separated tIoU thresholds.
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Synthetic two-stream scenario and the DWF vs mean comparison.
    Simulate {
        #[arg(long, default_value_t = 10_000)]
        segments: usize,
        #[arg(long, default_value_t = 1)]
        videos: usize,
        #[arg(long, default_value_t = 1200.0)]
        video_length: f64,
        /// Per-segment errors as CSV.
        #[arg(long)]
        per_segment: Option<PathBuf>,
        /// The scenario as a proposal file.
        #[arg(long)]
        proposals: Option<PathBuf>,
        /// The scenario's ground truth as CSV.
        #[arg(long)]
        ground_truth: Option<PathBuf>,
        /// Class entries kept per stream in the proposal file.
        #[arg(long, default_value_t = 10)]
        keep: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Sliding windows over a feature sequence.
    Windows {
        /// Sequence length in features.
        features: usize,
        #[command(flatten)]
        common: Common,
    },
}

fn load_config(common: &Common) -> Result<PipelineConfig, Error> {
    let mut cfg = match &common.config {
        Some(p) => io::parse_config(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(m) = common.fusion_mode {
        cfg.fusion_mode = match m {
            ModeArg::Dwf => FusionMode::Dwf,
            ModeArg::Mean => FusionMode::Mean,
        };
    }
    if let Some(p) = common.nms_preset {
        cfg.nms_preset = match p {
            PresetArg::Noun => NmsPreset::Noun,
            PresetArg::VerbAction => NmsPreset::VerbAction,
        };
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(output: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match output {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => match std::io::stdout().lock().write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
            _ => Ok(()),
        },
    }
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Pipeline { input, common } => {
            let cfg = load_config(&common)?;
            let records = read_proposals(&input, &cfg.vocab)?;
            let doc = io::run_pipeline(&records, &cfg)?;
            log::info!("{} detections over {} videos", doc.num_detections(), doc.results.len());
            emit(common.output.as_deref(), &doc.to_json())
        }
        Command::Fuse { input, common } => {
            let cfg = load_config(&common)?;
            let records = read_proposals(&input, &cfg.vocab)?;
            let mut out = String::from("video_id\twindow_start\tw_noun\tw_verb\tfused_s\tfused_e\tstart_s\tend_s\n");
            for f in io::fuse_records(&records, &cfg)? {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{:.6}\t{:.6}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
                    f.video_id,
                    f.window_start_feature,
                    f.weights.noun_weight,
                    f.weights.verb_weight,
                    f.fused.start,
                    f.fused.end,
                    f.seconds.start,
                    f.seconds.end
                );
            }
            emit(common.output.as_deref(), &out)
        }
        Command::Nms { input, common } => {
            let cfg = load_config(&common)?;
            let doc = SubmissionDocument::read(&input)?;
            let nms = cfg.nms();
            let mut by_video: BTreeMap<String, Vec<ActionDetection>> = BTreeMap::new();
            for d in doc.detections(&cfg.vocab)? {
                by_video.entry(d.video_id.clone()).or_default().push(d);
            }
            let mut out = SubmissionDocument {
                results: BTreeMap::new(),
                ..doc
            };
            for (video, dets) in by_video {
                out.insert_video(&video, suppress_video(dets, &nms, ClassKey::Action));
            }
            emit(common.output.as_deref(), &out.to_json())
        }
        Command::Eval {
            submission,
            ground_truth,
            format,
            thresholds,
            common,
        } => {
            let cfg = load_config(&common)?;
            let doc = SubmissionDocument::read(&submission)?;
            let gts = io::read_ground_truth(&ground_truth)?;
            let thresholds = thresholds.unwrap_or_else(|| DEFAULT_TIOU_THRESHOLDS.to_vec());
            let table = io::evaluate_files(&doc, &gts, &thresholds, &cfg.vocab)?;
            let text = match format {
                TableFormat::Text => table.to_text(),
                TableFormat::Kv => table.to_key_values(),
            };
            emit(common.output.as_deref(), &text)
        }
        Command::Simulate {
            segments,
            videos,
            video_length,
            per_segment,
            proposals,
            ground_truth,
            keep,
            common,
        } => {
            let cfg = load_config(&common)?;
            let scenario_cfg = ScenarioConfig {
                num_segments: segments,
                num_videos: videos,
                video_length_s: video_length,
                vocab: cfg.vocab,
                seed: cfg.seed,
                ..ScenarioConfig::default()
            };
            let scenario = generate_scenario(&scenario_cfg)?;
            let report = compare_fusion(&scenario)?;
            if let Some(p) = per_segment {
                write_file(&p, &report.per_segment_csv())?;
            }
            if let Some(p) = proposals {
                write_file(&p, &io::write_proposals(&scenario.to_proposals(&cfg.grid, keep)))?;
            }
            if let Some(p) = ground_truth {
                write_file(&p, &io::write_ground_truth(&scenario.ground_truth())?)?;
            }
            emit(common.output.as_deref(), &report.to_key_values())
        }
        Command::Windows { features, common } => {
            let cfg = load_config(&common)?;
            let mut out = String::from("start_feature\tend_feature\tstart_s\tend_s\n");
            for w in generate_windows(features, cfg.window_length, cfg.overlap)? {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{:.4}\t{:.4}",
                    w.start_feature,
                    w.end_feature(),
                    cfg.grid.feature_index_to_seconds(w.start_feature),
                    cfg.grid.feature_index_to_seconds(w.end_feature())
                );
            }
            emit(common.output.as_deref(), &out)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            match err.downcast_ref::<Error>() {
                Some(e) if !e.is_input_error() => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
