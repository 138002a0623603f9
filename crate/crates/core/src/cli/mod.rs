//! Command-line front end: `synth`, `align`, `track`, `eval`,
//! `quality-train` and `quality-predict`.
//!
//! Every tuning key of [`RunConfig`] can come from a `key = value` file
//! (`--config`) or from the flag of the same name; flags win. Exit codes are
//! 0 on success, 2 for I/O and schema errors, 3 for algorithmic failures.

mod config;
pub mod overlay;

pub use config::RunConfig;

use crate::error::{Error, Result};
use crate::eval::{evaluate, leaf_match, read_tips_file, FrameTips, LeafRecord, Tips, VideoTips};
use crate::fmt::{to_json_line, to_json_pretty};
use crate::imaging::io::{list_frames, read_frame, write_frame};
use crate::imaging::GrayImage;
use crate::quality::{
    alignment_target, balance_by_error, detect_tracking_failure, extract_track_features, reference_index,
    train_regression, train_svm, AlignFeatures, LeafSnapshot, RegressionModel, SvmModel, TrackFeatures, ALIGN_DIM,
    TRACK_DIM,
};
use crate::synth::{render_video, SynthSpec};
use crate::templates::TemplateLibrary;
use crate::track::{align_frame, track_video, FrameResult, TrackedFrame};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

macro_rules! tuning {
    (
        values { $($field:ident => $key:literal : $help:literal),* $(,)? }
        switches { $($sfield:ident => $skey:literal : $shelp:literal),* $(,)? }
    ) => {
        /// Flags mirroring the configuration keys. Switches take an optional
        /// `=true`/`=false`.
        #[derive(Args, Debug, Default, Clone)]
        pub struct Tuning {
            $(
                #[arg(long = $key, value_name = "VALUE", global = true, help = $help)]
                $field: Option<String>,
            )*
            $(
                #[arg(long = $skey, value_name = "BOOL", global = true, num_args = 0..=1,
                      require_equals = true, default_missing_value = "true", help = $shelp)]
                $sfield: Option<String>,
            )*
        }

        impl Tuning {
            fn pairs(&self) -> Vec<(&'static str, &str)> {
                let mut v = Vec::new();
                $( if let Some(x) = &self.$field { v.push(($key, x.as_str())); } )*
                $( if let Some(x) = &self.$sfield { v.push(($skey, x.as_str())); } )*
                v
            }
        }

        /// Every key accepted in a configuration file.
        pub const CONFIG_KEYS: &[&str] = &[$($key,)* $($skey),*];
    };
}

tuning! {
    values {
    lambda1 => "lambda1": "Weight of the chamfer term of J",
    lambda2 => "lambda2": "Weight of the mask term of J",
    lambda3 => "lambda3": "Weight of the angle term of J",
    c => "c": "Steepness of the mask squashing function",
    alpha1 => "alpha1": "Step size of the indicator-vector descent",
    mask_norm => "mask-norm": "Mask-term normalizer of J: `frame` or a pixel count",
    mu1 => "mu1": "Weight of the mask term of G",
    mu2 => "mu2": "Weight of the angle term of G",
    alpha2 => "alpha2": "Step size of the plain pose update",
    max_iters => "max-iters": "Pose iterations per frame",
    conv_eps => "conv-eps": "Pose change below which refinement stops",
    min_leaf_area => "min-leaf-area": "Leaves smaller than this many pixels are deleted",
    step_rule => "step-rule": "Pose update rule: `plain` or `preconditioned`",
    eta => "eta": "Step of the preconditioned pose update",
    overlap_min => "overlap-min": "Minimum fraction of a candidate inside the foreground",
    edge_threshold => "edge-threshold": "Sobel threshold relative to the maximum magnitude",
    templates => "templates": "Template library JSON file",
    rotation_step => "rotation-step": "Rotation step of the built-in library, degrees",
    seed => "seed": "Random seed (synth)",
    jobs => "jobs": "Worker threads",
    svm_c => "svm-c": "SVM regularization constant",
    smooth_sigma => "smooth-sigma": "Gaussian smoothing of SVM margins for failure detection",
    min_run => "min-run": "Minimum failure run length, frames",
    }
    switches {
    unordered => "unordered": "Match tips regardless of their order",
    balance => "balance": "Duplicate regression samples to balance tip-error bins",
    overlay => "overlay": "Write overlay images",
    }
}

#[derive(Parser, Debug)]
#[command(name = "leaftrack", version, about = "Leaf segmentation, alignment and tracking in rosette videos")]
pub struct Cli {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub tuning: Tuning,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityKind {
    Align,
    Track,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Render a synthetic video with ground truth.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Segment and align the leaves of a single frame.
    Align {
        #[arg(long)]
        frame: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Align the last frame of each video and track toward the first.
    Track {
        /// Directories of frame images, sorted by file name.
        #[arg(required = true)]
        videos: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Labels used to attach tip errors to the feature records.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Write per-leaf quality features.
        #[arg(long)]
        features: bool,
        #[arg(long)]
        align_model: Option<PathBuf>,
        #[arg(long)]
        track_model: Option<PathBuf>,
    },
    /// Unmatched rate, landmark error and tracking consistency curves.
    Eval {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Fit an alignment-quality regressor or a tracking-quality SVM.
    QualityTrain {
        #[arg(long, value_enum)]
        kind: QualityKind,
        /// JSONL records with `features` and `error` (or `target`/`label`).
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Tip error at or above which a tracked leaf counts as a failure.
        #[arg(long, default_value_t = 0.3)]
        fail_threshold: f64,
        #[arg(long, default_value_t = 20)]
        per_bin: usize,
        #[arg(long, default_value_t = 0.05)]
        bin_width: f64,
        #[arg(long, default_value_t = 0.5)]
        bin_cap: f64,
    },
    /// Score feature records with a trained model.
    QualityPredict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Failure intervals per leaf track (track models only).
        #[arg(long)]
        failures: Option<PathBuf>,
    },
}

/// A trained quality model on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QualityModel {
    Align(RegressionModel),
    Track(SvmModel),
}

/// One leaf on one frame, as written by `track --features`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub video: String,
    pub frame: usize,
    pub id: u32,
    pub align_features: AlignFeatures,
    pub track_features: TrackFeatures,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<f64>,
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Defaults, then the config file, then flags.
pub fn resolve_config(config: Option<&Path>, tuning: &Tuning) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = config {
        cfg.apply_file(path)?;
    }
    for (key, value) in tuning.pairs() {
        cfg.apply(key, value)?;
    }
    Ok(cfg)
}

pub fn execute(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(cli.config.as_deref(), &cli.tuning)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cfg.jobs {
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(&cli.command, &cfg))
}

fn dispatch(command: &Command, cfg: &RunConfig) -> Result<()> {
    match command {
        Command::Synth { spec, out } => cmd_synth(spec, out, cfg),
        Command::Align { frame, out } => cmd_align(frame, out, cfg),
        Command::Track {
            videos,
            out,
            labels,
            features,
            align_model,
            track_model,
        } => cmd_track(
            videos,
            out,
            &TrackOptions {
                labels: labels.clone(),
                features: *features,
                align_model: align_model.clone(),
                track_model: track_model.clone(),
            },
            cfg,
        ),
        Command::Eval {
            predictions,
            labels,
            out,
            csv,
        } => cmd_eval(predictions, labels, out, csv.as_deref(), cfg),
        Command::QualityTrain {
            kind,
            samples,
            out,
            fail_threshold,
            per_bin,
            bin_width,
            bin_cap,
        } => cmd_quality_train(
            *kind,
            samples,
            out,
            &BalanceOptions {
                fail_threshold: *fail_threshold,
                per_bin: *per_bin,
                bin_width: *bin_width,
                bin_cap: *bin_cap,
            },
            cfg,
        ),
        Command::QualityPredict {
            model,
            samples,
            out,
            failures,
        } => cmd_quality_predict(model, samples, out, failures.as_deref(), cfg),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("cannot create {}", dir.display()), e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(format!("cannot write {}", path.display()), e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("cannot read {}", path.display()), e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path.display().to_string(), e))
}

fn read_jsonl(path: &Path) -> Result<Vec<Map<String, Value>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("cannot read {}", path.display()), e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            serde_json::from_str(l).map_err(|e| Error::format(format!("{}:{}", path.display(), n + 1), e))
        })
        .collect()
}

fn frame_name(index: usize) -> String {
    format!("frame_{index:04}.png")
}

pub fn cmd_synth(spec_path: &Path, out: &Path, cfg: &RunConfig) -> Result<()> {
    let mut spec: SynthSpec = read_json(spec_path)?;
    if let Some(seed) = cfg.seed {
        spec.seed = seed;
    }
    let video = render_video(&spec)?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(format!("cannot create {}", out.display()), e))?;
    for (i, frame) in video.frames.iter().enumerate() {
        write_frame(frame, &out.join(frame_name(i)))?;
    }
    write_text(&out.join("labels.json"), &to_json_pretty(&video.labels))?;
    write_text(&out.join("truth.json"), &to_json_pretty(&video.truth))
}

pub fn cmd_align(frame: &Path, out: &Path, cfg: &RunConfig) -> Result<()> {
    let image = read_frame(frame)?;
    let library = cfg.library()?;
    let (set, _, result) = align_frame(&image, 0, &library, &cfg.pipeline)?;
    write_text(out, &to_json_pretty(&result))?;
    if cfg.overlay {
        overlay::write(&image, &set, &out.with_extension("overlay.png"))?;
    }
    Ok(())
}

struct TrackOptions {
    labels: Option<PathBuf>,
    features: bool,
    align_model: Option<PathBuf>,
    track_model: Option<PathBuf>,
}

struct TrackedVideo {
    name: String,
    frames: Vec<TrackedFrame>,
    images: Vec<GrayImage>,
}

fn video_name(dir: &Path) -> String {
    dir.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}

fn load_and_track(dir: &Path, library: &TemplateLibrary, cfg: &RunConfig) -> Result<TrackedVideo> {
    let paths = list_frames(dir)?;
    if paths.is_empty() {
        return Err(Error::format(dir.display().to_string(), "no frame images"));
    }
    let images = paths.iter().map(|p| read_frame(p)).collect::<Result<Vec<_>>>()?;
    let frames = track_video(&images, library, &cfg.pipeline)?;
    Ok(TrackedVideo {
        name: video_name(dir),
        frames,
        images,
    })
}

fn tips_of(result: &FrameResult) -> Vec<LeafRecord> {
    result
        .leaves
        .iter()
        .map(|l| LeafRecord::Identified {
            id: l.id,
            tips: [l.tips[0].x, l.tips[0].y, l.tips[1].x, l.tips[1].y],
        })
        .collect()
}

/// Quality features of every leaf, in processing order (last frame first).
/// A leaf's temporal reference is taken `REFERENCE_OFFSET` steps earlier in
/// that order, clamped to the start of its track.
fn leaf_features(video: &TrackedVideo) -> Result<Vec<FeatureRecord>> {
    let order: Vec<usize> = (0..video.frames.len()).rev().collect();
    let mut tracks: BTreeMap<u32, Vec<(usize, usize)>> = BTreeMap::new();
    for &f in &order {
        for (k, m) in video.frames[f].leaves.members.iter().enumerate() {
            tracks.entry(m.id).or_default().push((f, k));
        }
    }
    let snapshot = |f: usize, k: usize| {
        let tf = &video.frames[f];
        LeafSnapshot::of(&tf.leaves.members[k].candidate, &tf.mask, tf.plant_center)
    };
    let mut out = Vec::new();
    for (&id, track) in &tracks {
        for (pos, &(f, k)) in track.iter().enumerate() {
            let cur = snapshot(f, k)?;
            let (rf, rk) = track[reference_index(pos)];
            let reference = snapshot(rf, rk)?;
            out.push(FeatureRecord {
                video: video.name.clone(),
                frame: f,
                id,
                align_features: cur.features,
                track_features: extract_track_features(&cur, &reference)?,
                error: None,
            });
        }
    }
    out.sort_by_key(|r| (r.frame, r.id));
    Ok(out)
}

/// Tip error of each estimated leaf that the frame-level matching pairs
/// with a label.
fn attach_errors(records: &mut [FeatureRecord], video: &TrackedVideo, labels: &VideoTips, unordered: bool) -> Result<()> {
    for tf in &video.frames {
        let Some(lab) = labels.frame(tf.result.frame) else {
            continue;
        };
        let est: Vec<Tips> = tips_of(&tf.result).iter().map(|r| r.tips()).collect();
        let lab: Vec<Tips> = lab.leaves.iter().map(|r| r.tips()).collect();
        let m = leaf_match(&est, &lab, unordered)?;
        for &(i, j) in &m.pairs {
            let id = tf.result.leaves[i].id;
            if let Some(r) = records.iter_mut().find(|r| r.frame == tf.result.frame && r.id == id) {
                r.error = Some(m.er[i][j]);
            }
        }
    }
    Ok(())
}

fn load_model(path: &Path) -> Result<QualityModel> {
    read_json(path)
}

fn cmd_track(videos: &[PathBuf], out: &Path, opts: &TrackOptions, cfg: &RunConfig) -> Result<()> {
    let library = cfg.library()?;
    let align_model = match &opts.align_model {
        Some(p) => match load_model(p)? {
            QualityModel::Align(m) => Some(m),
            QualityModel::Track(_) => return Err(Error::format(p.display().to_string(), "expected an align model")),
        },
        None => None,
    };
    let track_model = match &opts.track_model {
        Some(p) => match load_model(p)? {
            QualityModel::Track(m) => Some(m),
            QualityModel::Align(_) => return Err(Error::format(p.display().to_string(), "expected a track model")),
        },
        None => None,
    };
    let labels = opts.labels.as_deref().map(read_tips_file).transpose()?;
    let mut names: Vec<String> = videos.iter().map(|v| video_name(v)).collect();
    names.sort();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("video directories must have distinct names"));
    }

    let tracked = videos
        .par_iter()
        .map(|dir| load_and_track(dir, &library, cfg))
        .collect::<Result<Vec<_>>>()?;

    std::fs::create_dir_all(out).map_err(|e| Error::io(format!("cannot create {}", out.display()), e))?;
    let mut predictions = Vec::new();
    for video in &tracked {
        let want_features = opts.features || align_model.is_some() || track_model.is_some();
        let mut records = if want_features { leaf_features(video)? } else { Vec::new() };
        if let Some(labels) = &labels {
            if let Some(l) = labels.iter().find(|l| l.video_id == video.name) {
                attach_errors(&mut records, video, l, cfg.unordered)?;
            }
        }

        let mut jsonl = String::new();
        for tf in &video.frames {
            let mut result = tf.result.clone();
            for leaf in &mut result.leaves {
                let rec = records.iter().find(|r| r.frame == result.frame && r.id == leaf.id);
                if let (Some(m), Some(r)) = (&align_model, rec) {
                    leaf.q_align = Some(m.predict(&r.align_features));
                }
                if let (Some(m), Some(r)) = (&track_model, rec) {
                    leaf.q_track = Some(m.margin(&r.track_features));
                }
            }
            jsonl.push_str(&to_json_line(&result));
        }
        write_text(&out.join(format!("{}.jsonl", video.name)), &jsonl)?;

        if opts.features {
            let text: String = records.iter().map(to_json_line).collect();
            write_text(&out.join(format!("{}.features.jsonl", video.name)), &text)?;
        }
        if cfg.overlay {
            let dir = out.join(&video.name);
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(format!("cannot create {}", dir.display()), e))?;
            for (tf, image) in video.frames.iter().zip(&video.images) {
                overlay::write(image, &tf.leaves, &dir.join(format!("overlay_{:04}.png", tf.result.frame)))?;
            }
        }
        predictions.push(VideoTips {
            video_id: video.name.clone(),
            frames: video
                .frames
                .iter()
                .map(|tf| FrameTips {
                    frame: tf.result.frame,
                    leaves: tips_of(&tf.result),
                })
                .collect(),
        });
    }
    predictions.sort_by(|a, b| a.video_id.cmp(&b.video_id));
    write_text(&out.join("predictions.json"), &to_json_pretty(&predictions))
}

fn cmd_eval(predictions: &Path, labels: &Path, out: &Path, csv: Option<&Path>, cfg: &RunConfig) -> Result<()> {
    let pred = read_tips_file(predictions)?;
    let lab = read_tips_file(labels)?;
    let report = evaluate(&pred, &lab, cfg.unordered)?;
    write_text(out, &to_json_pretty(&report))?;
    if let Some(csv) = csv {
        write_text(csv, &report.to_csv())?;
    }
    Ok(())
}

struct BalanceOptions {
    fail_threshold: f64,
    per_bin: usize,
    bin_width: f64,
    bin_cap: f64,
}

fn field<'a>(rec: &'a Map<String, Value>, keys: &[&str]) -> Option<&'a Value> {
    keys.iter().find_map(|k| rec.get(*k).filter(|v| !v.is_null()))
}

fn features_of(rec: &Map<String, Value>, kind: QualityKind, line: usize) -> Result<Vec<f64>> {
    let (keys, dim): (&[&str], usize) = match kind {
        QualityKind::Align => (&["features", "align_features"], ALIGN_DIM),
        QualityKind::Track => (&["features", "track_features"], TRACK_DIM),
    };
    let v = field(rec, keys).ok_or_else(|| Error::format(format!("sample {line}"), "missing features"))?;
    let x: Vec<f64> = serde_json::from_value(v.clone()).map_err(|e| Error::format(format!("sample {line}"), e))?;
    if x.len() != dim {
        return Err(Error::DimensionMismatch(format!("sample {line}: {} features, expected {dim}", x.len())));
    }
    Ok(x)
}

fn number(v: &Value, what: &str, line: usize) -> Result<f64> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::format(format!("sample {line}"), format!("{what} must be a finite number")))
}

fn cmd_quality_train(kind: QualityKind, samples: &Path, out: &Path, opts: &BalanceOptions, cfg: &RunConfig) -> Result<()> {
    let records = read_jsonl(samples)?;
    let model = match kind {
        QualityKind::Align => {
            let mut rows: Vec<(AlignFeatures, f64)> = Vec::new();
            let mut errors = Vec::new();
            for (n, rec) in records.iter().enumerate() {
                let x = features_of(rec, kind, n + 1)?;
                let x = AlignFeatures(x.try_into().expect("checked dimension"));
                if let Some(e) = rec.get("error").filter(|v| !v.is_null()) {
                    let e = number(e, "error", n + 1)?;
                    rows.push((x, alignment_target(e)));
                    errors.push(e);
                } else if let Some(t) = rec.get("target") {
                    let t = number(t, "target", n + 1)?;
                    rows.push((x, t));
                    errors.push(t / 2.0);
                }
            }
            if cfg.balance {
                let keyed: Vec<((AlignFeatures, f64), f64)> = rows.into_iter().zip(errors).collect();
                rows = balance_by_error(&keyed, opts.per_bin, opts.bin_width, opts.bin_cap)
                    .into_iter()
                    .map(|(r, _)| r)
                    .collect();
            }
            QualityModel::Align(train_regression(&rows)?)
        }
        QualityKind::Track => {
            let mut rows = Vec::new();
            for (n, rec) in records.iter().enumerate() {
                let x = TrackFeatures(features_of(rec, kind, n + 1)?.try_into().expect("checked dimension"));
                let y = if let Some(l) = rec.get("label").filter(|v| !v.is_null()) {
                    match l.as_i64() {
                        Some(1) => 1,
                        Some(-1) => -1,
                        _ => return Err(Error::format(format!("sample {}", n + 1), "label must be 1 or -1")),
                    }
                } else if let Some(e) = rec.get("error").filter(|v| !v.is_null()) {
                    if number(e, "error", n + 1)? < opts.fail_threshold {
                        1
                    } else {
                        -1
                    }
                } else {
                    continue;
                };
                rows.push((x, y));
            }
            QualityModel::Track(train_svm(&rows, cfg.svm_c)?)
        }
    };
    write_text(out, &to_json_pretty(&model))
}

fn cmd_quality_predict(model: &Path, samples: &Path, out: &Path, failures: Option<&Path>, cfg: &RunConfig) -> Result<()> {
    let model = load_model(model)?;
    let records = read_jsonl(samples)?;
    let mut text = String::new();
    let mut tracks: BTreeMap<(String, u64), Vec<(u64, f64)>> = BTreeMap::new();
    for (n, rec) in records.iter().enumerate() {
        let mut rec = rec.clone();
        match &model {
            QualityModel::Align(m) => {
                let x = AlignFeatures(features_of(&rec, QualityKind::Align, n + 1)?.try_into().expect("checked dimension"));
                rec.insert("quality".into(), Value::from(m.predict(&x)));
            }
            QualityModel::Track(m) => {
                let x = TrackFeatures(features_of(&rec, QualityKind::Track, n + 1)?.try_into().expect("checked dimension"));
                let margin = m.margin(&x);
                rec.insert("margin".into(), Value::from(margin));
                rec.insert("label".into(), Value::from(m.predict(&x)));
                let video = rec.get("video").and_then(Value::as_str).unwrap_or("").to_string();
                let id = rec.get("id").and_then(Value::as_u64).unwrap_or(0);
                let frame = rec.get("frame").and_then(Value::as_u64).unwrap_or(n as u64);
                tracks.entry((video, id)).or_default().push((frame, margin));
            }
        }
        text.push_str(&to_json_line(&rec));
    }
    write_text(out, &text)?;

    if let Some(path) = failures {
        if !matches!(model, QualityModel::Track(_)) {
            return Err(Error::invalid("failure detection needs a track model"));
        }
        #[derive(Serialize)]
        struct Failures {
            video: String,
            id: u64,
            intervals: Vec<[u64; 2]>,
        }
        let mut lines = String::new();
        for ((video, id), mut series) in tracks {
            series.sort_by_key(|s| s.0);
            let margins: Vec<f64> = series.iter().map(|s| s.1).collect();
            let intervals = detect_tracking_failure(&margins, cfg.smooth_sigma, cfg.min_run)
                .into_iter()
                .map(|(a, b)| [series[a].0, series[b].0])
                .collect();
            lines.push_str(&to_json_line(&Failures { video, id, intervals }));
        }
        write_text(path, &lines)?;
    }
    Ok(())
}
