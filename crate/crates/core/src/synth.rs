//! Synthetic plant videos with exact ground truth: leaves are warped
//! templates drifting linearly in pose, painted over a dark background with
//! a light blur and Gaussian noise.

use crate::error::{Error, Result};
use crate::eval::{FrameTips, LeafRecord, VideoTips};
use crate::geometry::Point;
use crate::imaging::{BinaryMask, GrayImage};
use crate::templates::{backward_warp_mask, default_shapes, ovate_template, warp_tips, LeafTemplate, Pose};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub const BACKGROUND: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeSpec {
    /// One of the built-in shapes by ID (`ovate`, `elliptic`, `spatulate`).
    Builtin(String),
    Ovate { length: f64, width_ratio: f64, skew: f64 },
}

impl ShapeSpec {
    pub fn template(&self) -> Result<LeafTemplate> {
        match self {
            ShapeSpec::Builtin(name) => default_shapes()
                .into_iter()
                .find(|t| t.shape_id() == name)
                .ok_or_else(|| Error::invalid(format!("unknown built-in shape {name}"))),
            ShapeSpec::Ovate {
                length,
                width_ratio,
                skew,
            } => ovate_template("ovate", *length, *width_ratio, *skew),
        }
    }
}

/// Leaf placement: where the template centroid lands, rotation and scale.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Placement {
    pub center: Point,
    pub theta: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafSpec {
    pub shape: ShapeSpec,
    pub start: Placement,
    /// Added to `start` once per frame.
    #[serde(default)]
    pub drift: Placement,
    /// First frame the leaf exists in.
    #[serde(default)]
    pub birth: usize,
    /// First frame the leaf no longer exists in.
    #[serde(default)]
    pub death: Option<usize>,
    #[serde(default)]
    pub intensity: Option<f64>,
}

impl LeafSpec {
    pub fn builtin(name: &str, center: Point, theta: f64, r: f64) -> Self {
        LeafSpec {
            shape: ShapeSpec::Builtin(name.to_string()),
            start: Placement { center, theta, r },
            drift: Placement::default(),
            birth: 0,
            death: None,
            intensity: None,
        }
    }

    pub fn with_drift(mut self, center: Point, theta: f64, r: f64) -> Self {
        self.drift = Placement { center, theta, r };
        self
    }

    pub fn alive(mut self, birth: usize, death: Option<usize>) -> Self {
        self.birth = birth;
        self.death = death;
        self
    }

    fn placement(&self, frame: usize) -> Placement {
        let k = frame as f64;
        Placement {
            center: self.start.center + self.drift.center * k,
            theta: self.start.theta + self.drift.theta * k,
            r: self.start.r + self.drift.r * k,
        }
    }

    fn is_alive(&self, frame: usize) -> bool {
        frame >= self.birth && self.death.map_or(true, |d| frame < d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub leaves: Vec<LeafSpec>,
    /// Plant center the scene was laid out around; informational.
    #[serde(default)]
    pub plant_center: Option<Point>,
    /// Standard deviation of the additive Gaussian noise.
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
    /// Leaves whose rasterized area is below this are left out of the labels.
    #[serde(default)]
    pub label_min_area: usize,
    #[serde(default = "default_video_id")]
    pub video_id: String,
}

fn default_video_id() -> String {
    "synth".to_string()
}

impl SynthSpec {
    pub fn new(width: usize, height: usize, frames: usize, leaves: Vec<LeafSpec>) -> Self {
        SynthSpec {
            width,
            height,
            frames,
            leaves,
            plant_center: None,
            noise: 0.0,
            seed: 0,
            label_min_area: 0,
            video_id: default_video_id(),
        }
    }
}

/// Ground truth of one leaf on one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthLeaf {
    pub id: u32,
    pub shape_id: String,
    pub pose: Pose,
    pub tips: [Point; 2],
    pub area: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFrame {
    pub frame: usize,
    pub leaves: Vec<TruthLeaf>,
}

#[derive(Debug, Clone)]
pub struct SynthVideo {
    pub frames: Vec<GrayImage>,
    /// Tips and IDs of labeled leaves, in the evaluation format.
    pub labels: VideoTips,
    /// Every existing leaf, labeled or not.
    pub truth: Vec<TruthFrame>,
    /// Union of the leaf masks per frame.
    pub masks: Vec<BinaryMask>,
    /// Template of each spec leaf, indexed by `id - 1`.
    pub templates: Vec<LeafTemplate>,
}

fn pose_for(template: &LeafTemplate, p: &Placement) -> Result<Pose> {
    if !(p.r > 0.0) {
        return Err(Error::invalid("leaf scale must stay positive"));
    }
    let c = template.centroid();
    Ok(Pose::new(p.theta, p.r, p.center.x - c.x, p.center.y - c.y))
}

/// 3x3 binomial blur with replicated borders.
fn blur(data: &[f64], w: usize, h: usize) -> Vec<f64> {
    let at = |x: isize, y: isize| data[y.clamp(0, h as isize - 1) as usize * w + x.clamp(0, w as isize - 1) as usize];
    let k = [1.0, 2.0, 1.0];
    let mut out = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut s = 0.0;
            for (j, kj) in k.iter().enumerate() {
                for (i, ki) in k.iter().enumerate() {
                    s += ki * kj * at(x + i as isize - 1, y + j as isize - 1);
                }
            }
            out[y as usize * w + x as usize] = s / 16.0;
        }
    }
    out
}

pub fn render_video(spec: &SynthSpec) -> Result<SynthVideo> {
    if spec.frames == 0 {
        return Err(Error::invalid("synthetic video needs at least one frame"));
    }
    if spec.width < 3 || spec.height < 3 {
        return Err(Error::invalid("synthetic frames must be at least 3x3"));
    }
    if !(spec.noise >= 0.0) {
        return Err(Error::invalid("noise level must be non-negative"));
    }
    let (w, h) = (spec.width, spec.height);
    let templates: Vec<LeafTemplate> = spec.leaves.iter().map(|l| l.shape.template()).collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise.max(f64::MIN_POSITIVE)).expect("valid deviation");

    let mut frames = Vec::with_capacity(spec.frames);
    let mut truth = Vec::with_capacity(spec.frames);
    let mut masks = Vec::with_capacity(spec.frames);
    let mut label_frames = Vec::with_capacity(spec.frames);
    for f in 0..spec.frames {
        let mut canvas = vec![BACKGROUND; w * h];
        let mut union = BinaryMask::empty(w, h);
        let mut leaves = Vec::new();
        let mut labeled = Vec::new();
        for (i, (leaf, template)) in spec.leaves.iter().zip(&templates).enumerate() {
            if !leaf.is_alive(f) {
                continue;
            }
            let pose = pose_for(template, &leaf.placement(f))?;
            let raster = backward_warp_mask(template, &pose, (w, h));
            let level = leaf.intensity.unwrap_or(0.7 + 0.05 * (i % 5) as f64);
            for &k in raster.indices() {
                canvas[k] = level;
                union.set(k % w, k / w, true);
            }
            let (o, inner) = warp_tips(template, &pose);
            let id = i as u32 + 1;
            if raster.area() >= spec.label_min_area && raster.area() > 0 {
                labeled.push(LeafRecord::Identified {
                    id,
                    tips: [o.x, o.y, inner.x, inner.y],
                });
            }
            leaves.push(TruthLeaf {
                id,
                shape_id: template.shape_id().to_string(),
                pose,
                tips: [o, inner],
                area: raster.area(),
            });
        }
        let mut data = blur(&canvas, w, h);
        if spec.noise > 0.0 {
            for v in &mut data {
                *v += noise.sample(&mut rng);
            }
        }
        for v in &mut data {
            *v = v.clamp(0.0, 1.0);
        }
        frames.push(GrayImage::new(w, h, data)?);
        masks.push(union);
        truth.push(TruthFrame { frame: f, leaves });
        label_frames.push(FrameTips {
            frame: f,
            leaves: labeled,
        });
    }
    Ok(SynthVideo {
        frames,
        labels: VideoTips {
            video_id: spec.video_id.clone(),
            frames: label_frames,
        },
        truth,
        masks,
        templates,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Perturbation {
    /// Rotation by `±magnitude` radians, sign drawn per leaf.
    Theta,
    /// Scale multiplied by `magnitude`.
    R,
    /// Translation by `magnitude` leaf lengths in a random direction.
    Txy,
}

/// Distorts poses for robustness experiments. `lengths` are the leaves'
/// frame-space tip-to-tip lengths.
pub fn perturb_poses(poses: &[Pose], lengths: &[f64], kind: Perturbation, magnitude: f64, seed: u64) -> Result<Vec<Pose>> {
    if poses.len() != lengths.len() {
        return Err(Error::DimensionMismatch("one length per pose required".into()));
    }
    if kind == Perturbation::R && !(magnitude > 0.0) {
        return Err(Error::invalid("scale factor must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(poses
        .iter()
        .zip(lengths)
        .map(|(p, &len)| match kind {
            Perturbation::Theta => {
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                Pose::new(p.theta + sign * magnitude, p.r, p.tx, p.ty)
            }
            Perturbation::R => Pose::new(p.theta, p.r * magnitude, p.tx, p.ty),
            Perturbation::Txy => {
                let phi = rng.gen_range(0.0..std::f64::consts::TAU);
                let d = magnitude * len;
                Pose::new(p.theta, p.r, p.tx + d * phi.cos(), p.ty + d * phi.sin())
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{evaluate, tip_error};
    use crate::imaging::foreground_mask;

    fn one_leaf(noise: f64) -> SynthSpec {
        let mut s = SynthSpec::new(64, 64, 1, vec![LeafSpec::builtin("ovate", Point::new(32.0, 30.0), 0.3, 1.0)]);
        s.noise = noise;
        s.seed = 11;
        s
    }

    #[test]
    fn foreground_recovers_truth_mask() {
        let v = render_video(&one_leaf(0.0)).unwrap();
        let fg = foreground_mask(&v.frames[0]).unwrap();
        assert!(fg.iou(&v.masks[0]) >= 0.98, "iou {}", fg.iou(&v.masks[0]));
    }

    #[test]
    fn same_seed_same_frames() {
        let a = render_video(&one_leaf(0.05)).unwrap();
        let b = render_video(&one_leaf(0.05)).unwrap();
        assert_eq!(a.frames, b.frames);
        let mut other = one_leaf(0.05);
        other.seed = 12;
        assert_ne!(render_video(&other).unwrap().frames, a.frames);
    }

    #[test]
    fn zero_frames_rejected() {
        let mut s = one_leaf(0.0);
        s.frames = 0;
        assert!(render_video(&s).is_err());
    }

    #[test]
    fn truth_labels_evaluate_perfectly() {
        let mut s = one_leaf(0.0);
        s.frames = 3;
        s.leaves.push(LeafSpec::builtin("elliptic", Point::new(20.0, 40.0), -1.0, 0.8));
        let v = render_video(&s).unwrap();
        let r = evaluate(&[v.labels.clone()], &[v.labels], false).unwrap();
        assert!(r.f.iter().all(|&f| f == 0.0));
        assert!(r.t.iter().all(|&t| t == 1.0));
        assert!(r.e.iter().all(|&e| e == Some(0.0)));
    }

    #[test]
    fn perturbations() {
        let poses = vec![Pose::new(0.2, 1.0, 3.0, 4.0), Pose::new(-0.5, 0.7, 0.0, 1.0)];
        let lens = vec![30.0, 21.0];
        for kind in [Perturbation::Theta, Perturbation::Txy] {
            assert_eq!(perturb_poses(&poses, &lens, kind, 0.0, 1).unwrap(), poses);
        }
        assert_eq!(perturb_poses(&poses, &lens, Perturbation::R, 1.0, 1).unwrap(), poses);
        let q = perturb_poses(&poses, &lens, Perturbation::Theta, 45f64.to_radians(), 3).unwrap();
        for (a, b) in poses.iter().zip(&q) {
            let d = crate::templates::normalize_angle(b.theta - a.theta).abs();
            assert!((d - 45f64.to_radians()).abs() < 1e-12);
        }
        let q = perturb_poses(&poses, &lens, Perturbation::Txy, 0.3, 3).unwrap();
        for ((a, b), l) in poses.iter().zip(&q).zip(&lens) {
            assert!(((b.tx - a.tx).hypot(b.ty - a.ty) - 0.3 * l).abs() < 1e-9);
        }
    }

    #[test]
    fn scale_perturbation_tip_error_closed_form() {
        let t = default_shapes().remove(0);
        let pose = Pose::new(0.4, 1.0, 10.0, 12.0);
        let scaled = perturb_poses(&[pose], &[t.tip_length()], Perturbation::R, 2.5, 0).unwrap()[0];
        let (o, i) = warp_tips(&t, &pose);
        let (o2, i2) = warp_tips(&t, &scaled);
        let c = t.centroid() + Point::new(pose.tx, pose.ty);
        // Scaling about the centroid moves each tip by (m - 1) times its offset.
        let expect = 1.5 * (o.dist(c) + i.dist(c)) / (2.0 * o.dist(i));
        let got = tip_error(&[o2.x, o2.y, i2.x, i2.y], &[o.x, o.y, i.x, i.y]).unwrap();
        assert!((got - expect).abs() < 1e-12);
    }
}
