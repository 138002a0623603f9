#![allow(dead_code)]

use leaftrack::chamfer::{NominationSet, TransformedCandidate};
use leaftrack::eval::{FrameTips, LeafRecord, VideoTips};
use leaftrack::geometry::Point;
use leaftrack::synth::{LeafSpec, SynthSpec};
use leaftrack::templates::{LibraryEntry, Pose, WarpedMask};
use leaftrack::track::TrackedFrame;

/// Filled ellipse pixels, row-major indices.
pub fn ellipse(w: usize, h: usize, c: Point, a: f64, b: f64, phi: f64) -> Vec<usize> {
    let (s, co) = phi.sin_cos();
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let dx = x as f64 - c.x;
            let dy = y as f64 - c.y;
            let u = co * dx + s * dy;
            let v = -s * dx + co * dy;
            if (u / a).powi(2) + (v / b).powi(2) <= 1.0 {
                out.push(y * w + x);
            }
        }
    }
    out
}

/// A nominee with a given mask, chamfer distance and angle term. `tag`
/// becomes the rotation index so the nominee can be recognized later.
pub fn nominee(indices: Vec<usize>, w: usize, h: usize, d: f64, l: f64, tag: usize) -> TransformedCandidate {
    TransformedCandidate {
        entry: LibraryEntry {
            shape: 0,
            scale: 0,
            rotation: tag,
        },
        pose: Pose::identity(),
        warped_mask: WarpedMask::new(w, h, indices),
        cm_distance: d,
        angle_term: l,
        center: Point::default(),
        tips: (Point::default(), Point::default()),
    }
}

pub fn nomination(cands: Vec<TransformedCandidate>, w: usize, h: usize) -> NominationSet {
    NominationSet {
        candidates: cands,
        frame_dims: (w, h),
    }
}

/// Leaves arranged radially around the frame center, each pointing away
/// from it.
pub fn radial_leaf(c: Point, angle_deg: f64, r: f64, shape: &str, reach: f64) -> LeafSpec {
    let th = angle_deg.to_radians();
    let ctr = c + Point::new(th.sin(), -th.cos()) * reach;
    LeafSpec::builtin(shape, ctr, th, r)
}

/// Single-frame scene of 3 or 4 radial leaves, used by the robustness
/// protocol.
pub fn robustness_scene(k: u64) -> SynthSpec {
    let c = Point::new(40.0, 40.0);
    let shapes = ["ovate", "elliptic", "spatulate"];
    let n = 3 + (k % 2) as usize;
    let leaves = (0..n)
        .map(|i| {
            let r = 0.7 + 0.1 * ((i + k as usize) % 3) as f64;
            let angle = i as f64 * 360.0 / n as f64 + 10.0 * k as f64;
            radial_leaf(c, angle, r, shapes[(i + k as usize) % 3], r * 15.0 + 4.0)
        })
        .collect();
    let mut s = SynthSpec::new(80, 80, 1, leaves);
    s.noise = 0.02;
    s.seed = 100 + k;
    s
}

/// 30-frame rosette: four drifting leaves, one shrinking below the deletion
/// size and one appearing at frame 8 and growing.
pub fn rosette_video() -> SynthSpec {
    let c = Point::new(48.0, 48.0);
    let shapes = ["ovate", "elliptic", "spatulate", "ovate", "elliptic", "spatulate"];
    let rs = [0.9, 0.8, 0.95, 0.75, 0.8, 0.3];
    let leaves = (0..6)
        .map(|k| {
            let leaf = radial_leaf(c, k as f64 * 60.0 + 15.0, rs[k], shapes[k], rs[k].max(0.8) * 15.0 + 5.0);
            let sgn = if k % 2 == 0 { 1.0 } else { -1.0 };
            match k {
                4 => leaf.with_drift(Point::default(), 0.0, -0.022),
                5 => leaf.with_drift(Point::default(), 0.0, 0.025).alive(8, None),
                _ => leaf.with_drift(Point::new(0.08, -0.08) * sgn, sgn * 0.4f64.to_radians(), -0.002),
            }
        })
        .collect();
    let mut s = SynthSpec::new(96, 96, 30, leaves);
    s.noise = 0.02;
    s.seed = 11;
    s.label_min_area = 64;
    s.video_id = "rosette".into();
    s
}

/// Four radial leaves rotating slowly on an 80x80 frame.
pub fn four_leaf_video(frames: usize) -> SynthSpec {
    let c = Point::new(40.0, 40.0);
    let shapes = ["ovate", "elliptic", "spatulate", "ovate"];
    let rs = [0.9, 0.75, 1.0, 0.65];
    let leaves = (0..4)
        .map(|k| {
            let sgn = if k % 2 == 0 { 1.0 } else { -1.0 };
            radial_leaf(c, k as f64 * 90.0 + 20.0, rs[k], shapes[k], rs[k] * 15.0 + 4.0).with_drift(
                Point::new(0.1, -0.1) * sgn,
                sgn * 3f64.to_radians(),
                -0.004,
            )
        })
        .collect();
    let mut s = SynthSpec::new(80, 80, frames, leaves);
    s.noise = 0.02;
    s.seed = 3;
    s
}

/// Tracker output in the evaluation format.
pub fn predictions(video_id: &str, frames: &[TrackedFrame]) -> VideoTips {
    VideoTips {
        video_id: video_id.to_string(),
        frames: frames
            .iter()
            .map(|f| FrameTips {
                frame: f.result.frame,
                leaves: f
                    .result
                    .leaves
                    .iter()
                    .map(|l| LeafRecord::Identified {
                        id: l.id,
                        tips: [l.tips[0].x, l.tips[0].y, l.tips[1].x, l.tips[1].y],
                    })
                    .collect(),
            })
            .collect(),
    }
}

pub fn tips4(t: [Point; 2]) -> [f64; 4] {
    [t[0].x, t[0].y, t[1].x, t[1].y]
}
