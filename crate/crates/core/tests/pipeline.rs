mod common;

use common::*;
use leaftrack::chamfer::{cm_distance, nominate};
use leaftrack::imaging::analyze_frame;
use leaftrack::synth::render_video;
use leaftrack::templates::{backward_warp_mask, build_library, default_shapes, Pose};
use leaftrack::track::{refine_poses, track_frame, track_video, PipelineConfig, TrackScene};
use leaftrack::eval::evaluate;
use std::collections::BTreeSet;

#[test]
fn rosette_ids_and_areas() {
    let video = render_video(&rosette_video()).unwrap();
    let lib = leaftrack::templates::default_library();
    let cfg = PipelineConfig::default();
    let frames = track_video(&video.frames, &lib, &cfg).unwrap();
    assert_eq!(frames.len(), 30);

    // Processing runs from the last frame back; an ID that leaves the set
    // never comes back.
    let mut retired = BTreeSet::new();
    let mut prev: BTreeSet<u32> = BTreeSet::new();
    for f in frames.iter().rev() {
        let ids: Vec<u32> = f.result.leaves.iter().map(|l| l.id).collect();
        let set: BTreeSet<u32> = ids.iter().copied().collect();
        assert_eq!(set.len(), ids.len(), "duplicate ID on frame {}", f.result.frame);
        assert!(set.is_disjoint(&retired), "retired ID back on frame {}", f.result.frame);
        retired.extend(prev.difference(&set).copied());
        prev = set;
    }

    for f in &frames {
        for m in &f.leaves.members {
            let t = &lib.basic()[m.candidate.entry.shape];
            let area = backward_warp_mask(t, &m.candidate.pose, f.mask.dims()).area();
            assert_eq!(m.candidate.warped_mask.area(), area);
            assert!(area >= cfg.track.min_leaf_area);
        }
    }

    // G decreases on nearly every accepted iteration.
    let (mut down, mut total) = (0, 0);
    for k in (0..29).rev() {
        let from = &frames[k + 1].leaves;
        let a = analyze_frame(&video.frames[k], cfg.edge_threshold).unwrap();
        let templates: Vec<_> = from.members.iter().map(|m| &lib.basic()[m.candidate.entry.shape]).collect();
        let poses: Vec<Pose> = from.members.iter().map(|m| m.candidate.pose).collect();
        let r = refine_poses(&poses, &templates, &TrackScene::from_analysis(&a), &cfg.track).unwrap();
        for w in r.trace.windows(2) {
            total += 1;
            down += (w[1] <= w[0]) as usize;
        }
    }
    assert!(down as f64 >= 0.95 * total as f64, "{down}/{total} non-increasing steps");
}

#[test]
fn tracking_a_frame_is_deterministic() {
    let video = render_video(&four_leaf_video(2)).unwrap();
    let lib = leaftrack::templates::default_library();
    let cfg = PipelineConfig::default();
    let frames = track_video(&video.frames[1..], &lib, &cfg).unwrap();
    let a = track_frame(&frames[0].leaves, &video.frames[0], 0, &lib, &cfg).unwrap().2;
    let b = track_frame(&frames[0].leaves, &video.frames[0], 0, &lib, &cfg).unwrap().2;
    assert_eq!(a, b);
}

#[test]
fn four_leaf_video_tracks_cleanly() {
    let spec = four_leaf_video(6);
    let video = render_video(&spec).unwrap();
    let frames = track_video(&video.frames, &leaftrack::templates::default_library(), &PipelineConfig::default()).unwrap();
    let rep = evaluate(&[predictions(&spec.video_id, &frames)], &[video.labels], false).unwrap();
    let (f, e, t) = rep.at(0.3).unwrap();
    assert_eq!((f, t), (0.0, 1.0));
    assert!(e.unwrap() < 0.15);
}

#[test]
fn nomination_takes_the_best_translation_and_keeps_every_covering_entry() {
    let video = render_video(&robustness_scene(1)).unwrap();
    let a = analyze_frame(&video.frames[0], 0.1).unwrap();
    let lib = build_library(default_shapes(), vec![0.6, 0.8], 45.0).unwrap();
    let overlap_min = 0.85;
    let nom = nominate(&lib, &a.edges, &a.dt, &a.mask, overlap_min).unwrap();

    let (x0, y0, x1, y1) = a.mask.bounding_box().unwrap();
    let mut covering = 0;
    for entry in lib.entries() {
        let t = lib.template(entry);
        let base = lib.entry_pose(entry);
        let grow = 0.25 * base.r * t.tip_length();
        let c = t.centroid();
        let pts = t.warp_edges(&base);
        // Exhaustive scan with the plain sampled distance.
        let mut best: Option<(f64, Pose)> = None;
        for ty in (y0 as f64 - grow - c.y).ceil() as i64..=(y1 as f64 + grow - c.y).floor() as i64 {
            for tx in (x0 as f64 - grow - c.x).ceil() as i64..=(x1 as f64 + grow - c.x).floor() as i64 {
                let shift = leaftrack::geometry::Point::new(tx as f64, ty as f64);
                let moved: Vec<_> = pts.iter().map(|&p| p + shift).collect();
                let d = cm_distance(&moved, &a.dt).unwrap();
                if best.map_or(true, |(b, _)| d < b) {
                    best = Some((d, Pose::new(base.theta, base.r, tx as f64, ty as f64)));
                }
            }
        }
        let (d, pose) = best.unwrap();
        match nom.candidates.iter().find(|n| n.entry == *entry) {
            Some(n) => {
                assert!((n.cm_distance - d).abs() < 1e-9, "{entry:?}: {} vs {d}", n.cm_distance);
                assert!(n.warped_mask.overlap(&a.mask) as f64 >= overlap_min * n.warped_mask.area() as f64);
                covering += 1;
            }
            None => {
                let m = backward_warp_mask(t, &pose, a.mask.dims());
                assert!(
                    m.area() == 0 || (m.overlap(&a.mask) as f64) < overlap_min * m.area() as f64,
                    "{entry:?} covers the mask but was pruned"
                );
            }
        }
    }
    assert_eq!(covering, nom.len());
}
