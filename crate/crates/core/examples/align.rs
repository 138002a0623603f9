//! Joint segmentation and alignment of a single frame.
//!
//! `cargo run --release --example align`

use leaftrack::eval::leaf_match;
use leaftrack::geometry::Point;
use leaftrack::synth::{render_video, LeafSpec, SynthSpec};
use leaftrack::templates::default_library;
use leaftrack::track::{align_frame, PipelineConfig};

fn main() -> leaftrack::Result<()> {
    let c = Point::new(40.0, 40.0);
    let leaves = [("ovate", 10.0, 0.9), ("elliptic", 130.0, 0.75), ("spatulate", 245.0, 0.85)]
        .iter()
        .map(|&(shape, deg, r)| {
            let th = f64::to_radians(deg);
            LeafSpec::builtin(shape, c + Point::new(th.sin(), -th.cos()) * (15.0 * r + 4.0), th, r)
        })
        .collect();
    let mut spec = SynthSpec::new(80, 80, 1, leaves);
    spec.noise = 0.02;
    let video = render_video(&spec)?;

    let (set, analysis, result) = align_frame(&video.frames[0], 0, &default_library(), &PipelineConfig::default())?;
    println!("mask area {}, {} edge points", analysis.mask.count(), analysis.edges.len());
    for l in &result.leaves {
        let m = set.members.iter().find(|m| m.id == l.id).expect("leaf in set");
        println!(
            "leaf {}: {:<9} theta {:>6.1} deg  r {:.2}  d {:.3}  tips ({:.1}, {:.1}) ({:.1}, {:.1})",
            l.id,
            default_library().basic()[m.candidate.entry.shape].shape_id(),
            l.pose.theta.to_degrees(),
            l.pose.r,
            l.d,
            l.tips[0].x,
            l.tips[0].y,
            l.tips[1].x,
            l.tips[1].y
        );
    }
    let est: Vec<[f64; 4]> = result.leaves.iter().map(|l| [l.tips[0].x, l.tips[0].y, l.tips[1].x, l.tips[1].y]).collect();
    let lab: Vec<[f64; 4]> = video.labels.frames[0].leaves.iter().map(|l| l.tips()).collect();
    let m = leaf_match(&est, &lab, false)?;
    for &(i, j) in &m.pairs {
        println!("estimate {} <-> truth {}: tip error {:.3}", result.leaves[i].id, j + 1, m.er[i][j]);
    }
    println!("count mismatch: {}", m.f);
    Ok(())
}
