//! Tracks a drifting rosette through a video and scores it against truth.
//!
//! `cargo run --release --example track`

use leaftrack::eval::{evaluate, FrameTips, LeafRecord, VideoTips};
use leaftrack::geometry::Point;
use leaftrack::synth::{render_video, LeafSpec, SynthSpec};
use leaftrack::templates::default_library;
use leaftrack::track::{track_video, PipelineConfig};

fn main() -> leaftrack::Result<()> {
    let c = Point::new(48.0, 48.0);
    let shapes = ["ovate", "elliptic", "spatulate", "ovate", "elliptic"];
    let mut leaves: Vec<LeafSpec> = (0..4)
        .map(|k| {
            let th = (90.0 * k as f64 + 15.0f64).to_radians();
            let r = 0.8 + 0.05 * k as f64;
            let sgn = if k % 2 == 0 { 1.0 } else { -1.0 };
            LeafSpec::builtin(shapes[k], c + Point::new(th.sin(), -th.cos()) * (15.0 * r + 5.0), th, r).with_drift(
                Point::new(0.1, -0.1) * sgn,
                sgn * 0.5f64.to_radians(),
                -0.003,
            )
        })
        .collect();
    // A young leaf that appears halfway and grows.
    let th = 60f64.to_radians();
    leaves.push(
        LeafSpec::builtin(shapes[4], c + Point::new(th.sin(), -th.cos()) * 17.0, th, 0.35)
            .with_drift(Point::default(), 0.0, 0.03)
            .alive(10, None),
    );
    let mut spec = SynthSpec::new(96, 96, 20, leaves);
    spec.noise = 0.02;
    spec.seed = 2;
    spec.label_min_area = 64;
    let video = render_video(&spec)?;

    let t0 = std::time::Instant::now();
    let frames = track_video(&video.frames, &default_library(), &PipelineConfig::default())?;
    println!("tracked {} frames in {:.2} s", frames.len(), t0.elapsed().as_secs_f64());
    for f in frames.iter().step_by(4) {
        let ids: Vec<u32> = f.result.leaves.iter().map(|l| l.id).collect();
        println!("frame {:>2}: ids {ids:?}", f.result.frame);
    }

    let pred = VideoTips {
        video_id: spec.video_id.clone(),
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
    };
    let rep = evaluate(&[pred], &[video.labels], false)?;
    println!("  tau      F      E      T");
    for tau in [0.05, 0.1, 0.2, 0.3] {
        let (f, e, t) = rep.at(tau).expect("grid point");
        println!("{tau:>5.2} {f:>6.3} {:>6} {t:>6.3}", e.map_or("-".to_string(), |e| format!("{e:.3}")));
    }
    Ok(())
}
