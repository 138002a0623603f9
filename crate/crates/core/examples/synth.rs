//! Renders a synthetic plant video and writes its frames and labels.
//!
//! `cargo run --release --example synth -- [out_dir]`

use leaftrack::fmt::to_json_pretty;
use leaftrack::geometry::Point;
use leaftrack::imaging::io::write_frame;
use leaftrack::synth::{render_video, LeafSpec, SynthSpec};
use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("leaftrack_synth"));
    let c = Point::new(48.0, 48.0);
    let shapes = ["ovate", "elliptic", "spatulate"];
    let leaves = (0..3)
        .map(|k| {
            let th = (120.0 * k as f64 + 20.0f64).to_radians();
            let r = 0.8 + 0.1 * k as f64;
            let center = c + Point::new(th.sin(), -th.cos()) * (15.0 * r + 5.0);
            LeafSpec::builtin(shapes[k], center, th, r).with_drift(Point::default(), 1f64.to_radians(), 0.005)
        })
        .collect();
    let mut spec = SynthSpec::new(96, 96, 10, leaves);
    spec.noise = 0.02;
    spec.seed = 1;

    let video = render_video(&spec)?;
    std::fs::create_dir_all(&out)?;
    for (k, f) in video.frames.iter().enumerate() {
        write_frame(f, &out.join(format!("frame_{k:04}.png")))?;
    }
    std::fs::write(out.join("labels.json"), to_json_pretty(&video.labels))?;
    for t in video.truth.iter().step_by(3) {
        let areas: Vec<usize> = t.leaves.iter().map(|l| l.area).collect();
        println!("frame {}: leaf areas {areas:?}", t.frame);
    }
    println!("wrote {} frames and labels to {}", video.frames.len(), out.display());
    Ok(())
}
