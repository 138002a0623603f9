//! Template library and chamfer matching on a synthetic frame.
//!
//! `cargo run --release --example templates`

use leaftrack::chamfer::{cm_distance, nominate};
use leaftrack::geometry::Point;
use leaftrack::imaging::analyze_frame;
use leaftrack::synth::{render_video, LeafSpec, SynthSpec};
use leaftrack::templates::{default_library, read_library_file, write_library_file, Pose};

fn main() -> leaftrack::Result<()> {
    let lib = default_library();
    println!(
        "library: {} shapes x {} scales x {} rotations = {} entries",
        lib.basic().len(),
        lib.scales().len(),
        lib.rotations().len(),
        lib.len()
    );
    let path = std::env::temp_dir().join("leaftrack_templates.json");
    write_library_file(&lib, 15.0, &path)?;
    let back = read_library_file(&path)?;
    println!("saved and reloaded {} entries from {}", back.len(), path.display());

    // One ovate leaf, tilted 30 degrees.
    let truth = LeafSpec::builtin("ovate", Point::new(32.0, 30.0), 30f64.to_radians(), 1.0);
    let mut spec = SynthSpec::new(64, 64, 1, vec![truth]);
    spec.noise = 0.02;
    let video = render_video(&spec)?;
    let a = analyze_frame(&video.frames[0], 0.1)?;
    println!("frame: {} edge points, mask area {}", a.edges.len(), a.mask.count());

    let t = &lib.basic()[0];
    let pose = video.truth[0].leaves[0].pose;
    for dx in [0.0, 1.0, 3.0, 6.0] {
        let p = Pose::new(pose.theta, pose.r, pose.tx + dx, pose.ty);
        println!("ovate template shifted {dx} px: CM distance {:.3}", cm_distance(&t.warp_edges(&p), &a.dt)?);
    }

    let mut nom = nominate(&lib, &a.edges, &a.dt, &a.mask, 0.85)?.candidates;
    nom.sort_by(|x, y| x.cm_distance.total_cmp(&y.cm_distance));
    println!("{} nominees; best five:", nom.len());
    for c in nom.iter().take(5) {
        println!(
            "  {:<10} scale {:.2} rotation {:>5.1} deg  d {:.3}  area {}",
            lib.basic()[c.entry.shape].shape_id(),
            lib.scales()[c.entry.scale],
            c.pose.theta.to_degrees(),
            c.cm_distance,
            c.warped_mask.area()
        );
    }
    Ok(())
}
