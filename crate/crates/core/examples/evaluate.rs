//! Scores estimated tips against labels: a leaf swap in the last frame.
//!
//! `cargo run --example evaluate`

use leaftrack::eval::{evaluate, FrameTips, LeafRecord, Tips, VideoTips};

fn frame(frame: usize, leaves: &[(u32, Tips)]) -> FrameTips {
    FrameTips {
        frame,
        leaves: leaves.iter().map(|&(id, tips)| LeafRecord::Identified { id, tips }).collect(),
    }
}

fn main() -> leaftrack::Result<()> {
    let a = [10.0, 10.0, 10.0, 30.0];
    let b = [50.0, 10.0, 50.0, 30.0];
    let c = [90.0, 10.0, 90.0, 30.0];
    let near = |t: Tips, d: f64| [t[0] + d, t[1], t[2] + d, t[3]];
    let labels = VideoTips {
        video_id: "swap".into(),
        frames: (0..3).map(|f| frame(f, &[(1, a), (2, b), (3, c)])).collect(),
    };
    // Estimate 1 is lost on the last frame and a new estimate 4 takes its
    // place.
    let pred = VideoTips {
        video_id: "swap".into(),
        frames: vec![
            frame(0, &[(1, near(a, 1.0)), (2, near(b, 1.0)), (3, near(c, 1.0))]),
            frame(1, &[(1, near(a, 1.0)), (2, near(b, 1.0)), (3, near(c, 1.0))]),
            frame(2, &[(2, near(b, 1.0)), (3, near(c, 1.0)), (4, near(a, 2.0))]),
        ],
    };
    let rep = evaluate(&[pred], &[labels], false)?;
    println!("labeled leaves {}, count mismatch {}", rep.n_b, rep.f_total);
    println!("frame-level errors e1: {:?}", rep.e1);
    println!("video-level errors e2: {:?}", rep.e2);
    for tau in [0.04, 0.05, 0.1] {
        let (f, e, t) = rep.at(tau).expect("grid point");
        println!("tau {tau:.2}: F {f:.3}  E {e:?}  T {t:.3}");
    }
    Ok(())
}
