//! Alignment and tracking quality models trained on deliberately
//! misplaced leaves, then failure detection on a margin trace.
//!
//! `cargo run --release --example quality`

use leaftrack::eval::tip_error;
use leaftrack::geometry::Point;
use leaftrack::imaging::analyze_frame;
use leaftrack::quality::{
    alignment_target, detect_tracking_failure, extract_align_features, extract_track_features, r_squared,
    train_regression, train_svm, LeafSnapshot, DEFAULT_MIN_RUN, DEFAULT_SMOOTH_SIGMA,
};
use leaftrack::synth::{perturb_poses, render_video, LeafSpec, Perturbation, SynthSpec};
use leaftrack::templates::default_library;
use leaftrack::track::leaves_from_poses;

fn main() -> leaftrack::Result<()> {
    let c = Point::new(40.0, 40.0);
    let leaves = [("ovate", 0.0, 0.9), ("elliptic", 120.0, 0.8), ("spatulate", 240.0, 0.85)]
        .iter()
        .map(|&(shape, deg, r)| {
            let th = f64::to_radians(deg);
            LeafSpec::builtin(shape, c + Point::new(th.sin(), -th.cos()) * (15.0 * r + 4.0), th, r)
        })
        .collect();
    let mut spec = SynthSpec::new(80, 80, 1, leaves);
    spec.noise = 0.02;
    let video = render_video(&spec)?;
    let a = analyze_frame(&video.frames[0], 0.1)?;
    let lib = default_library();
    let truth = &video.truth[0].leaves;
    let shapes: Vec<usize> = truth
        .iter()
        .map(|l| lib.basic().iter().position(|t| t.shape_id() == l.shape_id).expect("built-in shape"))
        .collect();
    let poses: Vec<_> = truth.iter().map(|l| l.pose).collect();
    let lengths: Vec<f64> = truth.iter().map(|l| l.tips[0].dist(l.tips[1])).collect();
    let reference = leaves_from_poses(&lib, &shapes.iter().copied().zip(poses.clone()).collect::<Vec<_>>(), &a)?;

    // Misplace the leaves by growing amounts and record features and errors.
    let mut align = Vec::new();
    let mut track = Vec::new();
    let mut errors = Vec::new();
    for k in 0..60u64 {
        let magnitude = 0.02 * (k % 20) as f64;
        let moved = perturb_poses(&poses, &lengths, Perturbation::Txy, magnitude, k)?;
        let set = leaves_from_poses(&lib, &shapes.iter().copied().zip(moved).collect::<Vec<_>>(), &a)?;
        for ((m, r), l) in set.members.iter().zip(&reference.members).zip(truth) {
            let t = m.candidate.tips;
            let e = tip_error(&[t.0.x, t.0.y, t.1.x, t.1.y], &[l.tips[0].x, l.tips[0].y, l.tips[1].x, l.tips[1].y])?;
            let x = extract_align_features(&m.candidate, &a.mask, a.plant_center)?;
            let now = LeafSnapshot::of(&m.candidate, &a.mask, a.plant_center)?;
            let before = LeafSnapshot::of(&r.candidate, &a.mask, a.plant_center)?;
            align.push((x, alignment_target(e)));
            track.push((extract_track_features(&now, &before)?, if e < 0.2 { 1 } else { -1 }));
            errors.push(e);
        }
    }
    let (train, test) = align.split_at(120);
    let model = train_regression(train)?;
    let pred: Vec<f64> = test.iter().map(|(x, _)| model.predict(x)).collect();
    let actual: Vec<f64> = test.iter().map(|s| s.1).collect();
    println!("alignment quality: held-out R2 {:.3} on {} leaves", r_squared(&pred, &actual)?, test.len());

    let svm = train_svm(&track, 1.0)?;
    let correct = track.iter().filter(|(x, y)| svm.predict(x) == *y).count();
    println!("tracking quality: {correct}/{} training leaves classified correctly", track.len());

    // A leaf drifting off and back: margins along its track.
    let margins: Vec<f64> = (0..40u64)
        .map(|f| {
            let magnitude = if (15..27).contains(&f) { 0.35 } else { 0.02 };
            let moved = perturb_poses(&poses[..1], &lengths[..1], Perturbation::Txy, magnitude, f)?;
            let set = leaves_from_poses(&lib, &[(shapes[0], moved[0])], &a)?;
            let now = LeafSnapshot::of(&set.members[0].candidate, &a.mask, a.plant_center)?;
            let before = LeafSnapshot::of(&reference.members[0].candidate, &a.mask, a.plant_center)?;
            Ok(svm.margin(&extract_track_features(&now, &before)?))
        })
        .collect::<leaftrack::Result<_>>()?;
    let runs = detect_tracking_failure(&margins, DEFAULT_SMOOTH_SIGMA, DEFAULT_MIN_RUN);
    println!("planted failure on frames 15..=26; detected runs {runs:?}");
    Ok(())
}
