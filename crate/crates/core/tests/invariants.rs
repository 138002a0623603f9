mod common;

use common::*;
use leaftrack::align::{optimize_selection, select_candidates, AlignConfig, AlignProblem, Fixed};
use leaftrack::chamfer::cm_distance;
use leaftrack::eval::{evaluate, FrameTips, LeafRecord, VideoTips};
use leaftrack::geometry::Point;
use leaftrack::imaging::{connected_components, distance_transform, gaussian_smooth_1d, BinaryMask, EdgeMap};
use leaftrack::quality::{detect_tracking_failure, train_regression, train_svm, AlignFeatures, TrackFeatures};
use leaftrack::templates::{backward_warp_mask, forward_warp, inverse_warp, ovate_template, warp_tips, Pose};
use leaftrack::track::FrameResult;
use proptest::prelude::*;

fn pose() -> impl Strategy<Value = Pose> {
    (-3.2f64..3.2, 0.2f64..4.0, -80.0f64..80.0, -80.0f64..80.0).prop_map(|(th, r, tx, ty)| Pose::new(th, r, tx, ty))
}

fn point() -> impl Strategy<Value = Point> {
    (-100.0f64..100.0, -100.0f64..100.0).prop_map(|(x, y)| Point::new(x, y))
}

fn grid_points(w: usize, h: usize, max: usize) -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec((0..w, 0..h).prop_map(|(x, y)| Point::new(x as f64, y as f64)), 1..max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_field_is_exact_and_lipschitz(pts in grid_points(20, 14, 30)) {
        let dt = distance_transform(&EdgeMap::new(pts.clone(), 20, 14).unwrap()).unwrap();
        for y in 0..14 {
            for x in 0..20 {
                let p = Point::new(x as f64, y as f64);
                let brute = pts.iter().map(|q| p.dist(*q)).fold(f64::INFINITY, f64::min);
                prop_assert!((dt.at(x, y) - brute).abs() <= 1e-9);
                if x + 1 < 20 {
                    prop_assert!((dt.at(x, y) - dt.at(x + 1, y)).abs() <= 1.0 + 1e-12);
                }
                if y + 1 < 14 {
                    prop_assert!((dt.at(x, y) - dt.at(x, y + 1)).abs() <= 1.0 + 1e-12);
                }
                if x + 1 < 20 && y + 1 < 14 {
                    prop_assert!((dt.at(x, y) - dt.at(x + 1, y + 1)).abs() <= 2f64.sqrt() + 1e-12);
                }
            }
        }
    }

    #[test]
    fn components_partition_the_mask(bits in prop::collection::vec(prop::bool::weighted(0.35), 16 * 12)) {
        let mask = BinaryMask::new(16, 12, bits.iter().map(|&b| b as u8).collect()).unwrap();
        let comps = connected_components(&mask);
        let mut cover = vec![0u8; 16 * 12];
        for c in &comps {
            prop_assert_eq!(c.area, c.mask.count());
            for k in c.mask.indices() {
                cover[k] += 1;
            }
        }
        prop_assert_eq!(cover, mask.bits().to_vec());
    }

    #[test]
    fn smoothing_commutes_with_shifts_in_the_interior(
        bump in prop::collection::vec(-1.0f64..1.0, 1..8),
        shift in 0usize..10,
        sigma in 0.5f64..3.0,
    ) {
        let pad = 12;
        let place = |at: usize| {
            let mut s = vec![0.0; 2 * pad + bump.len() + 10];
            s[at..at + bump.len()].copy_from_slice(&bump);
            s
        };
        let a = gaussian_smooth_1d(&place(pad), sigma);
        let b = gaussian_smooth_1d(&place(pad + shift), sigma);
        for i in pad - 3..pad + bump.len() + 3 {
            prop_assert!((a[i] - b[i + shift]).abs() < 1e-12);
        }
    }

    #[test]
    fn smoothing_keeps_the_mean_of_periodic_signals(
        period in prop::collection::vec(-1.0f64..1.0, 2..9),
        sigma in 0.5f64..2.5,
    ) {
        let signal: Vec<f64> = period.iter().cycle().take(period.len() * 20).copied().collect();
        let out = gaussian_smooth_1d(&signal, sigma);
        let start = period.len() * 10;
        let mean_in = period.iter().sum::<f64>() / period.len() as f64;
        let mean_out = out[start..start + period.len()].iter().sum::<f64>() / period.len() as f64;
        prop_assert!((mean_in - mean_out).abs() < 1e-12);
    }

    #[test]
    fn warp_round_trip_and_centroid(p in pose(), pts in prop::collection::vec(point(), 1..20)) {
        let c = Point::mean(&pts).unwrap();
        let fwd = forward_warp(&pts, c, &p);
        for (a, b) in inverse_warp(&fwd, c, &p).iter().zip(&pts) {
            prop_assert!(a.dist(*b) <= 1e-9);
        }
        let moved = Point::mean(&fwd).unwrap();
        prop_assert!(moved.dist(c + Point::new(p.tx, p.ty)) <= 1e-9);
    }

    #[test]
    fn warped_tips_scale_with_r(p in pose(), len in 8.0f64..40.0, ratio in 0.3f64..0.7) {
        let t = ovate_template("t", len, ratio, 1.0).unwrap();
        let (a, b) = warp_tips(&t, &p);
        prop_assert!((a.dist(b) - p.r * t.tip_length()).abs() <= 1e-9);
    }

    #[test]
    fn warped_mask_area_tracks_r_squared(th in -3.2f64..3.2, r in 0.6f64..2.0) {
        let t = ovate_template("t", 24.0, 0.5, 1.0).unwrap();
        let c = t.centroid();
        let p = Pose::new(th, r, 60.0 - c.x, 60.0 - c.y);
        let area = backward_warp_mask(&t, &p, (120, 120)).area() as f64;
        let ratio = area / t.mask().count() as f64 / (r * r);
        prop_assert!((0.85..=1.15).contains(&ratio), "ratio {}", ratio);
    }

    #[test]
    fn chamfer_ignores_order_and_never_grows_with_more_edges(
        edges in grid_points(30, 30, 20),
        extra in grid_points(30, 30, 10),
        tx in 0i64..8,
        ty in 0i64..4,
    ) {
        let t = ovate_template("t", 18.0, 0.5, 1.0).unwrap();
        let pts = t.warp_edges(&Pose::new(0.0, 1.0, tx as f64, ty as f64));
        let dt = distance_transform(&EdgeMap::new(edges.clone(), 30, 30).unwrap()).unwrap();
        let d = cm_distance(&pts, &dt).unwrap();
        let mut rev = pts.clone();
        rev.reverse();
        prop_assert!((cm_distance(&rev, &dt).unwrap() - d).abs() < 1e-9);
        let more = distance_transform(&EdgeMap::new([edges, extra].concat(), 30, 30).unwrap()).unwrap();
        prop_assert!(cm_distance(&pts, &more).unwrap() <= d + 1e-12);
    }

    #[test]
    fn selection_is_deterministic_and_fixes_to_the_better_endpoint(
        shapes in prop::collection::vec((6.0f64..26.0, 6.0f64..26.0, 3.0f64..7.0, 2.0f64..4.0, 0.0f64..3.2, 0.0f64..2.0), 2..8),
        keep in prop::collection::vec(any::<bool>(), 8),
    ) {
        let (w, h) = (32, 32);
        let masks: Vec<Vec<usize>> = shapes.iter().map(|s| ellipse(w, h, Point::new(s.0, s.1), s.2, s.3, s.4)).collect();
        let mut m = vec![0u8; w * h];
        for (mk, _) in masks.iter().zip(&keep).filter(|(_, &k)| k) {
            mk.iter().for_each(|&p| m[p] = 1);
        }
        let nom = nomination(masks.iter().enumerate().map(|(k, mk)| nominee(mk.clone(), w, h, shapes[k].5, 0.01, k)).collect(), w, h);
        let mask = BinaryMask::new(w, h, m).unwrap();
        let cfg = AlignConfig::default();
        let a = select_candidates(&nom, &mask, &cfg).unwrap();
        let b = select_candidates(&nom, &mask, &cfg).unwrap();
        prop_assert!(!a.is_empty());
        prop_assert_eq!(FrameResult::from_set(0, &a), FrameResult::from_set(0, &b));
        let sel = optimize_selection(&AlignProblem::from_nomination(&nom, &mask).unwrap(), &cfg).unwrap();
        for s in &sel.steps {
            let expect = s.j_at_zero.min(s.j_at_one);
            prop_assert_eq!(s.j_after, expect);
            prop_assert_eq!(s.fixed_to, if s.j_at_one < s.j_at_zero { Fixed::One } else { Fixed::Zero });
        }
    }

    #[test]
    fn curves_are_monotone_and_bounded(seed in any::<u64>()) {
        let (pred, lab) = random_tip_sets(seed);
        let rep = evaluate(&pred, &lab, false).unwrap();
        let floor = rep.f_total as f64 / rep.n_b as f64;
        prop_assert!(rep.f.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(rep.t.windows(2).all(|w| w[1] >= w[0]));
        // Surplus estimates count as unmatched on top of the labels, so F is
        // bounded by the larger leaf count per frame rather than by 1.
        let ceiling = pred[0].frames.iter().zip(&lab[0].frames)
            .map(|(p, l)| p.leaves.len().max(l.leaves.len())).sum::<usize>() as f64 / rep.n_b as f64;
        prop_assert!(rep.f.iter().all(|&f| f >= floor - 1e-12 && f <= ceiling + 1e-12));
        prop_assert!(rep.t.iter().all(|&t| (0.0..=1.0).contains(&t)));
    }

    #[test]
    fn regression_residuals_are_orthogonal_to_the_design(
        rows in prop::collection::vec((prop::array::uniform6(-1.0f64..1.0), -2.0f64..2.0), 10..40),
    ) {
        let samples: Vec<(AlignFeatures, f64)> = rows.iter().map(|(x, y)| (AlignFeatures(*x), *y)).collect();
        let model = train_regression(&samples).unwrap();
        let res: Vec<f64> = samples.iter().map(|(x, y)| y - model.raw(x)).collect();
        prop_assert!(res.iter().sum::<f64>().abs() < 1e-6);
        for k in 0..6 {
            let dot: f64 = samples.iter().zip(&res).map(|((x, _), r)| x.0[k] * r).sum();
            prop_assert!(dot.abs() < 1e-6, "column {} dot {}", k, dot);
        }
    }

    #[test]
    fn failure_runs_are_disjoint_long_and_negative(
        margins in prop::collection::vec(-1.0f64..1.0, 0..120),
        sigma in 0.5f64..4.0,
        min_run in 1usize..8,
    ) {
        let runs = detect_tracking_failure(&margins, sigma, min_run);
        let smooth = gaussian_smooth_1d(&margins, sigma);
        let mut last_end: Option<usize> = None;
        for &(s, e) in &runs {
            prop_assert!(e + 1 - s >= min_run);
            prop_assert!(last_end.map_or(true, |l| s > l + 1));
            prop_assert!(smooth[s..=e].iter().all(|&v| v < 0.0));
            last_end = Some(e);
        }
    }
}

fn random_tip_sets(seed: u64) -> (Vec<VideoTips>, Vec<VideoTips>) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let frames = rng.gen_range(1..5);
    let n = rng.gen_range(1..5);
    let mk = |rng: &mut rand_chacha::ChaCha8Rng, count: usize, base: u32| -> Vec<LeafRecord> {
        (0..count)
            .map(|i| {
                let (x, y) = (rng.gen_range(0.0..60.0), rng.gen_range(0.0..60.0));
                LeafRecord::Identified {
                    id: base + i as u32,
                    tips: [x, y, x + rng.gen_range(5.0..20.0), y + rng.gen_range(-5.0..5.0)],
                }
            })
            .collect()
    };
    let mut pf = Vec::new();
    let mut lf = Vec::new();
    for f in 0..frames {
        lf.push(FrameTips { frame: f, leaves: mk(&mut rng, n, 1) });
        let m = rng.gen_range(0..n + 2);
        pf.push(FrameTips { frame: f, leaves: mk(&mut rng, m, 1) });
    }
    (
        vec![VideoTips { video_id: "v".into(), frames: pf }],
        vec![VideoTips { video_id: "v".into(), frames: lf }],
    )
}

#[test]
fn svm_standardization_is_stored_with_the_model() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
    let samples: Vec<(TrackFeatures, i8)> = (0..60)
        .map(|k| {
            let y = if k % 3 == 0 { -1 } else { 1 };
            (TrackFeatures(std::array::from_fn(|d| rng.gen_range(-1.0..1.0) * (d + 1) as f64 + y as f64)), y)
        })
        .collect();
    let model = train_svm(&samples, 1.0).unwrap();
    let z: Vec<Vec<f64>> = samples.iter().map(|(x, _)| model.standardize(&x.0)).collect();
    for k in 0..z[0].len() {
        let mean = z.iter().map(|r| r[k]).sum::<f64>() / z.len() as f64;
        let var = z.iter().map(|r| (r[k] - mean).powi(2)).sum::<f64>() / z.len() as f64;
        assert!(mean.abs() < 1e-9 && (var - 1.0).abs() < 1e-9);
    }
    // Offsetting every feature leaves the standardized problem, and hence
    // the margins, unchanged.
    let shifted: Vec<(TrackFeatures, i8)> = samples.iter().map(|(x, y)| (TrackFeatures(x.0.map(|v| v + 5.0)), *y)).collect();
    let moved = train_svm(&shifted, 1.0).unwrap();
    for ((x, _), (xs, _)) in samples.iter().zip(&shifted) {
        assert!((model.margin(x) - moved.margin(xs)).abs() < 1e-6);
    }
}
