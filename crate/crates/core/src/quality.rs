//! Quality prediction: a linear regression of alignment accuracy on six
//! per-leaf features, a linear SVM on fifteen temporal features for
//! tracking success, and run-length filtering of smoothed SVM margins into
//! failure intervals.

use crate::chamfer::TransformedCandidate;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::imaging::{gaussian_smooth_1d, BinaryMask};
use crate::templates::normalize_angle;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub const ALIGN_DIM: usize = 6;
pub const TRACK_DIM: usize = 15;
/// Frames between a leaf and its reference, in processing order.
pub const REFERENCE_OFFSET: usize = 20;
pub const DEFAULT_SVM_EPOCHS: usize = 200;
pub const DEFAULT_SMOOTH_SIGMA: f64 = 3.0;
pub const DEFAULT_MIN_RUN: usize = 5;

/// `[d, |M̃∧m|/|m|, |M̃∖m|/|M̃|, |M̃|/|m|, |θ − asin(Δx/s)|, s]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignFeatures(pub [f64; ALIGN_DIM]);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackFeatures(#[serde(with = "serde_track")] pub [f64; TRACK_DIM]);

mod serde_track {
    use super::TRACK_DIM;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64; TRACK_DIM], s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[f64; TRACK_DIM], D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        v.try_into()
            .map_err(|v: Vec<f64>| serde::de::Error::invalid_length(v.len(), &"15 features"))
    }
}

/// Per-leaf alignment features against the frame mask.
pub fn extract_align_features(cand: &TransformedCandidate, mask: &BinaryMask, plant_center: Point) -> Result<AlignFeatures> {
    let area = cand.warped_mask.area();
    let m = mask.count();
    if area == 0 || m == 0 {
        return Err(Error::EmptyMask);
    }
    let inside = cand.warped_mask.overlap(mask);
    let d = cand.center - plant_center;
    let s = d.norm();
    let angle = if s == 0.0 {
        0.0
    } else {
        (cand.pose.theta - (d.x / s).clamp(-1.0, 1.0).asin()).abs()
    };
    Ok(AlignFeatures([
        cand.cm_distance,
        inside as f64 / m as f64,
        (area - inside) as f64 / area as f64,
        area as f64 / m as f64,
        angle,
        s,
    ]))
}

/// A leaf's state on one frame, as needed for the temporal features.
#[derive(Debug, Clone, Copy)]
pub struct LeafSnapshot<'a> {
    pub features: AlignFeatures,
    pub theta: f64,
    pub center: Point,
    pub mask: &'a crate::templates::WarpedMask,
}

impl<'a> LeafSnapshot<'a> {
    pub fn of(cand: &'a TransformedCandidate, frame_mask: &BinaryMask, plant_center: Point) -> Result<Self> {
        Ok(LeafSnapshot {
            features: extract_align_features(cand, frame_mask, plant_center)?,
            theta: cand.pose.theta,
            center: cand.center,
            mask: &cand.warped_mask,
        })
    }
}

/// `[x_a, x_a − x̂_a, θ − θ̂, |c − ĉ|, |M̃ ∧ M̂| / |M̃|]`.
pub fn extract_track_features(current: &LeafSnapshot, reference: &LeafSnapshot) -> Result<TrackFeatures> {
    let area = current.mask.area();
    if area == 0 {
        return Err(Error::EmptyMask);
    }
    let mut x = [0.0; TRACK_DIM];
    for k in 0..ALIGN_DIM {
        x[k] = current.features.0[k];
        x[ALIGN_DIM + k] = current.features.0[k] - reference.features.0[k];
    }
    x[12] = normalize_angle(current.theta - reference.theta);
    x[13] = current.center.dist(reference.center);
    x[14] = current.mask.overlap_with(reference.mask) as f64 / area as f64;
    Ok(TrackFeatures(x))
}

/// Regression target: twice the tip error, capped at 1.
pub fn alignment_target(tip_error: f64) -> f64 {
    (2.0 * tip_error).min(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub weights: [f64; ALIGN_DIM],
    pub bias: f64,
}

impl RegressionModel {
    pub fn raw(&self, x: &AlignFeatures) -> f64 {
        self.weights.iter().zip(&x.0).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    /// Predicted alignment quality, clamped to `[0, 1]`.
    pub fn predict(&self, x: &AlignFeatures) -> f64 {
        self.raw(x).clamp(0.0, 1.0)
    }
}

const RIDGE: f64 = 1e-8;

/// Least squares with intercept through the (lightly ridged) normal
/// equations.
pub fn train_regression(samples: &[(AlignFeatures, f64)]) -> Result<RegressionModel> {
    let p = ALIGN_DIM + 1;
    if samples.len() < p {
        return Err(Error::Underdetermined {
            samples: samples.len(),
            params: p,
        });
    }
    let n = samples.len();
    let x = DMatrix::from_fn(n, p, |i, j| if j < ALIGN_DIM { samples[i].0 .0[j] } else { 1.0 });
    let y = DVector::from_iterator(n, samples.iter().map(|s| s.1));
    let gram = x.transpose() * &x + DMatrix::identity(p, p) * RIDGE;
    let rhs = x.transpose() * y;
    let beta = gram
        .cholesky()
        .map(|c| c.solve(&rhs))
        .ok_or_else(|| Error::invalid("singular regression design"))?;
    let mut weights = [0.0; ALIGN_DIM];
    weights.copy_from_slice(&beta.as_slice()[..ALIGN_DIM]);
    Ok(RegressionModel {
        weights,
        bias: beta[ALIGN_DIM],
    })
}

/// Coefficient of determination of `predicted` against `actual`.
pub fn r_squared(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    if predicted.len() != actual.len() || actual.is_empty() {
        return Err(Error::DimensionMismatch("predicted and actual lengths differ".into()));
    }
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let total: f64 = actual.iter().map(|a| (a - mean).powi(2)).sum();
    if total == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let resid: f64 = predicted.iter().zip(actual).map(|(p, a)| (a - p).powi(2)).sum();
    Ok(1.0 - resid / total)
}

/// Duplicates samples so each tip-error bin of width `bin_width` below
/// `cap` holds at least `per_bin` samples; samples at or above `cap` are
/// kept once. Duplication cycles through a bin's samples in input order.
pub fn balance_by_error<T: Clone>(samples: &[(T, f64)], per_bin: usize, bin_width: f64, cap: f64) -> Vec<(T, f64)> {
    let bins = (cap / bin_width).round() as usize;
    let mut out = Vec::new();
    for b in 0..bins {
        let (lo, hi) = (b as f64 * bin_width, (b + 1) as f64 * bin_width);
        let members: Vec<&(T, f64)> = samples.iter().filter(|s| s.1 >= lo && s.1 < hi && s.1 < cap).collect();
        if members.is_empty() {
            continue;
        }
        let take = per_bin.max(members.len());
        out.extend((0..take).map(|k| members[k % members.len()].clone()));
    }
    out.extend(samples.iter().filter(|s| s.1 >= cap).cloned());
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl SvmModel {
    pub fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect()
    }

    /// Signed margin; positive means tracking success.
    pub fn margin(&self, x: &TrackFeatures) -> f64 {
        self.margin_raw(&x.0)
    }

    pub fn margin_raw(&self, x: &[f64]) -> f64 {
        let z = self.standardize(x);
        self.weights.iter().zip(&z).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    pub fn predict(&self, x: &TrackFeatures) -> i8 {
        if self.margin(x) >= 0.0 {
            1
        } else {
            -1
        }
    }
}

/// Linear SVM on standardized features by cyclic sub-gradient descent on the
/// L2-regularized hinge loss, `λ = 1 / (C n)`, step `1 / (λ t)`. The bias is
/// learned as the weight of a constant feature.
pub fn train_svm(samples: &[(TrackFeatures, i8)], reg_c: f64) -> Result<SvmModel> {
    let rows: Vec<(Vec<f64>, i8)> = samples.iter().map(|(x, y)| (x.0.to_vec(), *y)).collect();
    train_linear_svm(&rows, reg_c, DEFAULT_SVM_EPOCHS)
}

/// [`train_svm`] for feature vectors of any dimension.
pub fn train_linear_svm(samples: &[(Vec<f64>, i8)], reg_c: f64, epochs: usize) -> Result<SvmModel> {
    if !(reg_c > 0.0) {
        return Err(Error::invalid("SVM regularization must be positive"));
    }
    let n = samples.len();
    if n == 0 || samples.iter().any(|s| s.1 != 1 && s.1 != -1) {
        return Err(Error::invalid("SVM labels must be +1 or -1"));
    }
    if !(samples.iter().any(|s| s.1 == 1) && samples.iter().any(|s| s.1 == -1)) {
        return Err(Error::SingleClass);
    }
    let dim = samples[0].0.len();
    if samples.iter().any(|s| s.0.len() != dim) {
        return Err(Error::DimensionMismatch("SVM samples differ in dimension".into()));
    }
    let mut mean = vec![0.0; dim];
    for (x, _) in samples {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v / n as f64;
        }
    }
    let mut scale = vec![0.0; dim];
    for (x, _) in samples {
        for k in 0..dim {
            scale[k] += (x[k] - mean[k]).powi(2) / n as f64;
        }
    }
    for s in &mut scale {
        *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
    }
    let z: Vec<(Vec<f64>, f64)> = samples
        .iter()
        .map(|(x, y)| {
            let mut v: Vec<f64> = x.iter().zip(&mean).zip(&scale).map(|((v, m), s)| (v - m) / s).collect();
            v.push(1.0);
            (v, *y as f64)
        })
        .collect();

    let lambda = 1.0 / (reg_c * n as f64);
    let mut w = vec![0.0; dim + 1];
    let mut t = 0usize;
    for _ in 0..epochs {
        for (x, y) in &z {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let score: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum();
            let shrink = 1.0 - eta * lambda;
            for wk in &mut w {
                *wk *= shrink;
            }
            if y * score < 1.0 {
                for (wk, xk) in w.iter_mut().zip(x) {
                    *wk += eta * y * xk;
                }
            }
        }
    }
    let bias = w.pop().expect("bias weight");
    Ok(SvmModel {
        weights: w,
        bias,
        mean,
        scale,
    })
}

/// Maximal runs (inclusive frame bounds) of at least `min_run` frames where
/// the Gaussian-smoothed margin is negative.
pub fn detect_tracking_failure(margins: &[f64], sigma: f64, min_run: usize) -> Vec<(usize, usize)> {
    let smooth = gaussian_smooth_1d(margins, sigma);
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &v) in smooth.iter().chain(std::iter::once(&0.0)).enumerate() {
        match (v < 0.0 && i < smooth.len(), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if i - s >= min_run.max(1) {
                    runs.push((s, i - 1));
                }
                start = None;
            }
            _ => {}
        }
    }
    runs
}

/// Index of the reference frame for position `pos` of a leaf's track (in
/// processing order), clamped to the track start.
pub fn reference_index(pos: usize) -> usize {
    pos.saturating_sub(REFERENCE_OFFSET)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::templates::{LibraryEntry, Pose, WarpedMask};

    fn cand(indices: Vec<usize>, center: Point, theta: f64) -> TransformedCandidate {
        TransformedCandidate {
            entry: LibraryEntry {
                shape: 0,
                scale: 0,
                rotation: 0,
            },
            pose: Pose::new(theta, 1.0, 0.0, 0.0),
            warped_mask: WarpedMask::new(10, 10, indices),
            cm_distance: 0.0,
            angle_term: 0.0,
            center,
            tips: (Point::default(), Point::default()),
        }
    }

    #[test]
    fn exact_cover_features() {
        let idx: Vec<usize> = (20..40).collect();
        let mask = BinaryMask::from_indices(10, 10, &idx);
        let c = cand(idx, Point::new(5.0, 2.0), 0.0);
        let f = extract_align_features(&c, &mask, Point::new(5.0, 6.0)).unwrap();
        assert_eq!(f.0, [0.0, 1.0, 0.0, 1.0, 0.0, 4.0]);
    }

    #[test]
    fn disjoint_halves() {
        let a: Vec<usize> = (0..20).collect();
        let b: Vec<usize> = (60..80).collect();
        let mask = BinaryMask::from_indices(10, 10, &[a.clone(), b].concat());
        let f = extract_align_features(&cand(a, Point::new(4.5, 0.5), 0.0), &mask, Point::new(4.5, 4.0)).unwrap();
        assert_eq!(f.0[1], 0.5);
        assert_eq!(f.0[2], 0.0);
    }

    #[test]
    fn track_features_against_itself_and_disjoint() {
        let mask = BinaryMask::from_indices(10, 10, &(0..100).collect::<Vec<_>>());
        let a = cand((0..30).collect(), Point::new(3.0, 1.0), 0.3);
        let b = cand((50..80).collect(), Point::new(3.0, 6.0), 0.5);
        let sa = LeafSnapshot::of(&a, &mask, Point::new(5.0, 5.0)).unwrap();
        let sb = LeafSnapshot::of(&b, &mask, Point::new(5.0, 5.0)).unwrap();
        let same = extract_track_features(&sa, &sa).unwrap();
        assert!(same.0[6..14].iter().all(|&v| v == 0.0));
        assert_eq!(same.0[14], 1.0);
        assert_eq!(extract_track_features(&sa, &sb).unwrap().0[14], 0.0);
    }

    #[test]
    fn regression_needs_seven_samples() {
        let s = vec![(AlignFeatures([0.0; 6]), 0.0); 6];
        assert_eq!(train_regression(&s).unwrap_err().to_string(), "underdetermined: 6 samples for 7 parameters");
    }

    #[test]
    fn constant_targets() {
        let s: Vec<_> = (0..20)
            .map(|i| {
                let v = i as f64;
                (AlignFeatures([v, v * v, (v * 0.3).sin(), 1.0 / (1.0 + v), v.sqrt(), (v * 0.7).cos()]), 0.4)
            })
            .collect();
        let m = train_regression(&s).unwrap();
        assert!(m.weights.iter().all(|w| w.abs() < 1e-5), "{:?}", m.weights);
        assert!((m.bias - 0.4).abs() < 1e-5);
        assert!((m.predict(&s[3].0) - 0.4).abs() < 1e-5);
    }

    #[test]
    fn r_squared_cases() {
        let a = [1.0, 2.0, 4.0];
        assert_eq!(r_squared(&a, &a).unwrap(), 1.0);
        let mean = 7.0 / 3.0;
        assert!(r_squared(&[mean; 3], &a).unwrap().abs() < 1e-15);
        assert_eq!(r_squared(&a, &[2.0; 3]).unwrap_err().to_string(), "zero variance");
    }

    #[test]
    fn failure_runs() {
        assert!(detect_tracking_failure(&[1.0; 40], 3.0, 5).is_empty());
        let mut blip = vec![1.0; 40];
        for v in &mut blip[18..21] {
            *v = -1.0;
        }
        assert!(detect_tracking_failure(&blip, 3.0, 5).is_empty());
        let mut fail = vec![1.0; 60];
        for v in &mut fail[20..32] {
            *v = -1.0;
        }
        let runs = detect_tracking_failure(&fail, 3.0, 5);
        assert_eq!(runs.len(), 1);
        assert!(runs[0].0.abs_diff(20) <= 12);
    }

    #[test]
    fn balancing_duplicates_sparse_bins() {
        let s = vec![((), 0.05), ((), 0.07), ((), 0.15), ((), 0.8)];
        let b = balance_by_error(&s, 3, 0.1, 0.5);
        assert_eq!(b.iter().filter(|x| x.1 < 0.1).count(), 3);
        assert_eq!(b.iter().filter(|x| (0.1..0.2).contains(&x.1)).count(), 3);
        assert_eq!(b.iter().filter(|x| x.1 >= 0.5).count(), 1);
    }

    #[test]
    fn svm_rejects_single_class() {
        let s = vec![(TrackFeatures([0.0; 15]), 1i8); 4];
        assert!(matches!(train_svm(&s, 1.0), Err(Error::SingleClass)));
    }
}
