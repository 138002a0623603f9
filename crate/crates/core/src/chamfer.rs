//! Chamfer matching: the CM distance, the weighted angle term, exhaustive
//! translation nomination of every library entry, and tip snapping.

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::imaging::{BinaryMask, DistanceField, EdgeMap};
use crate::templates::{backward_warp_mask, forward_warp, warp_tips, LibraryEntry, Pose, TemplateLibrary, WarpedMask};
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Default minimum overlap of a nominated candidate with the frame mask.
pub const DEFAULT_OVERLAP_MIN: f64 = 0.85;

/// A library entry placed in the frame.
#[derive(Debug, Clone)]
pub struct TransformedCandidate {
    pub entry: LibraryEntry,
    pub pose: Pose,
    pub warped_mask: WarpedMask,
    pub cm_distance: f64,
    pub angle_term: f64,
    /// Warped template centroid (the leaf center).
    pub center: Point,
    /// Snapped `(outer, inner)` tips.
    pub tips: (Point, Point),
}

/// The over-complete candidate set with its stacked masks `A`, CM distances
/// `d` and angle terms `l`.
#[derive(Debug, Clone)]
pub struct NominationSet {
    pub candidates: Vec<TransformedCandidate>,
    pub frame_dims: (usize, usize),
}

impl NominationSet {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn k(&self) -> usize {
        self.frame_dims.0 * self.frame_dims.1
    }

    pub fn d(&self) -> Vec<f64> {
        self.candidates.iter().map(|c| c.cm_distance).collect()
    }

    pub fn l(&self) -> Vec<f64> {
        self.candidates.iter().map(|c| c.angle_term).collect()
    }

    /// Row `n` of `A` as sparse pixel indices.
    pub fn row(&self, n: usize) -> &[usize] {
        self.candidates[n].warped_mask.indices()
    }

    /// Dense `N' x K` 0/1 matrix.
    pub fn dense_a(&self) -> Vec<Vec<u8>> {
        self.candidates.iter().map(|c| c.warped_mask.to_dense()).collect()
    }
}

/// Mean interpolated distance-transform value over the points.
pub fn cm_distance(points: &[Point], dt: &DistanceField) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::EmptyPoints);
    }
    Ok(points.iter().map(|&p| dt.sample(p)).sum::<f64>() / points.len() as f64)
}

/// Squared weighted angle difference between a leaf's rotation and the
/// direction from the plant center to the leaf center, normalized by the
/// squared frame diagonal. Zero when the leaf sits on the plant center.
pub fn angle_term(pose: &Pose, warped_points: &[Point], plant_center: Point, diag: f64) -> f64 {
    let c = Point::mean(warped_points).unwrap_or(plant_center);
    angle_term_at(pose.theta, c, plant_center, diag)
}

pub(crate) fn angle_term_at(theta: f64, leaf_center: Point, plant_center: Point, diag: f64) -> f64 {
    let d = leaf_center - plant_center;
    let s = d.norm();
    if s == 0.0 {
        return 0.0;
    }
    let e = d.x - s * theta.sin();
    e * e / (diag * diag)
}

/// Replaces each tip by its nearest edge point; ties go to the earlier
/// point in raster order.
pub fn snap_tips(tips: (Point, Point), edges: &EdgeMap) -> (Point, Point) {
    (snap(tips.0, edges), snap(tips.1, edges))
}

fn snap(p: Point, edges: &EdgeMap) -> Point {
    let mut best: Option<(f64, Point)> = None;
    for &q in edges.points() {
        let d = (q - p).dot(q - p);
        let better = match best {
            None => true,
            Some((bd, bq)) => d < bd || (d == bd && (q.y, q.x) < (bq.y, bq.x)),
        };
        if better {
            best = Some((d, q));
        }
    }
    best.map(|b| b.1).unwrap_or(p)
}

/// Integer translations searched for one library entry.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TranslationRange {
    pub tx0: i64,
    pub tx1: i64,
    pub ty0: i64,
    pub ty1: i64,
}

/// Translations placing the warped centroid inside the mask bounding box,
/// inflated by a quarter of the leaf length.
pub(crate) fn translation_range(mask_bbox: (usize, usize, usize, usize), centroid: Point, leaf_length: f64) -> TranslationRange {
    let (x0, y0, x1, y1) = mask_bbox;
    let grow = 0.25 * leaf_length;
    TranslationRange {
        tx0: (x0 as f64 - grow - centroid.x).ceil() as i64,
        tx1: (x1 as f64 + grow - centroid.x).floor() as i64,
        ty0: (y0 as f64 - grow - centroid.y).ceil() as i64,
        ty1: (y1 as f64 + grow - centroid.y).floor() as i64,
    }
}

/// Best integer translation of a fixed point set and its CM distance.
/// Points move rigidly, so their sub-pixel interpolation weights are shared
/// by every translation and fold into one correlation kernel.
pub(crate) fn best_translation(points: &[Point], dt: &DistanceField, range: TranslationRange) -> Option<((i64, i64), f64)> {
    if points.is_empty() || range.tx0 > range.tx1 || range.ty0 > range.ty1 {
        return None;
    }
    let n = points.len() as f64;
    let grid = dt.grid();
    let mut kernel: BTreeMap<(isize, isize), f64> = BTreeMap::new();
    for &p in points {
        for (x, y, w) in grid.taps(p) {
            *kernel.entry((x, y)).or_insert(0.0) += w;
        }
    }
    let kernel: Vec<((isize, isize), f64)> = kernel.into_iter().collect();
    let (mut px0, mut py0, mut px1, mut py1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        px0 = px0.min(p.x);
        py0 = py0.min(p.y);
        px1 = px1.max(p.x);
        py1 = py1.max(p.y);
    }
    let (w, h) = (dt.width() as f64, dt.height() as f64);

    let mut best: Option<((i64, i64), f64)> = None;
    for ty in range.ty0..=range.ty1 {
        for tx in range.tx0..=range.tx1 {
            let (fx, fy) = (tx as f64, ty as f64);
            let inside = px0 + fx >= 0.0 && py0 + fy >= 0.0 && px1 + fx <= w - 1.0 && py1 + fy <= h - 1.0;
            let value = if inside {
                let (dx, dy) = (tx as isize, ty as isize);
                kernel.iter().map(|&((x, y), wk)| wk * grid.padded_value(x + dx, y + dy)).sum::<f64>() / n
            } else {
                let shift = Point::new(fx, fy);
                points.iter().map(|&p| dt.sample(p + shift)).sum::<f64>() / n
            };
            if best.map_or(true, |(_, b)| value < b) {
                best = Some(((tx, ty), value));
            }
        }
    }
    best
}

/// Places one library entry at its best translation and measures it.
fn place_entry(
    library: &TemplateLibrary,
    entry: &LibraryEntry,
    edges: &EdgeMap,
    dt: &DistanceField,
    mask: &BinaryMask,
    bbox: (usize, usize, usize, usize),
    plant_center: Point,
) -> Option<TransformedCandidate> {
    let template = library.template(entry);
    let base = library.entry_pose(entry);
    let points = template.warp_edges(&base);
    let range = translation_range(bbox, template.centroid(), base.r * template.tip_length());
    let ((tx, ty), d) = best_translation(&points, dt, range)?;
    let pose = Pose::new(base.theta, base.r, tx as f64, ty as f64);
    let warped_mask = backward_warp_mask(template, &pose, mask.dims());
    if warped_mask.area() == 0 {
        return None;
    }
    let (w, h) = mask.dims();
    let diag = ((w * w + h * h) as f64).sqrt();
    let warped_points = forward_warp(template.edge_points(), template.centroid(), &pose);
    let angle = angle_term(&pose, &warped_points, plant_center, diag);
    let tips = snap_tips(warp_tips(template, &pose), edges);
    Some(TransformedCandidate {
        entry: *entry,
        pose,
        warped_mask,
        cm_distance: d,
        angle_term: angle,
        center: template.centroid() + Point::new(pose.tx, pose.ty),
        tips,
    })
}

/// Candidate nomination against the frame mask, using the mask centroid as
/// the plant center.
pub fn nominate(
    library: &TemplateLibrary,
    edges: &EdgeMap,
    dt: &DistanceField,
    mask: &BinaryMask,
    overlap_min: f64,
) -> Result<NominationSet> {
    let center = mask.centroid().ok_or(Error::EmptyMask)?;
    nominate_with_center(library, edges, dt, mask, overlap_min, center)
}

/// Every library entry at its CM-optimal integer translation, then pruned to
/// candidates covering the mask by at least `overlap_min` of their area.
pub fn nominate_with_center(
    library: &TemplateLibrary,
    edges: &EdgeMap,
    dt: &DistanceField,
    mask: &BinaryMask,
    overlap_min: f64,
    plant_center: Point,
) -> Result<NominationSet> {
    if library.is_empty() {
        return Err(Error::invalid("empty template library"));
    }
    let bbox = mask.bounding_box().ok_or(Error::EmptyMask)?;
    let candidates: Vec<TransformedCandidate> = library
        .entries()
        .par_iter()
        .map(|e| place_entry(library, e, edges, dt, mask, bbox, plant_center))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .filter(|c| passes_overlap(c, mask, overlap_min))
        .collect();
    if candidates.is_empty() {
        return Err(Error::NoViableCandidates);
    }
    Ok(NominationSet {
        candidates,
        frame_dims: mask.dims(),
    })
}

/// Overlap test `|M̃ ∧ m| / |M̃| >= overlap_min`, in exact integer arithmetic
/// for the boundary case.
pub(crate) fn passes_overlap(c: &TransformedCandidate, mask: &BinaryMask, overlap_min: f64) -> bool {
    let area = c.warped_mask.area();
    area > 0 && c.warped_mask.overlap(mask) as f64 >= overlap_min * area as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::distance_transform;
    use std::f64::consts::PI;

    #[test]
    fn zero_on_edges_and_single_point_distance() {
        let pts = vec![Point::new(2.0, 3.0), Point::new(5.0, 1.0)];
        let dt = distance_transform(&EdgeMap::new(pts.clone(), 8, 8).unwrap()).unwrap();
        assert_eq!(cm_distance(&pts, &dt).unwrap(), 0.0);

        let dt = distance_transform(&EdgeMap::new(vec![Point::new(1.0, 1.0)], 10, 10).unwrap()).unwrap();
        assert!((cm_distance(&[Point::new(4.0, 5.0)], &dt).unwrap() - 5.0).abs() < 1e-12);
        assert!(cm_distance(&[], &dt).is_err());
    }

    #[test]
    fn angle_term_cases() {
        let c = Point::new(10.0, 10.0);
        let pose = |t: f64| Pose::new(t, 1.0, 0.0, 0.0);
        assert_eq!(angle_term(&pose(0.3), &[c], c, 10.0), 0.0);
        assert!(angle_term(&pose(PI / 2.0), &[Point::new(17.0, 10.0)], c, 10.0).abs() < 1e-15);
        let v = angle_term(&pose(0.0), &[Point::new(13.0, 10.0)], c, 10.0);
        assert!((v - 0.09).abs() < 1e-15);
    }

    #[test]
    fn snapping() {
        let edges = EdgeMap::new(vec![Point::new(1.0, 1.0), Point::new(3.0, 1.0)], 5, 5).unwrap();
        let t = (Point::new(1.0, 1.0), Point::new(2.0, 1.0));
        let s = snap_tips(t, &edges);
        assert_eq!(s.0, Point::new(1.0, 1.0));
        // equidistant: (1,1) precedes (3,1) in raster order
        assert_eq!(s.1, Point::new(1.0, 1.0));
        let one = EdgeMap::new(vec![Point::new(4.0, 4.0)], 5, 5).unwrap();
        assert_eq!(snap_tips(t, &one), (Point::new(4.0, 4.0), Point::new(4.0, 4.0)));
    }
}
