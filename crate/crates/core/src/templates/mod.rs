//! Leaf templates, the similarity warp between template and frame space, and
//! the shape x scale x rotation template library.

mod format;
mod shapes;

pub use format::{read_library_file, write_library_file, LibraryFile, TemplateRecord, FORMAT_VERSION};
pub use shapes::{default_library, default_scales, default_shapes, ovate_template, DEFAULT_TEMPLATE_LENGTH};

use crate::error::{Error, Result};
use crate::geometry::{Border, CubicGrid, Point};
use crate::imaging::BinaryMask;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Similarity-transform parameters of one leaf: rotation `theta` (radians),
/// scale `r`, translation `(tx, ty)` in pixels. Rotation and scaling act
/// about the template centroid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub theta: f64,
    pub r: f64,
    pub tx: f64,
    pub ty: f64,
}

impl Pose {
    pub fn new(theta: f64, r: f64, tx: f64, ty: f64) -> Self {
        assert!(r > 0.0, "pose scale must be positive");
        Pose {
            theta: normalize_angle(theta),
            r,
            tx,
            ty,
        }
    }

    pub fn identity() -> Self {
        Pose::new(0.0, 1.0, 0.0, 0.0)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.theta, self.r, self.tx, self.ty]
    }

    /// Applies an additive step, keeping the scale positive.
    pub fn stepped(&self, delta: [f64; 4]) -> Pose {
        Pose::new(
            self.theta + delta[0],
            (self.r + delta[1]).max(MIN_SCALE),
            self.tx + delta[2],
            self.ty + delta[3],
        )
    }
}

pub(crate) const MIN_SCALE: f64 = 1e-3;

/// Maps an angle into `(-π, π]`.
pub fn normalize_angle(theta: f64) -> f64 {
    let mut t = theta % (2.0 * PI);
    if t <= -PI {
        t += 2.0 * PI;
    } else if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// Frame-space image of template points: `r R(θ) (u - ū) + t + ū`.
pub fn forward_warp(points: &[Point], centroid: Point, pose: &Pose) -> Vec<Point> {
    let (s, c) = pose.theta.sin_cos();
    points
        .iter()
        .map(|u| {
            let v = *u - centroid;
            Point::new(
                pose.r * (c * v.x - s * v.y) + pose.tx + centroid.x,
                pose.r * (s * v.x + c * v.y) + pose.ty + centroid.y,
            )
        })
        .collect()
}

/// Template-space preimage of a frame point (the analytic inverse warp).
pub fn inverse_warp_point(x: Point, centroid: Point, pose: &Pose) -> Point {
    let (s, c) = pose.theta.sin_cos();
    let q = Point::new(x.x - pose.tx - centroid.x, x.y - pose.ty - centroid.y);
    Point::new(
        (c * q.x + s * q.y) / pose.r + centroid.x,
        (-s * q.x + c * q.y) / pose.r + centroid.y,
    )
}

pub fn inverse_warp(points: &[Point], centroid: Point, pose: &Pose) -> Vec<Point> {
    points.iter().map(|&x| inverse_warp_point(x, centroid, pose)).collect()
}

/// A basic leaf template: edge points, filled mask and two labeled tips
/// (outer = far from the plant center, inner = petiole end).
#[derive(Debug, Clone)]
pub struct LeafTemplate {
    shape_id: String,
    edge_points: Vec<Point>,
    mask: BinaryMask,
    tip_outer: Point,
    tip_inner: Point,
    centroid: Point,
    soft_mask: CubicGrid,
}

impl LeafTemplate {
    /// Builds a template whose edge points are the mask boundary pixels.
    pub fn from_mask(shape_id: impl Into<String>, mask: BinaryMask, tip_outer: Point, tip_inner: Point) -> Result<Self> {
        let edges = mask.boundary_points();
        Self::from_parts(shape_id, edges, mask, tip_outer, tip_inner)
    }

    pub fn from_parts(
        shape_id: impl Into<String>,
        edge_points: Vec<Point>,
        mask: BinaryMask,
        tip_outer: Point,
        tip_inner: Point,
    ) -> Result<Self> {
        let centroid = Point::mean(&edge_points).ok_or(Error::EmptyPoints)?;
        if mask.count() == 0 {
            return Err(Error::EmptyMask);
        }
        if tip_outer.dist(tip_inner) <= 0.0 {
            return Err(Error::ZeroLeafLength);
        }
        let soft_mask = CubicGrid::new(mask.width(), mask.height(), &mask.as_f64(), Border::Zero);
        Ok(LeafTemplate {
            shape_id: shape_id.into(),
            edge_points,
            mask,
            tip_outer,
            tip_inner,
            centroid,
            soft_mask,
        })
    }

    pub fn shape_id(&self) -> &str {
        &self.shape_id
    }

    pub fn edge_points(&self) -> &[Point] {
        &self.edge_points
    }

    pub fn mask(&self) -> &BinaryMask {
        &self.mask
    }

    pub fn tips(&self) -> (Point, Point) {
        (self.tip_outer, self.tip_inner)
    }

    pub fn centroid(&self) -> Point {
        self.centroid
    }

    /// Inter-tip distance in template space.
    pub fn tip_length(&self) -> f64 {
        self.tip_outer.dist(self.tip_inner)
    }

    /// Root-mean-square distance of the edge points from the centroid.
    pub fn rms_radius(&self) -> f64 {
        let n = self.edge_points.len() as f64;
        (self
            .edge_points
            .iter()
            .map(|p| {
                let d = *p - self.centroid;
                d.dot(d)
            })
            .sum::<f64>()
            / n)
            .sqrt()
    }

    /// Catmull-Rom interpolant of the mask (zero outside), a differentiable
    /// stand-in for the binary mask.
    pub fn soft_mask(&self) -> &CubicGrid {
        &self.soft_mask
    }

    pub fn warp_edges(&self, pose: &Pose) -> Vec<Point> {
        forward_warp(&self.edge_points, self.centroid, pose)
    }
}

/// Warps the two labeled tips into the frame, order `(outer, inner)` kept.
pub fn warp_tips(template: &LeafTemplate, pose: &Pose) -> (Point, Point) {
    let w = forward_warp(&[template.tip_outer, template.tip_inner], template.centroid, pose);
    (w[0], w[1])
}

/// A warped template mask in a frame, stored sparsely as sorted row-major
/// pixel indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WarpedMask {
    width: usize,
    height: usize,
    indices: Vec<usize>,
}

impl WarpedMask {
    pub fn new(width: usize, height: usize, mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        WarpedMask {
            width,
            height,
            indices,
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// `|M̃|_1`.
    pub fn area(&self) -> usize {
        self.indices.len()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// K-dimensional 0/1 vector.
    pub fn to_dense(&self) -> Vec<u8> {
        let mut v = vec![0; self.width * self.height];
        for &k in &self.indices {
            v[k] = 1;
        }
        v
    }

    pub fn to_mask(&self) -> BinaryMask {
        BinaryMask::from_indices(self.width, self.height, &self.indices)
    }

    /// Number of pixels shared with a binary mask.
    pub fn overlap(&self, mask: &BinaryMask) -> usize {
        self.indices.iter().filter(|&&k| mask.bits()[k] == 1).count()
    }

    pub fn overlap_with(&self, other: &WarpedMask) -> usize {
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < self.indices.len() && j < other.indices.len() {
            match self.indices[i].cmp(&other.indices[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }
}

/// Frame-pixel range `(x0, y0, x1, y1)` (inclusive) that can receive a
/// template under `pose`, expanded by `margin` template pixels.
pub(crate) fn warped_extent(
    template: &LeafTemplate,
    pose: &Pose,
    frame_dims: (usize, usize),
    margin: f64,
) -> Option<(usize, usize, usize, usize)> {
    let (tw, th) = template.mask.dims();
    let corners = [
        Point::new(-0.5 - margin, -0.5 - margin),
        Point::new(tw as f64 - 0.5 + margin, -0.5 - margin),
        Point::new(-0.5 - margin, th as f64 - 0.5 + margin),
        Point::new(tw as f64 - 0.5 + margin, th as f64 - 0.5 + margin),
    ];
    let w = forward_warp(&corners, template.centroid, pose);
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in &w {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    let (fw, fh) = frame_dims;
    let x0 = x0.floor().max(0.0);
    let y0 = y0.floor().max(0.0);
    let x1 = x1.ceil().min(fw as f64 - 1.0);
    let y1 = y1.ceil().min(fh as f64 - 1.0);
    if x0 > x1 || y0 > y1 {
        return None;
    }
    Some((x0 as usize, y0 as usize, x1 as usize, y1 as usize))
}

/// Warped mask `M(W⁻¹(X; p))` over all frame pixel centers, by
/// nearest-neighbor lookup; preimages outside the template raster are 0.
pub fn backward_warp_mask(template: &LeafTemplate, pose: &Pose, frame_dims: (usize, usize)) -> WarpedMask {
    let (fw, fh) = frame_dims;
    let (tw, th) = template.mask.dims();
    let mut indices = Vec::new();
    if let Some((x0, y0, x1, y1)) = warped_extent(template, pose, frame_dims, 1.0) {
        for y in y0..=y1 {
            for x in x0..=x1 {
                let u = inverse_warp_point(Point::new(x as f64, y as f64), template.centroid, pose);
                let (ux, uy) = (u.x.round(), u.y.round());
                if ux >= 0.0 && uy >= 0.0 && (ux as usize) < tw && (uy as usize) < th && template.mask.get(ux as usize, uy as usize) {
                    indices.push(y * fw + x);
                }
            }
        }
    }
    WarpedMask::new(fw, fh, indices)
}

/// One (shape, scale, rotation) combination of the library.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LibraryEntry {
    pub shape: usize,
    pub scale: usize,
    pub rotation: usize,
}

/// The `N = H·S·R` template array. Only parameters are stored; warps are
/// applied on demand.
#[derive(Debug, Clone)]
pub struct TemplateLibrary {
    basic: Vec<LeafTemplate>,
    scales: Vec<f64>,
    rotations: Vec<f64>,
    entries: Vec<LibraryEntry>,
}

impl TemplateLibrary {
    pub fn basic(&self) -> &[LeafTemplate] {
        &self.basic
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// Rotation angles in radians.
    pub fn rotations(&self) -> &[f64] {
        &self.rotations
    }

    pub fn entries(&self) -> &[LibraryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn template(&self, entry: &LibraryEntry) -> &LeafTemplate {
        &self.basic[entry.shape]
    }

    /// Pose of an entry with zero translation.
    pub fn entry_pose(&self, entry: &LibraryEntry) -> Pose {
        Pose::new(self.rotations[entry.rotation], self.scales[entry.scale], 0.0, 0.0)
    }

    /// Library over all shapes, the given scale subset and all rotations.
    pub fn with_scale_subset(&self, scale_indices: &[usize]) -> TemplateLibrary {
        let mut idx: Vec<usize> = scale_indices.to_vec();
        idx.sort_unstable();
        idx.dedup();
        let entries = self
            .entries
            .iter()
            .filter(|e| idx.contains(&e.scale))
            .copied()
            .collect();
        TemplateLibrary {
            basic: self.basic.clone(),
            scales: self.scales.clone(),
            rotations: self.rotations.clone(),
            entries,
        }
    }

    /// Indices of the `k` scales whose leaf length (scale × mean template
    /// length) is closest to `length`.
    pub fn nearest_scales(&self, length: f64, k: usize) -> Vec<usize> {
        let base = self.basic.iter().map(|t| t.tip_length()).sum::<f64>() / self.basic.len() as f64;
        let mut order: Vec<usize> = (0..self.scales.len()).collect();
        order.sort_by(|&a, &b| {
            let da = (self.scales[a] * base - length).abs();
            let db = (self.scales[b] * base - length).abs();
            da.partial_cmp(&db).unwrap().then(a.cmp(&b))
        });
        order.truncate(k);
        order.sort_unstable();
        order
    }
}

/// Enumerates every (shape, scale, rotation) combination.
pub fn build_library(basic: Vec<LeafTemplate>, scales: Vec<f64>, rotation_step_deg: f64) -> Result<TemplateLibrary> {
    if basic.is_empty() {
        return Err(Error::invalid("template library needs at least one shape"));
    }
    if scales.is_empty() || scales.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::invalid("scales must be positive"));
    }
    if scales.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("scales must be strictly increasing"));
    }
    let steps = 360.0 / rotation_step_deg;
    if !(rotation_step_deg > 0.0) || (steps - steps.round()).abs() > 1e-9 || steps.round() < 1.0 {
        return Err(Error::invalid(format!("rotation step {rotation_step_deg} does not divide 360")));
    }
    let r = steps.round() as usize;
    let rotations: Vec<f64> = (0..r)
        .map(|k| normalize_angle((k as f64 * rotation_step_deg).to_radians()))
        .collect();
    let mut entries = Vec::with_capacity(basic.len() * scales.len() * r);
    for shape in 0..basic.len() {
        for scale in 0..scales.len() {
            for rotation in 0..r {
                entries.push(LibraryEntry { shape, scale, rotation });
            }
        }
    }
    Ok(TemplateLibrary {
        basic,
        scales,
        rotations,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tpl() -> LeafTemplate {
        ovate_template("t", 20.0, 0.45, 1.0).unwrap()
    }

    #[test]
    fn identity_and_half_turn() {
        let pts = vec![Point::new(1.0, 2.0), Point::new(-3.5, 0.25)];
        let c = Point::new(0.5, 0.5);
        assert_eq!(forward_warp(&pts, c, &Pose::identity()), pts);
        let w = forward_warp(&[c + Point::new(1.0, 0.0)], c, &Pose::new(PI, 1.0, 0.0, 0.0));
        assert!((w[0].x - (c.x - 1.0)).abs() < 1e-12 && (w[0].y - c.y).abs() < 1e-12);
    }

    #[test]
    fn angle_normalization() {
        assert!((normalize_angle(-PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(0.25) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn identity_backward_warp_reproduces_mask() {
        let t = tpl();
        let dims = t.mask().dims();
        let m = backward_warp_mask(&t, &Pose::identity(), dims);
        assert_eq!(m.to_dense(), t.mask().bits().to_vec());
    }

    #[test]
    fn translated_out_of_frame_is_empty() {
        let t = tpl();
        let m = backward_warp_mask(&t, &Pose::new(0.0, 1.0, 500.0, 0.0), (30, 30));
        assert_eq!(m.area(), 0);
    }

    #[test]
    fn tips_translation_and_identity() {
        let t = tpl();
        assert_eq!(warp_tips(&t, &Pose::identity()), t.tips());
        let (o, i) = warp_tips(&t, &Pose::new(0.0, 1.0, 5.0, -3.0));
        assert!((o - t.tips().0 - Point::new(5.0, -3.0)).norm() < 1e-12);
        assert!((i - t.tips().1 - Point::new(5.0, -3.0)).norm() < 1e-12);
    }

    #[test]
    fn tips_quarter_turn_double_scale() {
        let t = tpl();
        let (o, _) = warp_tips(&t, &Pose::new(PI / 2.0, 2.0, 0.0, 0.0));
        let v = t.tips().0 - t.centroid();
        // R(π/2)(vx, vy) = (-vy, vx)
        let expect = t.centroid() + Point::new(-2.0 * v.y, 2.0 * v.x);
        assert!((o - expect).norm() < 1e-9);
    }

    #[test]
    fn library_counts() {
        let shapes: Vec<LeafTemplate> = (0..10).map(|_| tpl()).collect();
        let scales: Vec<f64> = (1..=12).map(|k| k as f64 * 0.1).collect();
        assert_eq!(build_library(shapes, scales, 15.0).unwrap().len(), 2880);
        assert_eq!(build_library(vec![tpl()], vec![1.0], 360.0).unwrap().len(), 1);
        let lib = build_library(vec![tpl(), tpl()], vec![0.5, 1.0, 2.0], 90.0).unwrap();
        assert_eq!(lib.len(), 24);
        let mut seen = std::collections::HashSet::new();
        assert!(lib.entries().iter().all(|e| seen.insert(*e)));
        assert!(build_library(vec![tpl()], vec![1.0], 7.0).is_err());
        assert!(build_library(vec![tpl()], vec![1.0, 1.0], 90.0).is_err());
    }
}
