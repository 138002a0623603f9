//! Built-in leaf shapes so the library works without hand-labeled templates.

use super::{build_library, LeafTemplate, TemplateLibrary};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::imaging::BinaryMask;

/// Tip-to-tip length of the built-in templates, in template pixels.
pub const DEFAULT_TEMPLATE_LENGTH: f64 = 30.0;

const MARGIN: usize = 3;

/// A vertical leaf of the given tip-to-tip `length`, maximum width
/// `width_ratio * length`, outer tip at the top. `skew` moves the widest point
/// along the axis: 1 is an ellipse, >1 widens toward the outer tip.
pub fn ovate_template(shape_id: &str, length: f64, width_ratio: f64, skew: f64) -> Result<LeafTemplate> {
    if !(length >= 2.0) || !(width_ratio > 0.0) || !(skew > 0.0) {
        return Err(Error::invalid("leaf shape needs length >= 2 and positive width and skew"));
    }
    let len = length.round() as usize;
    let half_w = 0.5 * width_ratio * length;
    let half_cols = half_w.ceil() as usize;
    let w = 2 * (half_cols + MARGIN) + 1;
    let h = len + 2 * MARGIN + 1;
    let x0 = (half_cols + MARGIN) as f64;
    let y_out = MARGIN as f64;
    let y_in = (MARGIN + len) as f64;

    let mut mask = BinaryMask::empty(w, h);
    for y in 0..h {
        let s = (y_in - y as f64) / (y_in - y_out);
        if !(0.0..=1.0).contains(&s) {
            continue;
        }
        let u = s.powf(skew);
        let hw = half_w * 2.0 * (u * (1.0 - u)).max(0.0).sqrt();
        for x in 0..w {
            if (x as f64 - x0).abs() <= hw + 1e-9 {
                mask.set(x, y, true);
            }
        }
    }
    LeafTemplate::from_mask(shape_id, mask, Point::new(x0, y_out), Point::new(x0, y_in))
}

/// Three representative shapes: ovate, elliptic and spatulate.
pub fn default_shapes() -> Vec<LeafTemplate> {
    let l = DEFAULT_TEMPLATE_LENGTH;
    vec![
        ovate_template("ovate", l, 0.50, 0.8).expect("valid shape"),
        ovate_template("elliptic", l, 0.42, 1.0).expect("valid shape"),
        ovate_template("spatulate", l, 0.48, 1.5).expect("valid shape"),
    ]
}

/// Six scales, geometrically spaced from 0.5 to 1.2 (15 to 36 px leaves with
/// the built-in shapes).
pub fn default_scales() -> Vec<f64> {
    geometric(0.5, 1.2, 6)
}

pub(crate) fn geometric(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let ratio = (hi / lo).powf(1.0 / (n - 1) as f64);
    (0..n).map(|k| lo * ratio.powi(k as i32)).collect()
}

/// Built-in shapes × default scales × 15° rotations.
pub fn default_library() -> TemplateLibrary {
    build_library(default_shapes(), default_scales(), 15.0).expect("valid default library")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{distance_transform, EdgeMap};

    #[test]
    fn tips_on_contour_and_boundary_close_to_edges() {
        for t in default_shapes() {
            let (o, i) = t.tips();
            for tip in [o, i] {
                let d = t.edge_points().iter().map(|p| p.dist(tip)).fold(f64::INFINITY, f64::min);
                assert!(d <= 1.0, "{}: tip {d} px from contour", t.shape_id());
            }
            let (w, h) = t.mask().dims();
            let edges = EdgeMap::new(t.edge_points().to_vec(), w, h).unwrap();
            let dt = distance_transform(&edges).unwrap();
            for p in t.mask().boundary_points() {
                assert!(dt.at(p.x as usize, p.y as usize) <= 1.5);
            }
            let c = Point::mean(t.edge_points()).unwrap();
            assert!((c - t.centroid()).norm() < 1e-12);
            assert!((t.tip_length() - DEFAULT_TEMPLATE_LENGTH).abs() < 1e-9);
        }
    }

    #[test]
    fn scales_increase() {
        let s = default_scales();
        assert_eq!(s.len(), 6);
        assert!((s[0] - 0.5).abs() < 1e-12 && (s[5] - 1.2).abs() < 1e-12);
        assert!(s.windows(2).all(|w| w[1] > w[0]));
    }
}
