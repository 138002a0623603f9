//! Raster primitives: grayscale frames, binary masks, edge maps, the exact
//! Euclidean distance transform, Sobel edges, Otsu foreground segmentation,
//! connected components and 1-D Gaussian smoothing.

mod components;
mod edges;
mod edt;
pub mod io;
mod smooth;

pub use components::{connected_components, Component};
pub use edges::{foreground_mask, otsu_threshold, sobel_edges, DEFAULT_EDGE_THRESHOLD};
pub use edt::{distance_transform, DistanceField};
pub use smooth::gaussian_smooth_1d;

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Row-major grayscale image with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "image data has {} values, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("intensity {v} outside [0, 1]")));
        }
        Ok(GrayImage {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

/// Row-major 0/1 mask. Flattened, it is the K-dimensional mask vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<u8>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<u8>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "mask has {} values, expected {}x{}",
                bits.len(),
                width,
                height
            )));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::invalid("mask values must be 0 or 1"));
        }
        Ok(BinaryMask {
            width,
            height,
            bits,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        BinaryMask {
            width,
            height,
            bits: vec![0; width * height],
        }
    }

    pub fn from_indices(width: usize, height: usize, indices: &[usize]) -> Self {
        let mut mask = Self::empty(width, height);
        for &k in indices {
            mask.bits[k] = 1;
        }
        mask
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x] == 1
    }

    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        self.bits[y * self.width + x] = on as u8;
    }

    /// `|m|_1`.
    pub fn count(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(k, &b)| (b == 1).then_some(k))
            .collect()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.bits.iter().map(|&b| b as f64).collect()
    }

    /// Mean coordinate of the foreground pixels.
    pub fn centroid(&self) -> Option<Point> {
        let n = self.count();
        if n == 0 {
            return None;
        }
        let (mut sx, mut sy) = (0.0, 0.0);
        for k in self.indices() {
            sx += (k % self.width) as f64;
            sy += (k / self.width) as f64;
        }
        Some(Point::new(sx / n as f64, sy / n as f64))
    }

    /// Inclusive bounding box `(x0, y0, x1, y1)` of the foreground.
    pub fn bounding_box(&self) -> Option<(usize, usize, usize, usize)> {
        let mut bb: Option<(usize, usize, usize, usize)> = None;
        for k in self.indices() {
            let (x, y) = (k % self.width, k / self.width);
            bb = Some(match bb {
                None => (x, y, x, y),
                Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
            });
        }
        bb
    }

    /// Morphological dilation with a 3x3 square.
    pub fn dilate(&self) -> BinaryMask {
        let (w, h) = (self.width, self.height);
        let mut out = BinaryMask::empty(w, h);
        for y in 0..h {
            for x in 0..w {
                if !self.get(x, y) {
                    continue;
                }
                for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                    for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                        out.bits[ny * w + nx] = 1;
                    }
                }
            }
        }
        out
    }

    /// Foreground pixels with at least one 4-neighbor in the background (or
    /// on the raster border), as pixel-center points in row-major order.
    pub fn boundary_points(&self) -> Vec<Point> {
        let (w, h) = (self.width, self.height);
        let mut pts = Vec::new();
        for y in 0..h {
            for x in 0..w {
                if !self.get(x, y) {
                    continue;
                }
                let edge = x == 0
                    || y == 0
                    || x + 1 == w
                    || y + 1 == h
                    || !self.get(x - 1, y)
                    || !self.get(x + 1, y)
                    || !self.get(x, y - 1)
                    || !self.get(x, y + 1);
                if edge {
                    pts.push(Point::new(x as f64, y as f64));
                }
            }
        }
        pts
    }

    /// `|self ∧ other|_1`.
    pub fn intersection_count(&self, other: &BinaryMask) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(&a, &b)| a == 1 && b == 1)
            .count()
    }

    /// Intersection over union; 1 when both are empty.
    pub fn iou(&self, other: &BinaryMask) -> f64 {
        let inter = self.intersection_count(other);
        let union = self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(&a, &b)| a == 1 || b == 1)
            .count();
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }
}

/// Detected or warped edge points together with the raster bounds they live in.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMap {
    points: Vec<Point>,
    width: usize,
    height: usize,
}

impl EdgeMap {
    pub fn new(points: Vec<Point>, width: usize, height: usize) -> Result<Self> {
        let out = points.iter().find(|p| {
            !(p.x >= 0.0 && p.y >= 0.0 && p.x <= (width - 1) as f64 && p.y <= (height - 1) as f64)
        });
        if let Some(p) = out {
            return Err(Error::invalid(format!(
                "edge point ({}, {}) outside {}x{}",
                p.x, p.y, width, height
            )));
        }
        Ok(EdgeMap {
            points,
            width,
            height,
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

/// Foreground mask, edge map, distance transform and plant center of a frame.
#[derive(Debug, Clone)]
pub struct FrameAnalysis {
    pub mask: BinaryMask,
    pub edges: EdgeMap,
    pub dt: DistanceField,
    /// Centroid of the foreground mask.
    pub plant_center: Point,
}

impl FrameAnalysis {
    pub fn dims(&self) -> (usize, usize) {
        self.mask.dims()
    }

    /// Frame diagonal, the length normalizing the angle term.
    pub fn diagonal(&self) -> f64 {
        let (w, h) = self.dims();
        ((w * w + h * h) as f64).sqrt()
    }
}

/// Otsu foreground, Sobel edges inside it and their distance transform.
pub fn analyze_frame(img: &GrayImage, edge_threshold: f64) -> Result<FrameAnalysis> {
    let mask = foreground_mask(img)?;
    let plant_center = mask.centroid().ok_or(Error::EmptyMask)?;
    let edges = sobel_edges(img, &mask, edge_threshold)?;
    let dt = distance_transform(&edges)?;
    Ok(FrameAnalysis {
        mask,
        edges,
        dt,
        plant_center,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_rejects_out_of_range() {
        assert!(GrayImage::new(2, 1, vec![0.0, 1.5]).is_err());
        assert!(GrayImage::new(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn mask_basics() {
        let m = BinaryMask::from_indices(4, 3, &[5, 6, 9]);
        assert_eq!(m.count(), 3);
        assert_eq!(m.bounding_box(), Some((1, 1, 2, 2)));
        let c = m.centroid().unwrap();
        assert!((c.x - 4.0 / 3.0).abs() < 1e-12 && (c.y - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.dilate().count(), 12);
    }

    #[test]
    fn edge_map_bounds() {
        assert!(EdgeMap::new(vec![Point::new(3.0, 0.0)], 3, 3).is_err());
        assert!(EdgeMap::new(vec![Point::new(2.0, 2.0)], 3, 3).is_ok());
    }
}
