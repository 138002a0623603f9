use super::{BinaryMask, EdgeMap, GrayImage};
use crate::error::{Error, Result};
use crate::geometry::Point;

/// Default fraction of the maximum Sobel magnitude that marks an edge.
pub const DEFAULT_EDGE_THRESHOLD: f64 = 0.10;

const OTSU_BINS: usize = 256;

/// Sobel edges of the masked image (background zeroed). A pixel is an edge
/// point when its gradient magnitude reaches `rel_threshold` of the maximum
/// magnitude and it lies inside the mask dilated by one pixel.
pub fn sobel_edges(img: &GrayImage, mask: &BinaryMask, rel_threshold: f64) -> Result<EdgeMap> {
    if img.dims() != mask.dims() {
        return Err(Error::DimensionMismatch(format!(
            "image {:?} vs mask {:?}",
            img.dims(),
            mask.dims()
        )));
    }
    if !(rel_threshold > 0.0 && rel_threshold < 1.0) {
        return Err(Error::invalid("edge threshold must lie in (0, 1)"));
    }
    let (w, h) = img.dims();
    let masked: Vec<f64> = img
        .data()
        .iter()
        .zip(mask.bits())
        .map(|(&v, &b)| if b == 1 { v } else { 0.0 })
        .collect();
    let at = |x: isize, y: isize| {
        let x = x.clamp(0, w as isize - 1) as usize;
        let y = y.clamp(0, h as isize - 1) as usize;
        masked[y * w + x]
    };

    let mut mag = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            mag[y as usize * w + x as usize] = gx.hypot(gy);
        }
    }
    let max = mag.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return Err(Error::NoEdges);
    }
    let cut = rel_threshold * max;
    let region = mask.dilate();
    let points: Vec<Point> = (0..w * h)
        .filter(|&k| mag[k] >= cut && region.bits()[k] == 1)
        .map(|k| Point::new((k % w) as f64, (k / w) as f64))
        .collect();
    if points.is_empty() {
        return Err(Error::NoEdges);
    }
    EdgeMap::new(points, w, h)
}

/// Otsu threshold over a 256-bin histogram of `[0, 1]` intensities. Returns
/// the last bin of the background class.
pub fn otsu_threshold(img: &GrayImage) -> Result<usize> {
    let mut hist = [0usize; OTSU_BINS];
    for &v in img.data() {
        hist[bin(v)] += 1;
    }
    if hist.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::DegenerateHistogram);
    }
    let total = img.data().len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();
    let (mut w0, mut sum0) = (0.0, 0.0);
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (t, &c) in hist.iter().enumerate().take(OTSU_BINS - 1) {
        w0 += c as f64;
        sum0 += t as f64 * c as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let m0 = sum0 / w0;
        let m1 = (sum_all - sum0) / w1;
        let between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if between > best.0 {
            best = (between, t);
        }
    }
    Ok(best.1)
}

fn bin(v: f64) -> usize {
    ((v * OTSU_BINS as f64) as usize).min(OTSU_BINS - 1)
}

/// Foreground by Otsu thresholding: pixels above the background class.
pub fn foreground_mask(img: &GrayImage) -> Result<BinaryMask> {
    let t = otsu_threshold(img)?;
    let (w, h) = img.dims();
    let bits = img.data().iter().map(|&v| (bin(v) > t) as u8).collect();
    BinaryMask::new(w, h, bits)
}
