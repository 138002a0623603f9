//! Frame overlays: leaf outlines colored by ID, outer tips red, inner tips blue.

use crate::align::CandidateSet;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::imaging::GrayImage;
use image::{Rgb, RgbImage};
use std::path::Path;

const PALETTE: [[u8; 3]; 8] = [
    [255, 215, 0],
    [0, 200, 255],
    [255, 100, 200],
    [120, 255, 120],
    [255, 150, 50],
    [170, 120, 255],
    [0, 255, 200],
    [255, 255, 255],
];

fn mark(img: &mut RgbImage, p: Point, color: [u8; 3]) {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let (cx, cy) = (p.x.round() as i64, p.y.round() as i64);
    for y in cy - 1..=cy + 1 {
        for x in cx - 1..=cx + 1 {
            if (0..w).contains(&x) && (0..h).contains(&y) {
                img.put_pixel(x as u32, y as u32, Rgb(color));
            }
        }
    }
}

pub fn render(frame: &GrayImage, leaves: &CandidateSet) -> RgbImage {
    let (w, h) = frame.dims();
    let mut img = RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let v = (frame.get(x as usize, y as usize).clamp(0.0, 1.0) * 255.0).round() as u8;
        Rgb([v, v, v])
    });
    for m in &leaves.members {
        let color = PALETTE[(m.id as usize).wrapping_sub(1) % PALETTE.len()];
        for p in m.candidate.warped_mask.to_mask().boundary_points() {
            img.put_pixel(p.x as u32, p.y as u32, Rgb(color));
        }
    }
    for m in &leaves.members {
        mark(&mut img, m.candidate.tips.0, [255, 0, 0]);
        mark(&mut img, m.candidate.tips.1, [0, 0, 255]);
    }
    img
}

pub fn write(frame: &GrayImage, leaves: &CandidateSet, path: &Path) -> Result<()> {
    render(frame, leaves)
        .save(path)
        .map_err(|e| Error::format(format!("cannot write overlay {}", path.display()), e))
}
