//! Frame file I/O. 8-bit and 16-bit grayscale PNG/PGM are normalized by the
//! format maximum; color inputs are converted to luma first.

use super::GrayImage;
use crate::error::{Error, Result};
use image::{DynamicImage, ImageBuffer, Luma};
use std::path::Path;

pub fn read_frame(path: &Path) -> Result<GrayImage> {
    let img = image::open(path).map_err(|e| Error::format(format!("cannot read frame {}", path.display()), e))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<f64> = match img {
        DynamicImage::ImageLuma16(buf) => buf.into_raw().into_iter().map(|v| v as f64 / 65535.0).collect(),
        DynamicImage::ImageLumaA16(_) | DynamicImage::ImageRgb16(_) | DynamicImage::ImageRgba16(_) => img
            .to_luma16()
            .into_raw()
            .into_iter()
            .map(|v| v as f64 / 65535.0)
            .collect(),
        other => other.to_luma8().into_raw().into_iter().map(|v| v as f64 / 255.0).collect(),
    };
    GrayImage::new(w, h, data)
}

/// Writes a 16-bit grayscale PNG.
pub fn write_frame(img: &GrayImage, path: &Path) -> Result<()> {
    let raw: Vec<u16> = img.data().iter().map(|&v| (v * 65535.0).round() as u16).collect();
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(img.width() as u32, img.height() as u32, raw).expect("buffer size");
    buf.save(path)
        .map_err(|e| Error::format(format!("cannot write frame {}", path.display()), e))
}

/// Frame files in a directory (png/pgm/pnm), sorted by file name.
pub fn list_frames(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let rd = std::fs::read_dir(dir).map_err(|e| Error::io(format!("cannot read frame directory {}", dir.display()), e))?;
    let mut paths: Vec<_> = rd
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|s| s.to_str())
                .map(|s| matches!(s.to_ascii_lowercase().as_str(), "png" | "pgm" | "pnm"))
                .unwrap_or(false)
        })
        .collect();
    paths.sort();
    Ok(paths)
}
