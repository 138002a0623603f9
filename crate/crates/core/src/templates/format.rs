//! Versioned JSON template files.
//!
//! ```json
//! { "format": 1,
//!   "templates": [ { "shape_id": "ovate", "width": 25, "height": 37,
//!                    "mask_rows": [[[12, 1]], [[11, 3]], ...],
//!                    "edge_points": [[12, 3], ...],
//!                    "tips": [[12, 3], [12, 33]] } ],
//!   "scales": [0.5, 0.6],
//!   "rotation_step_deg": 15 }
//! ```
//!
//! `mask_rows[y]` lists `[start, length]` runs of foreground pixels.

use super::{build_library, default_scales, LeafTemplate, TemplateLibrary};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::imaging::BinaryMask;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TemplateRecord {
    pub shape_id: String,
    pub width: usize,
    pub height: usize,
    pub mask_rows: Vec<Vec<[usize; 2]>>,
    pub edge_points: Vec<Point>,
    pub tips: [Point; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LibraryFile {
    pub format: u32,
    pub templates: Vec<TemplateRecord>,
    #[serde(default)]
    pub scales: Option<Vec<f64>>,
    #[serde(default)]
    pub rotation_step_deg: Option<f64>,
}

impl TemplateRecord {
    pub fn from_template(t: &LeafTemplate) -> Self {
        let (w, h) = t.mask().dims();
        let mask_rows = (0..h)
            .map(|y| {
                let mut runs = Vec::new();
                let mut x = 0;
                while x < w {
                    if t.mask().get(x, y) {
                        let start = x;
                        while x < w && t.mask().get(x, y) {
                            x += 1;
                        }
                        runs.push([start, x - start]);
                    } else {
                        x += 1;
                    }
                }
                runs
            })
            .collect();
        let (o, i) = t.tips();
        TemplateRecord {
            shape_id: t.shape_id().to_string(),
            width: w,
            height: h,
            mask_rows,
            edge_points: t.edge_points().to_vec(),
            tips: [o, i],
        }
    }

    pub fn to_template(&self) -> Result<LeafTemplate> {
        let ctx = format!("template {}", self.shape_id);
        if self.mask_rows.len() != self.height {
            return Err(Error::format(ctx, "mask_rows length differs from height"));
        }
        let mut mask = BinaryMask::empty(self.width, self.height);
        for (y, runs) in self.mask_rows.iter().enumerate() {
            for &[start, len] in runs {
                if start + len > self.width {
                    return Err(Error::format(ctx, "mask run exceeds width"));
                }
                for x in start..start + len {
                    mask.set(x, y, true);
                }
            }
        }
        LeafTemplate::from_parts(self.shape_id.clone(), self.edge_points.clone(), mask, self.tips[0], self.tips[1])
    }
}

pub fn read_library_file(path: &Path) -> Result<TemplateLibrary> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("cannot read templates {}", path.display()), e))?;
    let file: LibraryFile =
        serde_json::from_str(&text).map_err(|e| Error::format(format!("templates {}", path.display()), e))?;
    if file.format != FORMAT_VERSION {
        return Err(Error::format(
            format!("templates {}", path.display()),
            format!("unsupported format {}", file.format),
        ));
    }
    let basic = file.templates.iter().map(TemplateRecord::to_template).collect::<Result<Vec<_>>>()?;
    build_library(basic, file.scales.unwrap_or_else(default_scales), file.rotation_step_deg.unwrap_or(15.0))
}

pub fn write_library_file(library: &TemplateLibrary, rotation_step_deg: f64, path: &Path) -> Result<()> {
    let file = LibraryFile {
        format: FORMAT_VERSION,
        templates: library.basic().iter().map(TemplateRecord::from_template).collect(),
        scales: Some(library.scales().to_vec()),
        rotation_step_deg: Some(rotation_step_deg),
    };
    let text = serde_json::to_string_pretty(&file).expect("serializable");
    std::fs::write(path, text).map_err(|e| Error::io(format!("cannot write templates {}", path.display()), e))
}
