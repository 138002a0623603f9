//! Small geometric building blocks: 2-D points and a C¹ cubic grid sampler.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

/// A point in pixel (or template) coordinates. Pixel `(i, j)` has its center
/// at `x = i`, `y = j`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Arithmetic mean of a point set; `None` when empty.
    pub fn mean(points: &[Point]) -> Option<Point> {
        if points.is_empty() {
            return None;
        }
        let n = points.len() as f64;
        let (sx, sy) = points
            .iter()
            .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
        Some(Point::new(sx / n, sy / n))
    }
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Point::new(v[0], v[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

/// How a [`CubicGrid`] fills the samples it needs beyond the raster.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Border {
    /// Linear extrapolation; the resulting knot tangents at the border are
    /// one-sided differences.
    Extrapolate,
    /// Zeros outside the raster; sampling far outside returns 0.
    Zero,
}

/// Catmull-Rom (cubic Hermite with central-difference tangents) interpolation
/// over a raster. It reproduces the raster exactly at integer coordinates and
/// is continuously differentiable everywhere inside its support.
#[derive(Debug, Clone)]
pub struct CubicGrid {
    width: usize,
    height: usize,
    pad: usize,
    stride: usize,
    data: Vec<f64>,
    border: Border,
}

const EXTRAPOLATE_PAD: usize = 2;
const ZERO_PAD: usize = 4;

impl CubicGrid {
    pub fn new(width: usize, height: usize, values: &[f64], border: Border) -> Self {
        assert_eq!(values.len(), width * height, "raster size mismatch");
        assert!(width > 0 && height > 0, "empty raster");
        let pad = match border {
            Border::Extrapolate => EXTRAPOLATE_PAD,
            Border::Zero => ZERO_PAD,
        };
        let stride = width + 2 * pad;
        let rows = height + 2 * pad;
        let mut data = vec![0.0; stride * rows];
        for y in 0..height {
            let dst = (y + pad) * stride + pad;
            data[dst..dst + width].copy_from_slice(&values[y * width..(y + 1) * width]);
        }
        if border == Border::Extrapolate {
            // Extend along x on the interior rows, then along y on all columns.
            for y in pad..pad + height {
                let row = &mut data[y * stride..(y + 1) * stride];
                extrapolate_line(row, pad, width, 1);
            }
            for x in 0..stride {
                extrapolate_line(&mut data[x..], pad, height, stride);
            }
        }
        CubicGrid {
            width,
            height,
            pad,
            stride,
            data,
            border,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Value and gradient at `p`. For [`Border::Extrapolate`] the caller must
    /// pass coordinates inside `[0, w-1] x [0, h-1]`; for [`Border::Zero`]
    /// anything outside the padded support yields zeros.
    pub fn sample(&self, p: Point) -> (f64, Point) {
        let fx = p.x.floor();
        let fy = p.y.floor();
        let ix = fx as isize;
        let iy = fy as isize;
        let pad = self.pad as isize;
        let lo = 1 - pad;
        let hi_x = self.width as isize + pad - 3;
        let hi_y = self.height as isize + pad - 3;
        if ix < lo || iy < lo || ix > hi_x || iy > hi_y || !p.x.is_finite() || !p.y.is_finite() {
            debug_assert!(
                self.border == Border::Zero,
                "extrapolated grid sampled out of range at ({}, {})",
                p.x,
                p.y
            );
            return (0.0, Point::default());
        }
        let (wx, dwx) = catmull_rom_weights(p.x - fx);
        let (wy, dwy) = catmull_rom_weights(p.y - fy);
        let base_x = (ix - 1 + pad) as usize;
        let base_y = (iy - 1 + pad) as usize;
        let mut v = 0.0;
        let mut gx = 0.0;
        let mut gy = 0.0;
        for (j, (&wyj, &dwyj)) in wy.iter().zip(dwy.iter()).enumerate() {
            let row = &self.data[(base_y + j) * self.stride + base_x..][..4];
            let mut r = 0.0;
            let mut dr = 0.0;
            for i in 0..4 {
                r += wx[i] * row[i];
                dr += dwx[i] * row[i];
            }
            v += wyj * r;
            gx += wyj * dr;
            gy += dwyj * r;
        }
        (v, Point::new(gx, gy))
    }

    /// Interpolation taps for `p` as `(padded_index, weight)`, used to fold
    /// fixed sub-pixel offsets into a correlation kernel. Valid only for
    /// coordinates inside the raster.
    pub(crate) fn taps(&self, p: Point) -> impl Iterator<Item = (isize, isize, f64)> {
        let fx = p.x.floor();
        let fy = p.y.floor();
        let (wx, _) = catmull_rom_weights(p.x - fx);
        let (wy, _) = catmull_rom_weights(p.y - fy);
        let ix = fx as isize;
        let iy = fy as isize;
        (0..16).filter_map(move |k| {
            let (i, j) = (k % 4, k / 4);
            let w = wx[i] * wy[j];
            (w != 0.0).then_some((ix - 1 + i as isize, iy - 1 + j as isize, w))
        })
    }

    /// Raw padded value at integer coordinates (may be in the padding).
    pub(crate) fn padded_value(&self, x: isize, y: isize) -> f64 {
        let px = (x + self.pad as isize) as usize;
        let py = (y + self.pad as isize) as usize;
        self.data[py * self.stride + px]
    }
}

fn extrapolate_line(line: &mut [f64], pad: usize, len: usize, step: usize) {
    let at = |i: usize| i * step;
    let first = line[at(pad)];
    let second = if len > 1 { line[at(pad + 1)] } else { first };
    let last = line[at(pad + len - 1)];
    let before_last = if len > 1 { line[at(pad + len - 2)] } else { last };
    for k in 1..=pad {
        line[at(pad - k)] = first + (first - second) * k as f64;
        line[at(pad + len - 1 + k)] = last + (last - before_last) * k as f64;
    }
}

/// Catmull-Rom weights for taps at offsets -1, 0, 1, 2 and their derivatives.
fn catmull_rom_weights(t: f64) -> ([f64; 4], [f64; 4]) {
    let t2 = t * t;
    let t3 = t2 * t;
    let w = [
        0.5 * (-t + 2.0 * t2 - t3),
        0.5 * (2.0 - 5.0 * t2 + 3.0 * t3),
        0.5 * (t + 4.0 * t2 - 3.0 * t3),
        0.5 * (-t2 + t3),
    ];
    let dw = [
        0.5 * (-1.0 + 4.0 * t - 3.0 * t2),
        0.5 * (-10.0 * t + 9.0 * t2),
        0.5 * (1.0 + 8.0 * t - 9.0 * t2),
        0.5 * (-2.0 * t + 3.0 * t2),
    ];
    (w, dw)
}
