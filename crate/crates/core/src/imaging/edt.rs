use super::EdgeMap;
use crate::error::{Error, Result};
use crate::geometry::{Border, CubicGrid, Point};

/// Euclidean distance from every pixel center to the nearest edge point.
///
/// Sampling between pixel centers uses Catmull-Rom interpolation, whose knot
/// tangents are the central-difference gradient images of the field (one-sided
/// at the border). Points outside the raster are clamped to it and pay their
/// out-of-bounds distance as a penalty.
#[derive(Debug, Clone)]
pub struct DistanceField {
    width: usize,
    height: usize,
    dist: Vec<f64>,
    grid: CubicGrid,
}

impl DistanceField {
    pub fn from_values(width: usize, height: usize, dist: Vec<f64>) -> Self {
        let grid = CubicGrid::new(width, height, &dist, Border::Extrapolate);
        DistanceField {
            width,
            height,
            dist,
            grid,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.dist
    }

    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.dist[y * self.width + x]
    }

    pub(crate) fn grid(&self) -> &CubicGrid {
        &self.grid
    }

    fn clamp(&self, p: Point) -> Point {
        Point::new(
            p.x.clamp(0.0, (self.width - 1) as f64),
            p.y.clamp(0.0, (self.height - 1) as f64),
        )
    }

    /// Interpolated distance at a sub-pixel location.
    pub fn sample(&self, p: Point) -> f64 {
        self.sample_with_gradient(p).0
    }

    /// Interpolated distance and its spatial gradient.
    pub fn sample_with_gradient(&self, p: Point) -> (f64, Point) {
        let c = self.clamp(p);
        let (v, mut g) = self.grid.sample(c);
        let out = p - c;
        let penalty = out.norm();
        // A clamped axis contributes only through the penalty term.
        if out.x != 0.0 {
            g.x = out.x / penalty;
        }
        if out.y != 0.0 {
            g.y = out.y / penalty;
        }
        (v + penalty, g)
    }

    /// Central-difference gradient images (one-sided at the border).
    pub fn gradient_images(&self) -> (Vec<f64>, Vec<f64>) {
        let (w, h) = (self.width, self.height);
        let mut gx = vec![0.0; w * h];
        let mut gy = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                gx[y * w + x] = diff(|i| self.at(i, y), x, w);
                gy[y * w + x] = diff(|j| self.at(x, j), y, h);
            }
        }
        (gx, gy)
    }
}

fn diff(f: impl Fn(usize) -> f64, i: usize, n: usize) -> f64 {
    if n == 1 {
        0.0
    } else if i == 0 {
        f(1) - f(0)
    } else if i + 1 == n {
        f(n - 1) - f(n - 2)
    } else {
        0.5 * (f(i + 1) - f(i - 1))
    }
}

/// Exact Euclidean distance transform of an edge map, by the separable
/// lower-envelope-of-parabolas algorithm on squared distances. Sub-pixel
/// edge points are rounded to their pixel.
pub fn distance_transform(edges: &EdgeMap) -> Result<DistanceField> {
    if edges.is_empty() {
        return Err(Error::EmptyEdgeMap);
    }
    let (w, h) = edges.dims();
    let mut sq = vec![f64::INFINITY; w * h];
    for p in edges.points() {
        let x = (p.x.round() as usize).min(w - 1);
        let y = (p.y.round() as usize).min(h - 1);
        sq[y * w + x] = 0.0;
    }

    let n = w.max(h);
    let mut f = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];

    for x in 0..w {
        for y in 0..h {
            f[y] = sq[y * w + x];
        }
        lower_envelope(&f[..h], &mut d[..h], &mut v, &mut z);
        for y in 0..h {
            sq[y * w + x] = d[y];
        }
    }
    for y in 0..h {
        f[..w].copy_from_slice(&sq[y * w..(y + 1) * w]);
        lower_envelope(&f[..w], &mut d[..w], &mut v, &mut z);
        sq[y * w..(y + 1) * w].copy_from_slice(&d[..w]);
    }

    let dist = sq.into_iter().map(f64::sqrt).collect();
    Ok(DistanceField::from_values(w, h, dist))
}

/// 1-D squared distance transform: `d[q] = min_p (q - p)^2 + f[p]`.
fn lower_envelope(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    // Sites with infinite cost never enter the envelope.
    let mut k: isize = -1;
    for q in 0..n {
        if f[q].is_infinite() {
            continue;
        }
        let fq = f[q] + (q * q) as f64;
        loop {
            if k < 0 {
                k = 0;
                v[0] = q;
                z[0] = f64::NEG_INFINITY;
                z[1] = f64::INFINITY;
                break;
            }
            let p = v[k as usize];
            let fp = f[p] + (p * p) as f64;
            let s = (fq - fp) / (2.0 * (q as f64 - p as f64));
            if s <= z[k as usize] {
                k -= 1;
                continue;
            }
            k += 1;
            v[k as usize] = q;
            z[k as usize] = s;
            z[k as usize + 1] = f64::INFINITY;
            break;
        }
    }
    if k < 0 {
        d.iter_mut().for_each(|x| *x = f64::INFINITY);
        return;
    }
    let mut j = 0usize;
    for (q, out) in d.iter_mut().enumerate() {
        while z[j + 1] < q as f64 {
            j += 1;
        }
        let p = v[j];
        let dq = q as f64 - p as f64;
        *out = dq * dq + f[p];
    }
}
