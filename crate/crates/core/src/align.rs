//! Joint leaf segmentation and alignment on a single frame: the four-term
//! selection objective over a relaxed indicator vector, its gradient, and the
//! greedy fix-one-entry-per-iteration optimizer.

use crate::chamfer::{NominationSet, TransformedCandidate};
use crate::error::{Error, Result};
use crate::imaging::BinaryMask;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignConfig {
    /// Weight of the mean CM distance.
    pub lambda1: f64,
    /// Weight of the mask-reconstruction term.
    pub lambda2: f64,
    /// Weight of the mean angle term.
    pub lambda3: f64,
    /// Sharpness of the arctan step approximation.
    pub c: f64,
    /// Gradient step on the indicator vector.
    pub alpha1: f64,
    /// Divisor of the mask-reconstruction term.
    pub mask_norm: MaskNorm,
}

/// Normalizer of the mask-reconstruction term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskNorm {
    /// The number of frame pixels `K`.
    Frame,
    /// A fixed area in pixels, independent of the frame size.
    Area(f64),
}

/// Default reference area of the mask term.
pub const DEFAULT_MASK_NORM_AREA: f64 = 350.0;

impl MaskNorm {
    pub fn divisor(&self, k: usize) -> f64 {
        match *self {
            MaskNorm::Frame => k as f64,
            MaskNorm::Area(a) => a,
        }
    }
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig {
            lambda1: 5.0,
            lambda2: 10.0,
            lambda3: 125.0,
            c: 3.0,
            alpha1: 0.001,
            mask_norm: MaskNorm::Area(DEFAULT_MASK_NORM_AREA),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fixed {
    Free,
    Zero,
    One,
}

/// Relaxed selection vector with per-entry fixing state.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorVector {
    pub values: Vec<f64>,
    pub fixed: Vec<Fixed>,
}

impl IndicatorVector {
    pub fn all_selected(n: usize) -> Self {
        IndicatorVector {
            values: vec![1.0; n],
            fixed: vec![Fixed::Free; n],
        }
    }
}

/// A selected leaf carried through tracking.
#[derive(Debug, Clone)]
pub struct TrackedLeaf {
    pub id: u32,
    pub candidate: TransformedCandidate,
}

/// The working set of selected leaves. IDs are handed out monotonically and
/// never reused.
#[derive(Debug, Clone, Default)]
pub struct CandidateSet {
    pub members: Vec<TrackedLeaf>,
    next_id: u32,
}

impl CandidateSet {
    pub fn from_candidates(cands: Vec<TransformedCandidate>) -> Self {
        let mut set = CandidateSet::default();
        for c in cands {
            set.push(c);
        }
        set
    }

    /// Adds a candidate under a fresh ID and returns it.
    pub fn push(&mut self, candidate: TransformedCandidate) -> u32 {
        self.next_id += 1;
        let id = self.next_id;
        self.members.push(TrackedLeaf { id, candidate });
        id
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn ids(&self) -> Vec<u32> {
        self.members.iter().map(|m| m.id).collect()
    }

    /// Highest ID ever issued.
    pub fn last_issued_id(&self) -> u32 {
        self.next_id
    }
}

/// The selection problem in matrix form: sparse rows of `A`, the vectors `d`
/// and `l`, and the mask vector `m` of length `K`.
#[derive(Debug, Clone)]
pub struct AlignProblem {
    pub rows: Vec<Vec<usize>>,
    pub d: Vec<f64>,
    pub l: Vec<f64>,
    pub m: Vec<f64>,
}

impl AlignProblem {
    pub fn new(rows: Vec<Vec<usize>>, d: Vec<f64>, l: Vec<f64>, m: Vec<f64>) -> Result<Self> {
        let n = rows.len();
        if d.len() != n || l.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} rows but {} distances and {} angle terms",
                n,
                d.len(),
                l.len()
            )));
        }
        if let Some(&k) = rows.iter().flatten().find(|&&k| k >= m.len()) {
            return Err(Error::DimensionMismatch(format!("pixel index {k} beyond K = {}", m.len())));
        }
        Ok(AlignProblem { rows, d, l, m })
    }

    pub fn from_nomination(nom: &NominationSet, mask: &BinaryMask) -> Result<Self> {
        if nom.frame_dims != mask.dims() {
            return Err(Error::DimensionMismatch("nomination and mask dimensions differ".into()));
        }
        AlignProblem::new(
            (0..nom.len()).map(|n| nom.row(n).to_vec()).collect(),
            nom.d(),
            nom.l(),
            mask.as_f64(),
        )
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn k(&self) -> usize {
        self.m.len()
    }

    /// `xᵀA`.
    fn synthesized(&self, x: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; self.k()];
        for (row, &xn) in self.rows.iter().zip(x) {
            if xn != 0.0 {
                for &k in row {
                    s[k] += xn;
                }
            }
        }
        s
    }

    fn check(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.len() {
            return Err(Error::DimensionMismatch(format!("x has {} entries, expected {}", x.len(), self.len())));
        }
        let l1: f64 = x.iter().map(|v| v.abs()).sum();
        if l1 == 0.0 {
            return Err(Error::EmptySelection);
        }
        Ok(l1)
    }

    pub fn objective(&self, x: &[f64], cfg: &AlignConfig) -> Result<f64> {
        let l1 = self.check(x)?;
        let dx = dot(&self.d, x);
        let lx = dot(&self.l, x);
        let s = self.synthesized(x);
        let recon: f64 = s
            .iter()
            .zip(&self.m)
            .map(|(&sk, &mk)| {
                let e = squash(sk, cfg.c) - mk;
                e * e
            })
            .sum::<f64>()
            / cfg.mask_norm.divisor(self.k());
        Ok(l1 + cfg.lambda1 * dx / l1 + cfg.lambda2 * recon + cfg.lambda3 * lx / l1)
    }

    pub fn gradient(&self, x: &[f64], cfg: &AlignConfig) -> Result<Vec<f64>> {
        let l1 = self.check(x)?;
        let dx = dot(&self.d, x);
        let lx = dot(&self.l, x);
        let s = self.synthesized(x);
        let k = cfg.mask_norm.divisor(self.k());
        // Per-pixel factor (f - m) / (1 + (C(s - 1/2))^2).
        let pix: Vec<f64> = s
            .iter()
            .zip(&self.m)
            .map(|(&sk, &mk)| {
                let z = cfg.c * (sk - 0.5);
                (squash(sk, cfg.c) - mk) / (1.0 + z * z)
            })
            .collect();
        let recon_scale = 2.0 * cfg.lambda2 * cfg.c / (PI * k);
        Ok((0..self.len())
            .map(|n| {
                let sg = sign(x[n]);
                let recon: f64 = self.rows[n].iter().map(|&p| pix[p]).sum();
                sg + cfg.lambda1 * (self.d[n] / l1 - dx / (l1 * l1) * sg)
                    + recon_scale * recon
                    + cfg.lambda3 * (self.l[n] / l1 - lx / (l1 * l1) * sg)
            })
            .collect())
    }
}

/// `f(s) = arctan(C(s - 1/2)) / π + 1/2`.
pub fn squash(s: f64, c: f64) -> f64 {
    (c * (s - 0.5)).atan() / PI + 0.5
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn objective_j(x: &IndicatorVector, nom: &NominationSet, m: &BinaryMask, cfg: &AlignConfig) -> Result<f64> {
    AlignProblem::from_nomination(nom, m)?.objective(&x.values, cfg)
}

pub fn gradient_j(x: &IndicatorVector, nom: &NominationSet, m: &BinaryMask, cfg: &AlignConfig) -> Result<Vec<f64>> {
    AlignProblem::from_nomination(nom, m)?.gradient(&x.values, cfg)
}

/// One fixing decision of the greedy optimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixStep {
    pub index: usize,
    pub j_at_zero: f64,
    pub j_at_one: f64,
    pub fixed_to: Fixed,
    pub j_after: f64,
}

/// Result of the greedy optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub selected: Vec<usize>,
    pub x: IndicatorVector,
    pub steps: Vec<FixStep>,
    /// Every entry was fixed to 0 and the min-distance candidate was used.
    pub fallback: bool,
}

/// Greedy optimization: start from all-ones, and per iteration take a
/// gradient step on the free entries, pick the free entry with the largest
/// gradient magnitude, and fix it to whichever of 0 or 1 gives the lower
/// objective (ties to 0).
pub fn optimize_selection(problem: &AlignProblem, cfg: &AlignConfig) -> Result<Selection> {
    let n = problem.len();
    if n == 0 {
        return Err(Error::NoViableCandidates);
    }
    let mut x = IndicatorVector::all_selected(n);
    let mut steps = Vec::with_capacity(n);
    for _ in 0..n {
        let grad = problem.gradient(&x.values, cfg)?;
        for i in 0..n {
            if x.fixed[i] == Fixed::Free {
                x.values[i] = (x.values[i] - cfg.alpha1 * grad[i]).clamp(0.0, 1.0);
            }
        }
        let pick = (0..n)
            .filter(|&i| x.fixed[i] == Fixed::Free)
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if grad[b].abs() >= grad[i].abs() => Some(b),
                _ => Some(i),
            })
            .expect("a free entry remains each iteration");
        let eval = |v: f64, x: &mut IndicatorVector| -> Result<f64> {
            let old = x.values[pick];
            x.values[pick] = v;
            let r = match problem.objective(&x.values, cfg) {
                Err(Error::EmptySelection) => Ok(f64::INFINITY),
                other => other,
            };
            x.values[pick] = old;
            r
        };
        let j0 = eval(0.0, &mut x)?;
        let j1 = eval(1.0, &mut x)?;
        let (value, state, j_after) = if j0 <= j1 { (0.0, Fixed::Zero, j0) } else { (1.0, Fixed::One, j1) };
        x.values[pick] = value;
        x.fixed[pick] = state;
        steps.push(FixStep {
            index: pick,
            j_at_zero: j0,
            j_at_one: j1,
            fixed_to: state,
            j_after,
        });
    }
    let mut selected: Vec<usize> = (0..n).filter(|&i| x.fixed[i] == Fixed::One).collect();
    let fallback = selected.is_empty();
    if fallback {
        let best = (0..n)
            .min_by(|&a, &b| problem.d[a].partial_cmp(&problem.d[b]).unwrap().then(a.cmp(&b)))
            .expect("non-empty");
        selected.push(best);
    }
    Ok(Selection {
        selected,
        x,
        steps,
        fallback,
    })
}

/// Selects the leaf candidates of a frame and issues them fresh IDs.
pub fn select_candidates(nom: &NominationSet, m: &BinaryMask, cfg: &AlignConfig) -> Result<CandidateSet> {
    let problem = AlignProblem::from_nomination(nom, m)?;
    let sel = optimize_selection(&problem, cfg)?;
    Ok(CandidateSet::from_candidates(
        sel.selected.iter().map(|&i| nom.candidates[i].clone()).collect(),
    ))
}
