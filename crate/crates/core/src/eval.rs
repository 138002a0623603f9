//! Tip-based evaluation: per-pair tip error, greedy frame-level matching,
//! video-level correspondence by accumulated match counts, and the unmatched
//! rate, landmark error and tracking consistency curves over a threshold.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// Tip coordinates `[t1x, t1y, t2x, t2y]`, outer tip first.
pub type Tips = [f64; 4];

/// A leaf in a label or prediction file: either a bare tip row, or a row
/// with the leaf's ID.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LeafRecord {
    Bare(Tips),
    Identified { id: u32, tips: Tips },
}

impl LeafRecord {
    pub fn tips(&self) -> Tips {
        match *self {
            LeafRecord::Bare(t) | LeafRecord::Identified { tips: t, .. } => t,
        }
    }

    pub fn id(&self) -> Option<u32> {
        match *self {
            LeafRecord::Bare(_) => None,
            LeafRecord::Identified { id, .. } => Some(id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameTips {
    pub frame: usize,
    pub leaves: Vec<LeafRecord>,
}

/// Tips of one video over its labeled (or predicted) frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoTips {
    pub video_id: String,
    pub frames: Vec<FrameTips>,
}

impl VideoTips {
    pub fn frame(&self, index: usize) -> Option<&FrameTips> {
        self.frames.iter().find(|f| f.frame == index)
    }
}

/// Reads one video object or an array of them.
pub fn read_tips_file(path: &Path) -> Result<Vec<VideoTips>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("cannot read {}", path.display()), e))?;
    parse_tips(&text).map_err(|m| Error::format(path.display().to_string(), m))
}

pub fn parse_tips(text: &str) -> std::result::Result<Vec<VideoTips>, String> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        Many(Vec<VideoTips>),
        One(VideoTips),
    }
    let videos = match serde_json::from_str::<OneOrMany>(text).map_err(|e| e.to_string())? {
        OneOrMany::Many(v) => v,
        OneOrMany::One(v) => vec![v],
    };
    for v in &videos {
        for f in &v.frames {
            if f.leaves.iter().flat_map(|l| l.tips()).any(|c| !c.is_finite()) {
                return Err(format!("video {} frame {}: non-finite tip coordinate", v.video_id, f.frame));
            }
        }
    }
    Ok(videos)
}

/// Sum of the two tip displacements over twice the labeled leaf length.
pub fn tip_error(est: &Tips, lab: &Tips) -> Result<f64> {
    let len = (lab[0] - lab[2]).hypot(lab[1] - lab[3]);
    if len == 0.0 {
        return Err(Error::ZeroLeafLength);
    }
    let e1 = (est[0] - lab[0]).hypot(est[1] - lab[1]);
    let e2 = (est[2] - lab[2]).hypot(est[3] - lab[3]);
    Ok((e1 + e2) / (2.0 * len))
}

/// Tip error under the better of the two tip pairings, for labels without
/// tip order.
pub fn tip_error_unordered(est: &Tips, lab: &Tips) -> Result<f64> {
    let swapped = [est[2], est[3], est[0], est[1]];
    Ok(tip_error(est, lab)?.min(tip_error(&swapped, lab)?))
}

/// Frame-level correspondence.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    /// `|N^l - N^e|`.
    pub f: usize,
    /// Error of each matched pair (0 elsewhere).
    pub er: Vec<Vec<f64>>,
    /// Matched pairs, in pick order, as `(estimated, labeled)` rows.
    pub pairs: Vec<(usize, usize)>,
    pub matched: Vec<Vec<bool>>,
}

impl MatchResult {
    pub fn id_matrix(&self) -> Vec<Vec<u8>> {
        self.matched.iter().map(|r| r.iter().map(|&b| b as u8).collect()).collect()
    }
}

/// Greedy matching on the pairwise tip-error matrix: repeatedly take the
/// global minimum (ties to the lowest row, then column) and invalidate its
/// row and column.
pub fn leaf_match(est: &[Tips], lab: &[Tips], unordered: bool) -> Result<MatchResult> {
    let err = if unordered { tip_error_unordered } else { tip_error };
    let (ne, nl) = (est.len(), lab.len());
    let mut d = vec![vec![0.0; nl]; ne];
    for (i, e) in est.iter().enumerate() {
        for (j, l) in lab.iter().enumerate() {
            d[i][j] = err(e, l)?;
        }
    }
    let mut er = vec![vec![0.0; nl]; ne];
    let mut matched = vec![vec![false; nl]; ne];
    let mut row_used = vec![false; ne];
    let mut col_used = vec![false; nl];
    let mut pairs = Vec::new();
    for _ in 0..ne.min(nl) {
        let mut best: Option<(usize, usize)> = None;
        for i in (0..ne).filter(|&i| !row_used[i]) {
            for j in (0..nl).filter(|&j| !col_used[j]) {
                if best.map_or(true, |(bi, bj)| d[i][j] < d[bi][bj]) {
                    best = Some((i, j));
                }
            }
        }
        let (i, j) = best.expect("unmatched rows and columns remain");
        row_used[i] = true;
        col_used[j] = true;
        matched[i][j] = true;
        er[i][j] = d[i][j];
        pairs.push((i, j));
    }
    Ok(MatchResult {
        f: ne.abs_diff(nl),
        er,
        pairs,
        matched,
    })
}

/// Threshold grid `0, 0.01, ..., 1`.
pub fn tau_grid() -> Vec<f64> {
    (0..=100).map(|k| k as f64 / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tau: Vec<f64>,
    /// Unmatched leaf rate.
    pub f: Vec<f64>,
    /// Landmark error; `None` where no frame-level error is within `τ`.
    pub e: Vec<Option<f64>>,
    /// Tracking consistency.
    pub t: Vec<f64>,
    /// Total number of labeled leaves.
    pub n_b: usize,
    /// Total count mismatch over all labeled frames.
    pub f_total: usize,
    /// Errors of all frame-level matches.
    pub e1: Vec<f64>,
    /// Errors of the matches that agree with the video-level correspondence.
    pub e2: Vec<f64>,
}

impl EvalReport {
    pub fn at(&self, tau: f64) -> Option<(f64, Option<f64>, f64)> {
        let k = self.tau.iter().position(|&t| (t - tau).abs() < 1e-9)?;
        Some((self.f[k], self.e[k], self.t[k]))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("tau,F,E,T\n");
        for k in 0..self.tau.len() {
            let e = self.e[k].map(crate::fmt::sig9).unwrap_or_default();
            s.push_str(&format!(
                "{},{},{},{}\n",
                crate::fmt::sig9(self.tau[k]),
                crate::fmt::sig9(self.f[k]),
                e,
                crate::fmt::sig9(self.t[k])
            ));
        }
        s
    }
}

/// Key of a leaf's row or column in the video-level count matrix: its ID, or
/// its position within the frame when the file carries no IDs.
fn identity_keys(leaves: &[LeafRecord]) -> Vec<u64> {
    leaves
        .iter()
        .enumerate()
        .map(|(pos, l)| match l.id() {
            Some(id) => id as u64,
            None => (1u64 << 32) + pos as u64,
        })
        .collect()
}

/// Errors accumulated over one video, keyed by estimated and labeled leaf
/// identity.
#[derive(Default)]
struct VideoAccumulator {
    counts: BTreeMap<(u64, u64), usize>,
    errors: BTreeMap<(u64, u64), Vec<f64>>,
    rows: Vec<u64>,
    cols: Vec<u64>,
}

impl VideoAccumulator {
    fn key_index(list: &mut Vec<u64>, key: u64) {
        if !list.contains(&key) {
            list.push(key);
        }
    }

    /// Video-level pairs: repeatedly the pair with the most frame-level
    /// matches (ties to the earliest row, then column), invalidating its
    /// row and column.
    fn correspondence(&self) -> Vec<(u64, u64)> {
        let mut rows = self.rows.clone();
        let mut cols = self.cols.clone();
        rows.sort_unstable();
        cols.sort_unstable();
        let mut row_used = vec![false; rows.len()];
        let mut col_used = vec![false; cols.len()];
        let mut out = Vec::new();
        for _ in 0..rows.len().min(cols.len()) {
            let mut best: Option<(usize, usize, usize)> = None;
            for (i, r) in rows.iter().enumerate().filter(|(i, _)| !row_used[*i]) {
                for (j, c) in cols.iter().enumerate().filter(|(j, _)| !col_used[*j]) {
                    let n = self.counts.get(&(*r, *c)).copied().unwrap_or(0);
                    if best.map_or(true, |(_, _, b)| n > b) {
                        best = Some((i, j, n));
                    }
                }
            }
            let (i, j, _) = best.expect("rows and columns remain");
            row_used[i] = true;
            col_used[j] = true;
            out.push((rows[i], cols[j]));
        }
        out
    }
}

/// Evaluates predictions against labels over every labeled frame.
pub fn evaluate(predictions: &[VideoTips], labels: &[VideoTips], unordered: bool) -> Result<EvalReport> {
    let mut f_total = 0;
    let mut n_b = 0;
    let mut e1 = Vec::new();
    let mut e2 = Vec::new();
    for video in labels {
        let pred = predictions
            .iter()
            .find(|p| p.video_id == video.video_id)
            .ok_or_else(|| Error::MissingFrame {
                video: video.video_id.clone(),
                frame: video.frames.first().map_or(0, |f| f.frame),
            })?;
        let mut acc = VideoAccumulator::default();
        for lab in &video.frames {
            let est = pred.frame(lab.frame).ok_or_else(|| Error::MissingFrame {
                video: video.video_id.clone(),
                frame: lab.frame,
            })?;
            let est_tips: Vec<Tips> = est.leaves.iter().map(LeafRecord::tips).collect();
            let lab_tips: Vec<Tips> = lab.leaves.iter().map(LeafRecord::tips).collect();
            let m = leaf_match(&est_tips, &lab_tips, unordered)?;
            f_total += m.f;
            n_b += lab.leaves.len();
            let rk = identity_keys(&est.leaves);
            let ck = identity_keys(&lab.leaves);
            rk.iter().for_each(|&k| VideoAccumulator::key_index(&mut acc.rows, k));
            ck.iter().for_each(|&k| VideoAccumulator::key_index(&mut acc.cols, k));
            // Row-major order over the matched mask.
            for (i, row) in m.matched.iter().enumerate() {
                for (j, &hit) in row.iter().enumerate() {
                    if hit {
                        e1.push(m.er[i][j]);
                        *acc.counts.entry((rk[i], ck[j])).or_insert(0) += 1;
                        acc.errors.entry((rk[i], ck[j])).or_default().push(m.er[i][j]);
                    }
                }
            }
        }
        for pair in acc.correspondence() {
            if let Some(errs) = acc.errors.get(&pair) {
                e2.extend_from_slice(errs);
            }
        }
    }
    Ok(curves(f_total, n_b, e1, e2))
}

fn curves(f_total: usize, n_b: usize, e1: Vec<f64>, e2: Vec<f64>) -> EvalReport {
    let tau = tau_grid();
    let nb = n_b as f64;
    let mut f = Vec::with_capacity(tau.len());
    let mut e = Vec::with_capacity(tau.len());
    let mut t = Vec::with_capacity(tau.len());
    for &th in &tau {
        let above = e1.iter().filter(|&&v| v > th).count();
        let within: Vec<f64> = e1.iter().copied().filter(|&v| v <= th).collect();
        if n_b == 0 {
            f.push(0.0);
            t.push(0.0);
        } else {
            f.push((f_total + above) as f64 / nb);
            t.push(e2.iter().filter(|&&v| v <= th).count() as f64 / nb);
        }
        e.push((!within.is_empty()).then(|| within.iter().sum::<f64>() / within.len() as f64));
    }
    EvalReport {
        tau,
        f,
        e,
        t,
        n_b,
        f_total,
        e1,
        e2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tip_error_cases() {
        let lab = [0.0, 0.0, 3.0, 4.0];
        assert_eq!(tip_error(&lab, &lab).unwrap(), 0.0);
        let moved = [5.0, 0.0, 8.0, 4.0];
        assert!((tip_error(&moved, &lab).unwrap() - 1.0).abs() < 1e-15);
        assert!(tip_error(&lab, &[1.0, 1.0, 1.0, 1.0]).is_err());
        let swapped = [3.0, 4.0, 0.0, 0.0];
        assert_eq!(tip_error_unordered(&swapped, &lab).unwrap(), 0.0);
    }

    #[test]
    fn empty_estimates() {
        let lab = vec![[0.0, 0.0, 1.0, 0.0]; 3];
        let m = leaf_match(&[], &lab, false).unwrap();
        assert_eq!(m.f, 3);
        assert!(m.pairs.is_empty());
    }

    #[test]
    fn zero_error_match_still_counts() {
        let lab = VideoTips {
            video_id: "v".into(),
            frames: vec![FrameTips {
                frame: 0,
                leaves: vec![LeafRecord::Bare([0.0, 0.0, 10.0, 0.0])],
            }],
        };
        let r = evaluate(&[lab.clone()], &[lab], false).unwrap();
        assert_eq!(r.e1, vec![0.0]);
        assert_eq!(r.at(0.0), Some((0.0, Some(0.0), 1.0)));
    }

    #[test]
    fn missing_frame_is_reported() {
        let lab = VideoTips {
            video_id: "v".into(),
            frames: vec![FrameTips { frame: 4, leaves: vec![] }],
        };
        let pred = VideoTips {
            video_id: "v".into(),
            frames: vec![],
        };
        let e = evaluate(&[pred], &[lab], false).unwrap_err();
        assert!(e.to_string().contains("frame 4"), "{e}");
    }

    #[test]
    fn parses_both_leaf_forms() {
        let v = parse_tips(r#"{"video_id": "a", "frames": [{"frame": 0, "leaves": [[1,2,3,4], {"id": 7, "tips": [5,6,7,8]}]}]}"#)
            .unwrap();
        assert_eq!(v[0].frames[0].leaves[1].id(), Some(7));
        assert!(parse_tips(r#"{"video_id": "a", "frames": [{"frame": 0, "leaves": [[1,2,3]]}]}"#).is_err());
    }
}
