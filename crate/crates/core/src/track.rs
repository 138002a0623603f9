//! Multi-leaf tracking: the three-term pose objective, its analytic gradient,
//! fixed-step pose refinement, and deletion and spawning of leaf candidates.

use crate::align::{select_candidates, AlignConfig, AlignProblem, CandidateSet};
use crate::chamfer::{angle_term_at, cm_distance, nominate, nominate_with_center, snap_tips, TransformedCandidate};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::imaging::{
    analyze_frame, connected_components, distance_transform, sobel_edges, BinaryMask, DistanceField, FrameAnalysis,
    GrayImage, DEFAULT_EDGE_THRESHOLD,
};
use crate::templates::{
    backward_warp_mask, normalize_angle, warp_tips, warped_extent, LeafTemplate, LibraryEntry, Pose, TemplateLibrary,
    WarpedMask,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// How a pose gradient becomes a pose update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepRule {
    /// `p ← p − α₂ ∂G/∂p`.
    Plain,
    /// Each component is divided by the mean squared displacement it causes on
    /// the leaf's edge points, so `eta` is a step in pixels per unit of
    /// per-leaf gradient.
    Preconditioned { eta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackConfig {
    pub mu1: f64,
    pub mu2: f64,
    pub alpha2: f64,
    pub max_iters: usize,
    /// Iteration stops when no pose component changes by this much.
    pub conv_eps: f64,
    /// Leaves whose warped mask is smaller than this are deleted.
    pub min_leaf_area: usize,
    pub step: StepRule,
}

impl Default for TrackConfig {
    fn default() -> Self {
        TrackConfig {
            mu1: 1.0,
            mu2: 10.0,
            alpha2: 0.001,
            max_iters: 80,
            conv_eps: 1e-4,
            min_leaf_area: 64,
            step: StepRule::Preconditioned { eta: DEFAULT_ETA },
        }
    }
}

pub const DEFAULT_ETA: f64 = 0.25;

/// Everything the per-frame pipeline needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub align: AlignConfig,
    pub track: TrackConfig,
    pub edge_threshold: f64,
    pub overlap_min: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            align: AlignConfig::default(),
            track: TrackConfig::default(),
            edge_threshold: DEFAULT_EDGE_THRESHOLD,
            overlap_min: crate::chamfer::DEFAULT_OVERLAP_MIN,
        }
    }
}

/// The frame quantities the objective is measured against.
#[derive(Debug, Clone, Copy)]
pub struct TrackScene<'a> {
    pub dt: &'a DistanceField,
    pub mask: &'a BinaryMask,
    pub plant_center: Point,
    /// Normalizing length of the angle term (frame diagonal).
    pub diag: f64,
}

impl<'a> TrackScene<'a> {
    pub fn from_analysis(a: &'a FrameAnalysis) -> Self {
        TrackScene {
            dt: &a.dt,
            mask: &a.mask,
            plant_center: a.plant_center,
            diag: a.diagonal(),
        }
    }
}

/// Unweighted terms of the objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GTerms {
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
}

impl GTerms {
    pub fn combined(&self, cfg: &TrackConfig) -> f64 {
        self.g1 + cfg.mu1 * self.g2 + cfg.mu2 * self.g3
    }
}

/// Per-leaf gradients `[∂θ, ∂r, ∂tx, ∂ty]` of each unweighted term.
#[derive(Debug, Clone, PartialEq)]
pub struct GTermGradients {
    pub g1: Vec<[f64; 4]>,
    pub g2: Vec<[f64; 4]>,
    pub g3: Vec<[f64; 4]>,
}

impl GTermGradients {
    pub fn combined(&self, cfg: &TrackConfig) -> Vec<[f64; 4]> {
        (0..self.g1.len())
            .map(|n| {
                let mut g = [0.0; 4];
                for (k, gk) in g.iter_mut().enumerate() {
                    *gk = self.g1[n][k] + cfg.mu1 * self.g2[n][k] + cfg.mu2 * self.g3[n][k];
                }
                g
            })
            .collect()
    }
}

/// Soft-mask samples of one leaf: pixel index, value and `∇M · ∂u/∂p`.
type SoftSamples = Vec<(usize, f64, [f64; 4])>;

fn soft_samples(template: &LeafTemplate, pose: &Pose, dims: (usize, usize)) -> SoftSamples {
    let (w, _) = dims;
    let ubar = template.centroid();
    let (s, c) = pose.theta.sin_cos();
    let r = pose.r;
    let mut out = Vec::new();
    let Some((x0, y0, x1, y1)) = warped_extent(template, pose, dims, 2.0) else {
        return out;
    };
    for y in y0..=y1 {
        for x in x0..=x1 {
            let qx = x as f64 - pose.tx - ubar.x;
            let qy = y as f64 - pose.ty - ubar.y;
            let ux = (c * qx + s * qy) / r;
            let uy = (-s * qx + c * qy) / r;
            let (v, gm) = template.soft_mask().sample(Point::new(ux + ubar.x, uy + ubar.y));
            if v == 0.0 && gm.x == 0.0 && gm.y == 0.0 {
                continue;
            }
            let d_theta = ((-s * qx + c * qy) * gm.x + (-c * qx - s * qy) * gm.y) / r;
            let d_r = -(ux * gm.x + uy * gm.y) / r;
            let d_tx = -(c * gm.x - s * gm.y) / r;
            let d_ty = -(s * gm.x + c * gm.y) / r;
            out.push((y * w + x, v, [d_theta, d_r, d_tx, d_ty]));
        }
    }
    out
}

/// Mean DT value over the warped edge points and its pose gradient.
fn cm_term(template: &LeafTemplate, pose: &Pose, dt: &DistanceField) -> (f64, [f64; 4]) {
    let ubar = template.centroid();
    let (s, c) = pose.theta.sin_cos();
    let r = pose.r;
    let (mut sum, mut g) = (0.0, [0.0; 4]);
    for u in template.edge_points() {
        let v = *u - ubar;
        let rv = Point::new(c * v.x - s * v.y, s * v.x + c * v.y);
        let p = Point::new(r * rv.x + pose.tx + ubar.x, r * rv.y + pose.ty + ubar.y);
        let (d, gd) = dt.sample_with_gradient(p);
        sum += d;
        // ∂w/∂θ = r R'(θ) v, with R'v = (-rv.y, rv.x).
        g[0] += r * (-rv.y * gd.x + rv.x * gd.y);
        g[1] += rv.x * gd.x + rv.y * gd.y;
        g[2] += gd.x;
        g[3] += gd.y;
    }
    let n = template.edge_points().len() as f64;
    (sum / n, g.map(|v| v / n))
}

/// Squared angle term of one leaf and its pose gradient.
fn angle_piece(template: &LeafTemplate, pose: &Pose, plant_center: Point, diag: f64) -> (f64, [f64; 4]) {
    let center = template.centroid() + Point::new(pose.tx, pose.ty);
    let value = angle_term_at(pose.theta, center, plant_center, diag);
    let d = center - plant_center;
    let sn = d.norm();
    if sn == 0.0 {
        return (value, [0.0; 4]);
    }
    let (st, ct) = pose.theta.sin_cos();
    let e = d.x - sn * st;
    let k = 2.0 * e / (diag * diag);
    (value, [k * (-sn * ct), 0.0, k * (1.0 - st * d.x / sn), k * (-st * d.y / sn)])
}

/// Objective terms, and optionally their gradients, for leaves `templates`
/// at `poses`.
pub fn evaluate_terms(
    poses: &[Pose],
    templates: &[&LeafTemplate],
    scene: &TrackScene,
    with_gradient: bool,
) -> Result<(GTerms, Option<GTermGradients>)> {
    if poses.is_empty() {
        return Err(Error::EmptyCandidateSet);
    }
    if poses.len() != templates.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} poses for {} templates",
            poses.len(),
            templates.len()
        )));
    }
    let ne = poses.len() as f64;
    let dims = scene.mask.dims();
    let k = (dims.0 * dims.1) as f64;

    let per_leaf: Vec<((f64, [f64; 4]), SoftSamples)> = poses
        .par_iter()
        .zip(templates.par_iter())
        .map(|(p, t)| (cm_term(t, p, scene.dt), soft_samples(t, p, dims)))
        .collect();

    let mut synth: Vec<f64> = scene.mask.bits().iter().map(|&b| -(b as f64)).collect();
    for (_, samples) in &per_leaf {
        for &(idx, v, _) in samples {
            synth[idx] += v;
        }
    }
    let residual = synth;
    let g2 = residual.iter().map(|e| e * e).sum::<f64>() / k;
    let g1 = per_leaf.iter().map(|((d, _), _)| d).sum::<f64>() / ne;
    let angles: Vec<(f64, [f64; 4])> = poses
        .iter()
        .zip(templates)
        .map(|(p, t)| angle_piece(t, p, scene.plant_center, scene.diag))
        .collect();
    let g3 = angles.iter().map(|a| a.0).sum::<f64>() / ne;
    let terms = GTerms { g1, g2, g3 };
    if !with_gradient {
        return Ok((terms, None));
    }
    let grads = GTermGradients {
        g1: per_leaf.iter().map(|((_, g), _)| g.map(|v| v / ne)).collect(),
        g2: per_leaf
            .iter()
            .map(|(_, samples)| {
                let mut g = [0.0; 4];
                for &(idx, _, j) in samples {
                    let e = residual[idx];
                    for q in 0..4 {
                        g[q] += e * j[q];
                    }
                }
                g.map(|v| 2.0 * v / k)
            })
            .collect(),
        g3: angles.iter().map(|a| a.1.map(|v| v / ne)).collect(),
    };
    Ok((terms, Some(grads)))
}

/// `G = G₁ + μ₁G₂ + μ₂G₃`.
pub fn objective_g(poses: &[Pose], templates: &[&LeafTemplate], scene: &TrackScene, cfg: &TrackConfig) -> Result<f64> {
    Ok(evaluate_terms(poses, templates, scene, false)?.0.combined(cfg))
}

/// Per-leaf `[∂G/∂θ, ∂G/∂r, ∂G/∂tx, ∂G/∂ty]`.
pub fn gradient_g(
    poses: &[Pose],
    templates: &[&LeafTemplate],
    scene: &TrackScene,
    cfg: &TrackConfig,
) -> Result<Vec<[f64; 4]>> {
    let (_, g) = evaluate_terms(poses, templates, scene, true)?;
    Ok(g.expect("gradient requested").combined(cfg))
}

/// Outcome of iterative pose refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub poses: Vec<Pose>,
    pub iterations: usize,
    pub converged: bool,
    /// `G` before each update and after the last one.
    pub trace: Vec<f64>,
}

/// Fixed-step gradient descent on all poses jointly.
pub fn refine_poses(
    initial: &[Pose],
    templates: &[&LeafTemplate],
    scene: &TrackScene,
    cfg: &TrackConfig,
) -> Result<Refinement> {
    let mut poses = initial.to_vec();
    let ne = poses.len() as f64;
    let mut trace = Vec::with_capacity(cfg.max_iters + 1);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        let (terms, grads) = evaluate_terms(&poses, templates, scene, true)?;
        trace.push(terms.combined(cfg));
        let grads = grads.expect("gradient requested").combined(cfg);
        let mut max_change: f64 = 0.0;
        for (n, pose) in poses.iter_mut().enumerate() {
            let delta = match cfg.step {
                StepRule::Plain => grads[n].map(|g| -cfg.alpha2 * g),
                StepRule::Preconditioned { eta } => {
                    let rho2 = templates[n].rms_radius().powi(2);
                    let h = [pose.r * pose.r * rho2, rho2, 1.0, 1.0];
                    let mut d = [0.0; 4];
                    for q in 0..4 {
                        d[q] = -eta * ne * grads[n][q] / h[q];
                    }
                    d
                }
            };
            let before = *pose;
            *pose = pose.stepped(delta);
            let change = [
                crate::templates::normalize_angle(pose.theta - before.theta),
                pose.r - before.r,
                pose.tx - before.tx,
                pose.ty - before.ty,
            ];
            max_change = change.iter().fold(max_change, |m, v| m.max(v.abs()));
        }
        iterations += 1;
        if max_change < cfg.conv_eps {
            converged = true;
            break;
        }
    }
    trace.push(objective_g(&poses, templates, scene, cfg)?);
    Ok(Refinement {
        poses,
        iterations,
        converged,
        trace,
    })
}

/// Re-measures a leaf at `pose` against a frame.
pub fn place_leaf(
    library: &TemplateLibrary,
    leaf: &TransformedCandidate,
    pose: Pose,
    analysis: &FrameAnalysis,
) -> Result<TransformedCandidate> {
    let template = &library.basic()[leaf.entry.shape];
    let points = template.warp_edges(&pose);
    let center = template.centroid() + Point::new(pose.tx, pose.ty);
    Ok(TransformedCandidate {
        entry: leaf.entry,
        pose,
        warped_mask: backward_warp_mask(template, &pose, analysis.dims()),
        cm_distance: cm_distance(&points, &analysis.dt)?,
        angle_term: angle_term_at(pose.theta, center, analysis.plant_center, analysis.diagonal()),
        center,
        tips: snap_tips(warp_tips(template, &pose), &analysis.edges),
    })
}

/// Builds a leaf set from `(shape index, pose)` pairs, for tracking from a
/// known initialization. Each leaf's entry records the nearest library
/// scale and rotation.
pub fn leaves_from_poses(
    library: &TemplateLibrary,
    leaves: &[(usize, Pose)],
    analysis: &FrameAnalysis,
) -> Result<CandidateSet> {
    let nearest = |values: &[f64], v: f64, dist: &dyn Fn(f64, f64) -> f64| {
        (0..values.len())
            .min_by(|&a, &b| dist(values[a], v).total_cmp(&dist(values[b], v)))
            .unwrap_or(0)
    };
    let mut out = Vec::with_capacity(leaves.len());
    for &(shape, pose) in leaves {
        if shape >= library.basic().len() {
            return Err(Error::invalid(format!("no template shape {shape}")));
        }
        let entry = LibraryEntry {
            shape,
            scale: nearest(library.scales(), pose.r, &|a, b| (a.ln() - b.ln()).abs()),
            rotation: nearest(library.rotations(), pose.theta, &|a, b| normalize_angle(a - b).abs()),
        };
        let seed = TransformedCandidate {
            entry,
            pose,
            warped_mask: WarpedMask::new(analysis.mask.width(), analysis.mask.height(), Vec::new()),
            cm_distance: 0.0,
            angle_term: 0.0,
            center: Point::default(),
            tips: (Point::default(), Point::default()),
        };
        out.push(place_leaf(library, &seed, pose, analysis)?);
    }
    Ok(CandidateSet::from_candidates(out))
}

/// Drops leaves whose warped mask area is below the minimum. Returns the
/// retired IDs.
pub fn delete_small(cands: &mut CandidateSet, cfg: &TrackConfig) -> Vec<u32> {
    let mut retired = Vec::new();
    cands.members.retain(|m| {
        let keep = m.candidate.warped_mask.area() >= cfg.min_leaf_area;
        if !keep {
            retired.push(m.id);
        }
        keep
    });
    retired
}

/// Length of the major axis of the ellipse with the same second moments as
/// the mask.
pub fn equivalent_major_axis(mask: &BinaryMask) -> Option<f64> {
    let c = mask.centroid()?;
    let w = mask.width();
    let idx = mask.indices();
    let n = idx.len() as f64;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for k in idx {
        let dx = (k % w) as f64 - c.x;
        let dy = (k / w) as f64 - c.y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let (sxx, syy, sxy) = (sxx / n + 1.0 / 12.0, syy / n + 1.0 / 12.0, sxy / n);
    let half = 0.5 * (sxx + syy);
    let lmax = half + (0.25 * (sxx - syy).powi(2) + sxy * sxy).sqrt();
    Some(4.0 * lmax.sqrt())
}

/// Spawns a leaf for every residue component of at least the minimum area
/// that no current leaf explains. Returns the new IDs.
pub fn spawn_new(
    cands: &mut CandidateSet,
    image: &GrayImage,
    analysis: &FrameAnalysis,
    library: &TemplateLibrary,
    cfg: &PipelineConfig,
) -> Vec<u32> {
    let (w, h) = analysis.dims();
    let mut covered = vec![false; w * h];
    for m in &cands.members {
        for &k in m.candidate.warped_mask.indices() {
            covered[k] = true;
        }
    }
    let residue_bits = analysis
        .mask
        .bits()
        .iter()
        .zip(&covered)
        .map(|(&b, &c)| (b == 1 && !c) as u8)
        .collect();
    let residue = BinaryMask::new(w, h, residue_bits).expect("dimensions match");
    let mut new_ids = Vec::new();
    for comp in connected_components(&residue) {
        if comp.area < cfg.track.min_leaf_area {
            break;
        }
        match spawn_one(&comp.mask, image, analysis, library, cfg) {
            Ok(c) => new_ids.push(cands.push(c)),
            Err(e) => log::warn!("residue component of {} px not spawned: {e}", comp.area),
        }
    }
    new_ids
}

fn spawn_one(
    component: &BinaryMask,
    image: &GrayImage,
    analysis: &FrameAnalysis,
    library: &TemplateLibrary,
    cfg: &PipelineConfig,
) -> Result<TransformedCandidate> {
    let length = equivalent_major_axis(component).ok_or(Error::EmptyMask)?;
    let sub = library.with_scale_subset(&library.nearest_scales(length, 3));
    let edges = sobel_edges(image, component, cfg.edge_threshold)?;
    let dt = distance_transform(&edges)?;
    let nom = nominate_with_center(&sub, &edges, &dt, component, cfg.overlap_min, analysis.plant_center)?;
    // The candidate that best explains the component on its own under J.
    let problem = AlignProblem::from_nomination(&nom, component)?;
    let mut best: Option<(f64, usize)> = None;
    let mut x = vec![0.0; nom.len()];
    for n in 0..nom.len() {
        x[n] = 1.0;
        let j = problem.objective(&x, &cfg.align)?;
        x[n] = 0.0;
        if best.map_or(true, |(bj, _)| j < bj) {
            best = Some((j, n));
        }
    }
    let (_, n) = best.ok_or(Error::NoViableCandidates)?;
    let best = &nom.candidates[n];
    place_leaf(library, best, best.pose, analysis)
}

/// Per-leaf output of one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafResult {
    pub id: u32,
    pub pose: Pose,
    /// `(outer, inner)` tips snapped to the frame's edges.
    pub tips: [Point; 2],
    pub d: f64,
    pub area: usize,
    pub q_align: Option<f64>,
    pub q_track: Option<f64>,
}

/// Leaves estimated on one frame, ordered by ID.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameResult {
    pub frame: usize,
    pub leaves: Vec<LeafResult>,
}

impl FrameResult {
    pub fn from_set(frame: usize, set: &CandidateSet) -> Self {
        let mut leaves: Vec<LeafResult> = set
            .members
            .iter()
            .map(|m| LeafResult {
                id: m.id,
                pose: m.candidate.pose,
                tips: [m.candidate.tips.0, m.candidate.tips.1],
                d: m.candidate.cm_distance,
                area: m.candidate.warped_mask.area(),
                q_align: None,
                q_track: None,
            })
            .collect();
        leaves.sort_by_key(|l| l.id);
        FrameResult { frame, leaves }
    }
}

/// Frame analysis that reports an unusable foreground as a lost plant.
fn analyze_tracked(image: &GrayImage, edge_threshold: f64) -> Result<FrameAnalysis> {
    match analyze_frame(image, edge_threshold) {
        Err(Error::DegenerateHistogram | Error::EmptyMask | Error::NoEdges | Error::EmptyEdgeMap) => Err(Error::PlantLost),
        other => other,
    }
}

/// Tracks the leaves of `prev` into `image`: joint pose refinement, then
/// deletion of small leaves, then spawning on the residue.
pub fn track_frame(
    prev: &CandidateSet,
    image: &GrayImage,
    frame_index: usize,
    library: &TemplateLibrary,
    cfg: &PipelineConfig,
) -> Result<(CandidateSet, FrameAnalysis, FrameResult)> {
    if prev.is_empty() {
        return Err(Error::EmptyCandidateSet);
    }
    let analysis = analyze_tracked(image, cfg.edge_threshold)?;
    let scene = TrackScene::from_analysis(&analysis);
    let templates: Vec<&LeafTemplate> = prev.members.iter().map(|m| &library.basic()[m.candidate.entry.shape]).collect();
    let initial: Vec<Pose> = prev.members.iter().map(|m| m.candidate.pose).collect();
    let refined = refine_poses(&initial, &templates, &scene, &cfg.track)?;
    log::debug!(
        "frame {frame_index}: {} iterations, G {:.6} -> {:.6}",
        refined.iterations,
        refined.trace[0],
        refined.trace[refined.trace.len() - 1]
    );
    let mut next = prev.clone();
    for (m, pose) in next.members.iter_mut().zip(&refined.poses) {
        m.candidate = place_leaf(library, &m.candidate, *pose, &analysis)?;
    }
    delete_small(&mut next, &cfg.track);
    spawn_new(&mut next, image, &analysis, library, cfg);
    let result = FrameResult::from_set(frame_index, &next);
    Ok((next, analysis, result))
}

/// Segmentation and alignment of a single frame.
pub fn align_frame(
    image: &GrayImage,
    frame_index: usize,
    library: &TemplateLibrary,
    cfg: &PipelineConfig,
) -> Result<(CandidateSet, FrameAnalysis, FrameResult)> {
    let analysis = analyze_frame(image, cfg.edge_threshold)?;
    let nom = nominate(library, &analysis.edges, &analysis.dt, &analysis.mask, cfg.overlap_min)?;
    let set = select_candidates(&nom, &analysis.mask, &cfg.align)?;
    let result = FrameResult::from_set(frame_index, &set);
    Ok((set, analysis, result))
}

/// One processed frame of a video.
#[derive(Debug, Clone)]
pub struct TrackedFrame {
    pub result: FrameResult,
    pub leaves: CandidateSet,
    pub mask: BinaryMask,
    pub plant_center: Point,
}

/// Aligns the last frame, then tracks toward the first. Frames come back in
/// temporal order.
pub fn track_video(frames: &[GrayImage], library: &TemplateLibrary, cfg: &PipelineConfig) -> Result<Vec<TrackedFrame>> {
    let last = frames.len().checked_sub(1).ok_or_else(|| Error::invalid("video has no frames"))?;
    let (mut set, analysis, result) = align_frame(&frames[last], last, library, cfg)?;
    let mut out = vec![TrackedFrame {
        result,
        leaves: set.clone(),
        mask: analysis.mask,
        plant_center: analysis.plant_center,
    }];
    for i in (0..last).rev() {
        let (next, analysis, result) = track_frame(&set, &frames[i], i, library, cfg)?;
        set = next;
        out.push(TrackedFrame {
            result,
            leaves: set.clone(),
            mask: analysis.mask,
            plant_center: analysis.plant_center,
        });
    }
    out.reverse();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::templates::ovate_template;

    fn scene_parts() -> (LeafTemplate, BinaryMask, DistanceField) {
        let t = ovate_template("t", 20.0, 0.45, 1.0).unwrap();
        let pose = Pose::new(0.0, 1.0, 10.0, 8.0);
        let mask = backward_warp_mask(&t, &pose, (48, 48)).to_mask();
        let edges = crate::imaging::EdgeMap::new(t.warp_edges(&pose), 48, 48).unwrap();
        let dt = distance_transform(&edges).unwrap();
        (t, mask, dt)
    }

    #[test]
    fn empty_set_is_an_error() {
        let (_, mask, dt) = scene_parts();
        let scene = TrackScene {
            dt: &dt,
            mask: &mask,
            plant_center: Point::new(0.0, 0.0),
            diag: 10.0,
        };
        assert!(objective_g(&[], &[], &scene, &TrackConfig::default()).is_err());
    }

    #[test]
    fn translation_away_from_edges_raises_cm() {
        let (t, mask, dt) = scene_parts();
        let scene = TrackScene {
            dt: &dt,
            mask: &mask,
            plant_center: Point::new(24.0, 40.0),
            diag: 48f64.hypot(48.0),
        };
        let (_, g) = evaluate_terms(&[Pose::new(0.0, 1.0, 12.0, 8.0)], &[&t], &scene, true).unwrap();
        assert!(g.unwrap().g1[0][2] > 0.0);
    }

    #[test]
    fn small_leaves_are_deleted() {
        let (t, _, _) = scene_parts();
        let lib = crate::templates::build_library(vec![t.clone()], vec![1.0], 90.0).unwrap();
        let entry = lib.entries()[0];
        let mk = |area: usize| TransformedCandidate {
            entry,
            pose: Pose::identity(),
            warped_mask: crate::templates::WarpedMask::new(100, 1, (0..area).collect()),
            cm_distance: 0.0,
            angle_term: 0.0,
            center: Point::default(),
            tips: (Point::default(), Point::default()),
        };
        let mut set = CandidateSet::from_candidates(vec![mk(64), mk(63), mk(70)]);
        let retired = delete_small(&mut set, &TrackConfig::default());
        assert_eq!(retired, vec![2]);
        assert_eq!(set.ids(), vec![1, 3]);
        let id = set.push(mk(80));
        assert_eq!(id, 4);
    }

    #[test]
    fn equivalent_axis_of_a_bar() {
        let mut m = BinaryMask::empty(40, 5);
        for x in 5..35 {
            m.set(x, 2, true);
        }
        let l = equivalent_major_axis(&m).unwrap();
        // uniform bar of length 30: 4 * sqrt(30^2 / 12)
        assert!((l - 4.0 * (900.0f64 / 12.0).sqrt()).abs() < 1e-9);
    }
}
