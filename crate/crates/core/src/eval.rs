//! Whole-sequence evaluations. Each one takes loaded inputs and settings and
//! returns a [`Report`] holding the metrics and every setting that shaped
//! them.
//!
//! Frames and frame pairs are processed in parallel on the current rayon
//! pool; results are collected in frame order and reduced sequentially, so
//! the report does not depend on the number of threads.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::association::{association_prf, classify_matches, gt_matches, total_tally, AssociationTally, MatchSet};
use crate::error::{Error, Result};
use crate::geometry::{CameraModel, DistanceKind, LineSegment2D, PoseSE3};
use crate::heatmap::{default_heatmap_d_max, heatmap_curve, heatmap_prf, match_heatmaps, rasterize};
use crate::io::{
    fps, sequence_stats, DepthSource, Detections, FrameMapping, FramePair, Report, SequenceAnnotation, Timings,
    Trajectory,
};
use crate::pose::{
    aggregate_pose_errors, build_correspondences, estimate_relative_pose, relative_pose_error, PoseEstimate,
    RPEResult, SolverConfig,
};
use crate::repeatability::{repeatability, summarize, FramePairContext, RepeatabilityResult};
use crate::vectorized::{
    average_precision, classify, pooled_precision_recall_f, pr_curve, rescale_lines, ClassifiedDetections,
    MetricConfig, DEFAULT_EVAL_RESOLUTION,
};

/// Native frame size assumed when none is given.
pub const DEFAULT_IMAGE_SIZE: (u32, u32) = (640, 480);

fn size_str(size: (u32, u32)) -> String {
    format!("{}x{}", size.0, size.1)
}

fn list_str(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn percent(v: f64) -> Option<f64> {
    Some(100.0 * v)
}

fn count(n: usize) -> Option<f64> {
    Some(n as f64)
}

fn distance_prefix(kind: DistanceKind) -> &'static str {
    match kind {
        DistanceKind::Structural => "s",
        DistanceKind::Orthogonal => "o",
    }
}

fn check_size(name: &str, size: (u32, u32)) -> Result<()> {
    if size.0 == 0 || size.1 == 0 {
        return Err(Error::InvalidValue(format!("{name} must be positive, got {}", size_str(size))));
    }
    Ok(())
}

fn check_thresholds(d_max: &[f64]) -> Result<()> {
    if d_max.is_empty() {
        return Err(Error::InvalidValue("at least one d_max is required".into()));
    }
    match d_max.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
        Some(d) => Err(Error::InvalidValue(format!("d_max must be positive, got {d}"))),
        None => Ok(()),
    }
}

/// Detection frames must all be annotated.
fn check_detection_frames(annotation: &SequenceAnnotation, detections: &Detections) -> Result<()> {
    match detections.frames.keys().find(|f| annotation.frame(**f).is_none()) {
        Some(f) => Err(Error::InvalidValue(format!("detections reference frame {f}, which is not annotated"))),
        None => Ok(()),
    }
}

/// `(frames[k], frames[k + stride])` for every valid `k`.
pub fn frame_pairs(frames: &[u64], stride: usize) -> Result<Vec<FramePair>> {
    if stride == 0 {
        return Err(Error::InvalidValue("stride must be at least 1".into()));
    }
    Ok(frames.iter().zip(frames.iter().skip(stride)).map(|(&a, &b)| (a, b)).collect())
}

fn pair_key(pair: FramePair, metric: &str) -> String {
    format!("pair.{}-{}.{metric}", pair.0, pair.1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectionSettings {
    pub distance: DistanceKind,
    /// One set of metrics per threshold, in pixels at `eval_resolution`.
    pub d_max: Vec<f64>,
    pub eval_resolution: (u32, u32),
    /// Size of the frames the coordinates refer to.
    pub image_size: (u32, u32),
}

impl Default for DetectionSettings {
    fn default() -> Self {
        Self {
            distance: DistanceKind::Structural,
            d_max: vec![5.0, 10.0],
            eval_resolution: DEFAULT_EVAL_RESOLUTION,
            image_size: DEFAULT_IMAGE_SIZE,
        }
    }
}

/// Vectorized detection metrics over every annotated frame. Precision,
/// recall, F-score and AP are reported in percent under keys such as
/// `sP5`, `sR5`, `sF5` and `sAP5` (`o` for the orthogonal distance). AP
/// and its curve appear only for scored detections.
pub fn evaluate_detection(
    annotation: &SequenceAnnotation,
    detections: &Detections,
    settings: &DetectionSettings,
) -> Result<Report> {
    check_thresholds(&settings.d_max)?;
    check_size("image size", settings.image_size)?;
    check_detection_frames(annotation, detections)?;
    let frames: Vec<(Vec<LineSegment2D>, Vec<LineSegment2D>)> = annotation
        .frames()
        .par_iter()
        .map(|f| {
            let rescale = |lines: &[LineSegment2D]| rescale_lines(lines, settings.image_size, settings.eval_resolution);
            (rescale(detections.frame(f.frame_id)), rescale(&f.lines))
        })
        .collect();

    let mut report = Report::new("eval-detection");
    report
        .meta("distance", settings.distance.as_str())
        .meta("d_max", list_str(&settings.d_max))
        .meta("eval_resolution", size_str(settings.eval_resolution))
        .meta("image_size", size_str(settings.image_size))
        .meta("scored", detections.is_scored())
        .meta("scale", "percent");
    report
        .metric("frames", count(frames.len()))
        .metric("gt", count(frames.iter().map(|f| f.1.len()).sum()))
        .metric("predictions", count(frames.iter().map(|f| f.0.len()).sum()));

    let prefix = distance_prefix(settings.distance);
    for &d in &settings.d_max {
        let cfg = MetricConfig::new(settings.distance, d, settings.eval_resolution)?;
        let per_frame: Vec<ClassifiedDetections> =
            frames.par_iter().map(|(preds, gts)| classify(preds, gts, &cfg)).collect();
        let prf = pooled_precision_recall_f(&per_frame);
        report
            .metric(format!("{prefix}P{d}"), percent(prf.precision))
            .metric(format!("{prefix}R{d}"), percent(prf.recall))
            .metric(format!("{prefix}F{d}"), percent(prf.f_score))
            .metric(format!("tp{d}"), count(per_frame.iter().map(|c| c.tp()).sum()))
            .metric(format!("fp{d}"), count(per_frame.iter().map(|c| c.fp()).sum()));
        if detections.is_scored() {
            report.metric(format!("{prefix}AP{d}"), percent(average_precision(&per_frame)?));
            report.curves.insert(format!("{prefix}AP{d}"), pr_curve(&per_frame)?);
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeatmapSettings {
    /// Matching radius in pixels at `eval_resolution`; `None` uses 1% of
    /// its diagonal.
    pub d_max: Option<f64>,
    /// Confidence thresholds swept for AP^H.
    pub thresholds: Vec<f64>,
    pub eval_resolution: (u32, u32),
    pub image_size: (u32, u32),
}

impl Default for HeatmapSettings {
    fn default() -> Self {
        Self {
            d_max: None,
            thresholds: (0..20).map(|k| k as f64 / 20.0).collect(),
            eval_resolution: DEFAULT_EVAL_RESOLUTION,
            image_size: DEFAULT_IMAGE_SIZE,
        }
    }
}

/// Pixel-level metrics on rasterized segments. `PH`, `RH`, `FH` use every
/// detection; `APH` and its curve sweep the thresholds and need scores.
/// Values are in percent.
pub fn evaluate_heatmap(
    annotation: &SequenceAnnotation,
    detections: &Detections,
    settings: &HeatmapSettings,
) -> Result<Report> {
    check_size("image size", settings.image_size)?;
    check_size("evaluation resolution", settings.eval_resolution)?;
    check_detection_frames(annotation, detections)?;
    let size = settings.eval_resolution;
    let d_max = settings.d_max.unwrap_or_else(|| default_heatmap_d_max(size));
    check_thresholds(&[d_max])?;
    if let Some(t) = settings.thresholds.iter().find(|t| !t.is_finite()) {
        return Err(Error::InvalidValue(format!("threshold {t} is not finite")));
    }
    let rescale = |lines: &[LineSegment2D]| rescale_lines(lines, settings.image_size, size);
    let preds: Vec<Vec<LineSegment2D>> =
        annotation.frames().iter().map(|f| rescale(detections.frame(f.frame_id))).collect();
    let gts: Vec<Vec<LineSegment2D>> = annotation.frames().iter().map(|f| rescale(&f.lines)).collect();

    let per_frame = preds
        .par_iter()
        .zip(&gts)
        .map(|(p, g)| match_heatmaps(&rasterize(p, size), &rasterize(g, size), d_max))
        .collect::<Result<Vec<_>>>()?;
    let prf = heatmap_prf(&per_frame);

    let mut report = Report::new("eval-heatmap");
    report
        .meta("d_max", d_max)
        .meta("thresholds", list_str(&settings.thresholds))
        .meta("eval_resolution", size_str(size))
        .meta("image_size", size_str(settings.image_size))
        .meta("scored", detections.is_scored())
        .meta("scale", "percent");
    report
        .metric("frames", count(gts.len()))
        .metric("PH", percent(prf.precision))
        .metric("RH", percent(prf.recall))
        .metric("FH", percent(prf.f_score))
        .metric("tp", count(per_frame.iter().map(|r| r.tp).sum()))
        .metric("fp", count(per_frame.iter().map(|r| r.fp).sum()))
        .metric("fn", count(per_frame.iter().map(|r| r.fn_).sum()));
    if detections.is_scored() && !settings.thresholds.is_empty() {
        let curve = heatmap_curve(&preds, &gts, &settings.thresholds, d_max, size)?;
        report.metric("APH", percent(curve.average_precision));
        report.curves.insert("APH".into(), curve.points);
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RepeatabilitySettings {
    pub distance: DistanceKind,
    pub d_max: Vec<f64>,
    pub eval_resolution: (u32, u32),
    pub stride: usize,
    pub mapping: FrameMapping,
}

impl Default for RepeatabilitySettings {
    fn default() -> Self {
        Self {
            distance: DistanceKind::Structural,
            d_max: vec![5.0],
            eval_resolution: DEFAULT_EVAL_RESOLUTION,
            stride: 1,
            mapping: FrameMapping::Positional,
        }
    }
}

fn mapping_str(mapping: &FrameMapping) -> &'static str {
    match mapping {
        FrameMapping::Positional => "positional",
        FrameMapping::Timestamps(_) => "timestamps",
    }
}

/// Repeatability and localization error over frame pairs `stride` apart
/// among the frames that have depth. Pairs without any lines are skipped
/// and counted. `Rep{d}` is a fraction, `LE{d}` is in pixels at the
/// evaluation resolution.
pub fn evaluate_repeatability(
    detections: &Detections,
    depth: &dyn DepthSource,
    trajectory: &Trajectory,
    camera: &CameraModel,
    settings: &RepeatabilitySettings,
) -> Result<Report> {
    check_thresholds(&settings.d_max)?;
    let configs = settings
        .d_max
        .iter()
        .map(|&d| MetricConfig::new(settings.distance, d, settings.eval_resolution))
        .collect::<Result<Vec<_>>>()?;
    let frames = depth.frame_ids();
    let pairs = frame_pairs(&frames, settings.stride)?;

    let per_pair = pairs
        .par_iter()
        .map(|&(a, b)| -> Result<Vec<Option<RepeatabilityResult>>> {
            let (depth_a, depth_b) = (depth.depth(a)?, depth.depth(b)?);
            let (pose_a, pose_b) = (trajectory.pose_of(a, &settings.mapping)?, trajectory.pose_of(b, &settings.mapping)?);
            let ctx = FramePairContext {
                lines_1: detections.frame(a),
                lines_2: detections.frame(b),
                depth_1: &depth_a,
                depth_2: &depth_b,
                pose_1: &pose_a,
                pose_2: &pose_b,
                camera,
            };
            configs
                .iter()
                .map(|cfg| match repeatability(&ctx, cfg) {
                    Ok(r) => Ok(Some(r)),
                    Err(Error::UndefinedMetric(_)) => Ok(None),
                    Err(e) => Err(e),
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = Report::new("eval-repeatability");
    report
        .meta("distance", settings.distance.as_str())
        .meta("d_max", list_str(&settings.d_max))
        .meta("eval_resolution", size_str(settings.eval_resolution))
        .meta("stride", settings.stride)
        .meta("frame_mapping", mapping_str(&settings.mapping))
        .meta("camera", format!("{camera:?}"));
    let without_depth = detections.frames.keys().filter(|f| frames.binary_search(f).is_err()).count();
    report
        .metric("pairs", count(pairs.len()))
        .metric("skipped_pairs", count(per_pair.iter().filter(|r| r[0].is_none()).count()))
        .metric("frames_without_depth", count(without_depth));
    for (k, &d) in settings.d_max.iter().enumerate() {
        let results: Vec<RepeatabilityResult> = per_pair.iter().filter_map(|r| r[k].clone()).collect();
        let summary = summarize(&results);
        report
            .metric(format!("Rep{d}"), summary.rep)
            .metric(format!("LE{d}"), summary.localization_error)
            .metric(format!("dropped{d}"), count(summary.dropped));
        for (&pair, r) in pairs.iter().zip(&per_pair) {
            report.metric(pair_key(pair, &format!("Rep{d}")), r[k].as_ref().map(|r| r.rep));
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssociationSettings {
    pub stride: usize,
}

impl Default for AssociationSettings {
    fn default() -> Self {
        Self { stride: 1 }
    }
}

/// Association precision, recall and F-score (fractions) over annotated
/// frame pairs `stride` apart. Ground truth pairs lines sharing a track id;
/// predicted matches index the annotated lines. A pair absent from
/// `matches` has no predicted matches.
pub fn evaluate_association(
    annotation: &SequenceAnnotation,
    matches: &BTreeMap<FramePair, MatchSet>,
    settings: &AssociationSettings,
) -> Result<Report> {
    let frames: Vec<u64> = annotation.frame_ids().collect();
    let pairs = frame_pairs(&frames, settings.stride)?;
    let empty = MatchSet::default();
    let tallies = pairs
        .par_iter()
        .map(|&(a, b)| -> Result<AssociationTally> {
            let lines_a = &annotation.frame(a).expect("pair frames are annotated").lines;
            let lines_b = &annotation.frame(b).expect("pair frames are annotated").lines;
            let pred = matches.get(&(a, b)).unwrap_or(&empty);
            pred.check_bounds(lines_a.len(), lines_b.len())
                .map_err(|e| Error::InvalidValue(format!("frames ({a}, {b}): {e}")))?;
            let gt = gt_matches(lines_a, lines_b)?;
            Ok(classify_matches(pred, &gt, lines_a.len(), lines_b.len()))
        })
        .collect::<Result<Vec<_>>>()?;
    let total = total_tally(&tallies);
    let prf = association_prf(&tallies);

    let mut report = Report::new("eval-association");
    report.meta("stride", settings.stride).meta("scale", "fraction");
    let unused = matches.keys().filter(|k| pairs.binary_search(k).is_err()).count();
    report
        .metric("pairs", count(pairs.len()))
        .metric("unused_match_pairs", count(unused))
        .metric("P", Some(prf.precision))
        .metric("R", Some(prf.recall))
        .metric("F", Some(prf.f_score))
        .metric("tp", count(total.tp))
        .metric("fp", count(total.fp))
        .metric("fn", count(total.fn_))
        .metric("tn", count(total.tn));
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoseSettings {
    pub stride: usize,
    pub solver: SolverConfig,
    pub mapping: FrameMapping,
}

impl Default for PoseSettings {
    fn default() -> Self {
        Self {
            stride: 1,
            solver: SolverConfig::default(),
            mapping: FrameMapping::Positional,
        }
    }
}

/// Outcome of the solver on one frame pair.
#[derive(Clone, Debug, PartialEq)]
pub struct PairPose {
    pub pair: FramePair,
    /// `None` when the solver failed or did not converge.
    pub error: Option<RPEResult>,
    pub correspondences: usize,
    pub dropped: usize,
}

/// Error of one solver run against the ground truth `pose_i⁻¹ · pose_j`,
/// or `None` when the solver failed or stopped without converging. Input
/// errors are passed on.
pub fn pose_outcome(estimate: Result<PoseEstimate>, ground_truth: &PoseSE3) -> Result<Option<RPEResult>> {
    match estimate {
        Ok(est) if est.converged => Ok(Some(relative_pose_error(&est.pose.inverse(), ground_truth))),
        Ok(_) => Ok(None),
        Err(e) if e.is_input_error() => Err(e),
        Err(_) => Ok(None),
    }
}

/// Relative pose for each frame pair `stride` apart among the frames with
/// depth. Matched lines of the first frame are lifted with its depth and
/// aligned to the second frame's lines; the estimate maps first-frame points
/// into the second camera, so its inverse is compared with
/// `pose_i⁻¹ · pose_j`.
pub fn estimate_pair_poses(
    lines: &BTreeMap<u64, Vec<LineSegment2D>>,
    matches: &BTreeMap<FramePair, MatchSet>,
    depth: &dyn DepthSource,
    trajectory: &Trajectory,
    camera: &CameraModel,
    settings: &PoseSettings,
) -> Result<Vec<PairPose>> {
    settings.solver.validate()?;
    let frames = depth.frame_ids();
    let pairs = frame_pairs(&frames, settings.stride)?;
    let empty = MatchSet::default();
    let none: &[LineSegment2D] = &[];
    pairs
        .par_iter()
        .map(|&(a, b)| -> Result<PairPose> {
            let lines_a = lines.get(&a).map_or(none, Vec::as_slice);
            let lines_b = lines.get(&b).map_or(none, Vec::as_slice);
            let pred = matches.get(&(a, b)).unwrap_or(&empty);
            let depth_a = depth.depth(a)?;
            let gt = trajectory.relative_gt(a, b, &settings.mapping)?;
            let (cs, dropped) = build_correspondences(pred, lines_a, lines_b, &depth_a, camera)
                .map_err(|e| Error::InvalidValue(format!("frames ({a}, {b}): {e}")))?;
            let error = pose_outcome(estimate_relative_pose(&cs, camera, &settings.solver), &gt)?;
            Ok(PairPose {
                pair: (a, b),
                error,
                correspondences: cs.len(),
                dropped,
            })
        })
        .collect()
}

/// Median translation (meters) and rotation (degrees) errors over the
/// frame pairs; both are absent when more than half of the pairs failed.
pub fn evaluate_pose(
    lines: &BTreeMap<u64, Vec<LineSegment2D>>,
    matches: &BTreeMap<FramePair, MatchSet>,
    depth: &dyn DepthSource,
    trajectory: &Trajectory,
    camera: &CameraModel,
    settings: &PoseSettings,
) -> Result<Report> {
    let per_pair = estimate_pair_poses(lines, matches, depth, trajectory, camera, settings)?;
    Ok(pose_report(&per_pair, camera, settings))
}

pub fn pose_report(per_pair: &[PairPose], camera: &CameraModel, settings: &PoseSettings) -> Report {
    let errors: Vec<Option<RPEResult>> = per_pair.iter().map(|p| p.error).collect();
    let summary = aggregate_pose_errors(&errors);
    let solver = &settings.solver;

    let mut report = Report::new("eval-pose");
    report
        .meta("stride", settings.stride)
        .meta("frame_mapping", mapping_str(&settings.mapping))
        .meta("camera", format!("{camera:?}"))
        .meta(
            "convention",
            "estimate maps frame i points into camera j; inverse(estimate) is compared with pose_i^-1 * pose_j",
        )
        .meta("solver.max_iterations", solver.max_iterations)
        .meta("solver.huber_delta", solver.huber_delta)
        .meta("solver.convergence_tol", solver.convergence_tol)
        .meta("solver.damping", solver.damping)
        .meta("solver.normalization", solver.normalization.as_str())
        .meta("solver.outlier_thresholds", list_str(&solver.outlier_thresholds))
        .meta("solver.initial_pose", format!("{:?}", solver.initial_pose));
    report
        .metric("pairs", count(per_pair.len()))
        .metric("successes", count(summary.successes))
        .metric("failures", count(summary.failures))
        .metric("failure_fraction", Some(summary.failure_fraction))
        .metric("median_trans", summary.median_trans)
        .metric("median_rot", summary.median_rot)
        .metric("dropped_correspondences", count(per_pair.iter().map(|p| p.dropped).sum()));
    for p in per_pair {
        report
            .metric(pair_key(p.pair, "trans_error"), p.error.map(|e| e.trans_error))
            .metric(pair_key(p.pair, "rot_error"), p.error.map(|e| e.rot_error));
    }
    report
}

/// Track, frame and line counts of an annotated sequence.
pub fn evaluate_stats(annotation: &SequenceAnnotation) -> Report {
    let s = sequence_stats(annotation);
    let mut report = Report::new("stats");
    report
        .metric("n_tracks", count(s.n_tracks))
        .metric("n_frames", count(s.n_frames))
        .metric("n_lines", count(s.n_lines))
        .metric("mean_lines_per_frame", Some(s.mean_lines_per_frame))
        .metric("lines_per_frame", Some(s.rounded_mean() as f64));
    report
}

pub fn evaluate_fps(timings: &Timings) -> Result<Report> {
    let rate = fps(timings)?;
    let mut report = Report::new("fps");
    report
        .metric("fps", Some(rate))
        .metric("frames", count(timings.rows.len()))
        .metric("total_seconds", Some(timings.rows.iter().map(|r| r.1).sum()));
    Ok(report)
}
