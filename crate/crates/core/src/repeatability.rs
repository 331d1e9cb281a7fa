//! Cross-frame repeatability and localization error of detected segments,
//! using depth and camera poses to carry lines from one frame into the
//! other.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{reproject_segment, CameraModel, DepthImage, DistanceKind, LineSegment2D, PoseSE3};
use crate::vectorized::{rescale_lines, MetricConfig};

/// Inputs for one frame pair. Poses are world-from-camera.
#[derive(Clone, Copy, Debug)]
pub struct FramePairContext<'a> {
    pub lines_1: &'a [LineSegment2D],
    pub lines_2: &'a [LineSegment2D],
    pub depth_1: &'a DepthImage,
    pub depth_2: &'a DepthImage,
    pub pose_1: &'a PoseSE3,
    pub pose_2: &'a PoseSE3,
    pub camera: &'a CameraModel,
}

impl FramePairContext<'_> {
    pub fn swapped(&self) -> Self {
        Self {
            lines_1: self.lines_2,
            lines_2: self.lines_1,
            depth_1: self.depth_2,
            depth_2: self.depth_1,
            pose_1: self.pose_2,
            pose_2: self.pose_1,
            camera: self.camera,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepeatabilityResult {
    pub rep: f64,
    /// Mean of the within-threshold nearest distances; `None` when there are
    /// none.
    pub localization_error: Option<f64>,
    /// Reprojected lines that found a partner: (1 into 2, 2 into 1).
    pub matched_counts: (usize, usize),
    /// Lines lost to missing depth, falling behind the camera, or clipping.
    pub dropped: usize,
    /// |L1| + |L2|.
    pub line_count: usize,
    pub distance_sum: f64,
    pub distance_count: usize,
}

pub fn nearest_distance(line: &LineSegment2D, set: &[LineSegment2D], kind: DistanceKind) -> Option<f64> {
    set.iter().map(|other| kind.distance(line, other)).min_by(f64::total_cmp)
}

/// Whether some member of `set` lies within `d_max` of `line`.
pub fn min_distance_indicator(line: &LineSegment2D, set: &[LineSegment2D], cfg: &MetricConfig) -> bool {
    nearest_distance(line, set, cfg.distance).is_some_and(|d| d <= cfg.d_max)
}

/// Sum of the values taken in ascending order, so the result does not
/// depend on how the values were gathered.
fn ordered_sum(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}

pub fn repeatability(ctx: &FramePairContext<'_>, cfg: &MetricConfig) -> Result<RepeatabilityResult> {
    let line_count = ctx.lines_1.len() + ctx.lines_2.len();
    if line_count == 0 {
        return Err(Error::UndefinedMetric("both frames have no lines".into()));
    }
    let native = (ctx.camera.width, ctx.camera.height);
    let to_eval = |lines: &[LineSegment2D]| rescale_lines(lines, native, cfg.eval_resolution);

    let mut dropped = 0;
    let mut reproject = |lines: &[LineSegment2D], depth, from, to| -> Vec<LineSegment2D> {
        let kept: Vec<LineSegment2D> = lines
            .iter()
            .filter_map(|l| reproject_segment(l, depth, from, to, ctx.camera))
            .collect();
        dropped += lines.len() - kept.len();
        to_eval(&kept)
    };
    let moved_1 = reproject(ctx.lines_1, ctx.depth_1, ctx.pose_1, ctx.pose_2);
    let moved_2 = reproject(ctx.lines_2, ctx.depth_2, ctx.pose_2, ctx.pose_1);
    let raw_1 = to_eval(ctx.lines_1);
    let raw_2 = to_eval(ctx.lines_2);

    let mut distances = Vec::new();
    let mut count_within = |moved: &[LineSegment2D], targets: &[LineSegment2D]| -> usize {
        let mut hits = 0;
        for line in moved {
            if let Some(d) = nearest_distance(line, targets, cfg.distance) {
                if d <= cfg.d_max {
                    hits += 1;
                    distances.push(d);
                }
            }
        }
        hits
    };
    let hits_12 = count_within(&moved_1, &raw_2);
    let hits_21 = count_within(&moved_2, &raw_1);

    let distance_count = distances.len();
    let distance_sum = ordered_sum(&mut distances);
    Ok(RepeatabilityResult {
        rep: (hits_12 + hits_21) as f64 / line_count as f64,
        localization_error: (distance_count > 0).then(|| distance_sum / distance_count as f64),
        matched_counts: (hits_12, hits_21),
        dropped,
        line_count,
        distance_sum,
        distance_count,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepeatabilitySummary {
    /// Repeated lines over all lines, pooled across pairs.
    pub rep: Option<f64>,
    /// Pair localization errors weighted by their distance-set sizes.
    pub localization_error: Option<f64>,
    pub pairs: usize,
    pub dropped: usize,
}

pub fn summarize(results: &[RepeatabilityResult]) -> RepeatabilitySummary {
    let repeated: usize = results.iter().map(|r| r.matched_counts.0 + r.matched_counts.1).sum();
    let lines: usize = results.iter().map(|r| r.line_count).sum();
    let count: usize = results.iter().map(|r| r.distance_count).sum();
    let sum: f64 = results.iter().map(|r| r.distance_sum).sum();
    RepeatabilitySummary {
        rep: (lines > 0).then(|| repeated as f64 / lines as f64),
        localization_error: (count > 0).then(|| sum / count as f64),
        pairs: results.len(),
        dropped: results.iter().map(|r| r.dropped).sum(),
    }
}
