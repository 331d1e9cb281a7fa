//! Vectorized detection metrics: true/false positive classification of
//! predicted segments against annotations, precision/recall/F-score, and
//! average precision over a pooled precision-recall curve.

use std::cmp::Ordering;

use nalgebra::Point2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DistanceKind, LineSegment2D};
use crate::metrics::{interpolated_area, PRPoint, PrecisionRecallF};

/// Resolution at which detection metrics are evaluated by default.
pub const DEFAULT_EVAL_RESOLUTION: (u32, u32) = (128, 128);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub distance: DistanceKind,
    /// Maximum matching distance in pixels at `eval_resolution`.
    pub d_max: f64,
    pub eval_resolution: (u32, u32),
}

impl MetricConfig {
    pub fn new(distance: DistanceKind, d_max: f64, eval_resolution: (u32, u32)) -> Result<Self> {
        if !(d_max > 0.0) {
            return Err(Error::InvalidValue(format!("d_max must be positive, got {d_max}")));
        }
        if eval_resolution.0 == 0 || eval_resolution.1 == 0 {
            return Err(Error::InvalidValue("evaluation resolution must be positive".into()));
        }
        Ok(Self {
            distance,
            d_max,
            eval_resolution,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    TruePositive,
    FalsePositive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedDetections {
    pub labels: Vec<Label>,
    pub scores: Vec<Option<f64>>,
    /// Ground-truth index claimed by each true positive.
    pub matched_gt: Vec<Option<usize>>,
    pub gt_count: usize,
}

impl ClassifiedDetections {
    pub fn tp(&self) -> usize {
        self.labels.iter().filter(|l| **l == Label::TruePositive).count()
    }

    pub fn fp(&self) -> usize {
        self.labels.len() - self.tp()
    }
}

/// Scales endpoints independently along each axis from one image size to
/// another.
pub fn rescale_lines(lines: &[LineSegment2D], from: (u32, u32), to: (u32, u32)) -> Vec<LineSegment2D> {
    let sx = to.0 as f64 / from.0 as f64;
    let sy = to.1 as f64 / from.1 as f64;
    let scale = |p: Point2<f64>| Point2::new(p.x * sx, p.y * sy);
    lines
        .iter()
        .map(|l| LineSegment2D {
            p1: scale(l.p1),
            p2: scale(l.p2),
            ..*l
        })
        .collect()
}

/// Labels every prediction as a true or false positive.
///
/// Predictions are visited by descending confidence (ties: closer to the
/// nearest annotation first, then input order). Without confidences on every
/// prediction they are visited by ascending distance to their nearest
/// annotation. Each visited prediction claims the nearest still-unclaimed
/// annotation within `d_max`.
pub fn classify(preds: &[LineSegment2D], gts: &[LineSegment2D], cfg: &MetricConfig) -> ClassifiedDetections {
    let dist: Vec<Vec<f64>> = preds
        .iter()
        .map(|p| gts.iter().map(|g| cfg.distance.distance(p, g)).collect())
        .collect();
    let nearest: Vec<f64> = dist
        .iter()
        .map(|row| row.iter().copied().fold(f64::INFINITY, f64::min))
        .collect();
    let scored = preds.iter().all(|p| p.score.is_some());

    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| {
        let by_score = if scored {
            let (sa, sb) = (preds[a].score.unwrap_or(0.0), preds[b].score.unwrap_or(0.0));
            sb.total_cmp(&sa)
        } else {
            Ordering::Equal
        };
        by_score
            .then(nearest[a].total_cmp(&nearest[b]))
            .then(a.cmp(&b))
    });

    let mut claimed = vec![false; gts.len()];
    let mut labels = vec![Label::FalsePositive; preds.len()];
    let mut matched_gt = vec![None; preds.len()];
    for i in order {
        let best = dist[i]
            .iter()
            .enumerate()
            .filter(|&(j, &d)| !claimed[j] && d <= cfg.d_max)
            .min_by(|x, y| x.1.total_cmp(y.1).then(x.0.cmp(&y.0)));
        if let Some((j, _)) = best {
            claimed[j] = true;
            labels[i] = Label::TruePositive;
            matched_gt[i] = Some(j);
        }
    }

    ClassifiedDetections {
        labels,
        scores: preds.iter().map(|p| p.score).collect(),
        matched_gt,
        gt_count: gts.len(),
    }
}

pub fn precision_recall_f(c: &ClassifiedDetections) -> PrecisionRecallF {
    PrecisionRecallF::from_counts(c.tp(), c.fp(), c.gt_count)
}

/// Precision/recall/F-score from TP, FP and ground-truth totals summed over
/// all frames.
pub fn pooled_precision_recall_f(per_frame: &[ClassifiedDetections]) -> PrecisionRecallF {
    let (tp, fp, gt) = per_frame
        .iter()
        .fold((0, 0, 0), |(tp, fp, gt), c| (tp + c.tp(), fp + c.fp(), gt + c.gt_count));
    PrecisionRecallF::from_counts(tp, fp, gt)
}

struct RawCurve {
    /// `(threshold, recall, precision)` after each distinct score.
    points: Vec<(f64, f64, f64)>,
}

fn raw_curve(per_frame: &[ClassifiedDetections]) -> Result<RawCurve> {
    let mut pooled = Vec::new();
    for c in per_frame {
        for (label, score) in c.labels.iter().zip(&c.scores) {
            pooled.push((score.ok_or(Error::ScoresRequired)?, *label == Label::TruePositive));
        }
    }
    pooled.sort_by(|a, b| b.0.total_cmp(&a.0));
    let total_gt: usize = per_frame.iter().map(|c| c.gt_count).sum();

    let mut points = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < pooled.len() {
        let score = pooled[i].0;
        while i < pooled.len() && pooled[i].0 == score {
            if pooled[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let recall = if total_gt == 0 { 0.0 } else { tp as f64 / total_gt as f64 };
        points.push((score, recall, tp as f64 / (tp + fp) as f64));
    }
    Ok(RawCurve { points })
}

/// Average precision over detections pooled from all frames, in `[0, 1]`.
pub fn average_precision(per_frame: &[ClassifiedDetections]) -> Result<f64> {
    let curve = raw_curve(per_frame)?;
    let pts: Vec<(f64, f64)> = curve.points.iter().map(|&(_, r, p)| (r, p)).collect();
    Ok(interpolated_area(&pts))
}

/// Interpolated precision-recall polyline: one vertex per score level at
/// which recall increases, carrying the interpolated precision there.
pub fn pr_curve(per_frame: &[ClassifiedDetections]) -> Result<Vec<PRPoint>> {
    let raw = raw_curve(per_frame)?.points;
    let mut envelope: Vec<f64> = raw.iter().map(|p| p.2).collect();
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }
    let mut curve = Vec::new();
    let mut last_recall = 0.0;
    for (&(threshold, recall, _), &precision) in raw.iter().zip(&envelope) {
        if recall > last_recall {
            curve.push(PRPoint {
                threshold,
                precision,
                recall,
            });
            last_recall = recall;
        }
    }
    Ok(curve)
}
