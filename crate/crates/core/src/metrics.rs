//! Classification scores shared by the detection, heatmap and association
//! metrics.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecallF {
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
}

impl PrecisionRecallF {
    /// Precision is 1 with no predictions and recall is 1 with nothing to
    /// find; the F-score is 0 when both precision and recall are 0.
    pub fn from_counts(tp: usize, fp: usize, positives: usize) -> Self {
        let precision = if tp + fp == 0 { 1.0 } else { tp as f64 / (tp + fp) as f64 };
        let recall = if positives == 0 { 1.0 } else { tp as f64 / positives as f64 };
        Self {
            precision,
            recall,
            f_score: harmonic_mean(precision, recall),
        }
    }
}

pub fn harmonic_mean(a: f64, b: f64) -> f64 {
    if a + b == 0.0 {
        0.0
    } else {
        2.0 * a * b / (a + b)
    }
}

/// One vertex of a precision-recall curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PRPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Area under a precision-recall curve after replacing every precision by
/// the maximum precision at equal or higher recall. Points must be sorted by
/// non-decreasing recall; integration starts at recall 0.
pub fn interpolated_area(points: &[(f64, f64)]) -> f64 {
    let mut envelope: Vec<f64> = points.iter().map(|&(_, p)| p).collect();
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }
    let mut area = 0.0;
    let mut prev_recall = 0.0;
    for (&(recall, _), &precision) in points.iter().zip(&envelope) {
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    area
}
