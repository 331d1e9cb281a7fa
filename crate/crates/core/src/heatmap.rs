//! Pixel-level detection metrics on rasterized segments.
//!
//! Predicted and annotated segments are drawn into boolean heatmaps; true
//! pixels of both maps are paired by a minimum-cost maximum-cardinality
//! assignment restricted to pairs closer than `d_max`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::LineSegment2D;
use crate::matching::min_cost_max_matching;
use crate::metrics::{interpolated_area, PRPoint, PrecisionRecallF};

/// Boolean raster, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Heatmap {
    width: u32,
    height: u32,
    data: Vec<bool>,
}

impl Heatmap {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![false; width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.data[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        self.data[y as usize * self.width as usize + x as usize] = value;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|v| **v).count()
    }

    /// Coordinates of true pixels in row-major order.
    pub fn true_pixels(&self) -> Vec<(i64, i64)> {
        let w = self.width as usize;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, v)| **v)
            .map(|(i, _)| ((i % w) as i64, (i / w) as i64))
            .collect()
    }

    fn mark(&mut self, x: i64, y: i64) {
        if x >= 0 && y >= 0 && x < self.width as i64 && y < self.height as i64 {
            self.set(x as u32, y as u32, true);
        }
    }

    /// Draws one segment with 8-connected integer line traversal between
    /// its endpoints rounded to the nearest pixel. Off-image pixels are
    /// skipped.
    pub fn draw_segment(&mut self, seg: &LineSegment2D) {
        let (mut x0, mut y0) = (seg.p1.x.round() as i64, seg.p1.y.round() as i64);
        let (x1, y1) = (seg.p2.x.round() as i64, seg.p2.y.round() as i64);
        let dx = (x1 - x0).abs();
        let dy = -(y1 - y0).abs();
        let sx = if x0 < x1 { 1 } else { -1 };
        let sy = if y0 < y1 { 1 } else { -1 };
        let mut err = dx + dy;
        loop {
            self.mark(x0, y0);
            if x0 == x1 && y0 == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x0 += sx;
            }
            if e2 <= dx {
                err += dx;
                y0 += sy;
            }
        }
    }
}

pub fn rasterize(segments: &[LineSegment2D], size: (u32, u32)) -> Heatmap {
    let mut map = Heatmap::new(size.0, size.1);
    for seg in segments {
        map.draw_segment(seg);
    }
    map
}

/// Default heatmap matching radius: 1% of the image diagonal.
pub fn default_heatmap_d_max(size: (u32, u32)) -> f64 {
    0.01 * (size.0 as f64).hypot(size.1 as f64)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PixelMatchResult {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub total_assignment_cost: f64,
}

/// Pairs predicted and annotated true pixels within `d_max` by a
/// maximum-cardinality matching of minimum total Euclidean distance.
pub fn match_heatmaps(pred: &Heatmap, gt: &Heatmap, d_max: f64) -> Result<PixelMatchResult> {
    if (pred.width, pred.height) != (gt.width, gt.height) {
        return Err(Error::ShapeMismatch((pred.width, pred.height), (gt.width, gt.height)));
    }
    let pred_px = pred.true_pixels();
    let gt_px = gt.true_pixels();
    let w = gt.width as i64;
    let h = gt.height as i64;
    let mut gt_index = vec![usize::MAX; gt.data.len()];
    for (i, &(x, y)) in gt_px.iter().enumerate() {
        gt_index[(y * w + x) as usize] = i;
    }

    let radius = if d_max.is_finite() { d_max.max(0.0).floor() as i64 } else { w.max(h) };
    let mut edges = Vec::new();
    for (i, &(x, y)) in pred_px.iter().enumerate() {
        for ny in (y - radius).max(0)..=(y + radius).min(h - 1) {
            for nx in (x - radius).max(0)..=(x + radius).min(w - 1) {
                let j = gt_index[(ny * w + nx) as usize];
                if j == usize::MAX {
                    continue;
                }
                let d = ((nx - x) as f64).hypot((ny - y) as f64);
                if d <= d_max {
                    edges.push((i, j, d));
                }
            }
        }
    }

    let assignment = min_cost_max_matching(pred_px.len(), gt_px.len(), &edges)?;
    let tp = assignment.cardinality();
    Ok(PixelMatchResult {
        tp,
        fp: pred_px.len() - tp,
        fn_: gt_px.len() - tp,
        total_assignment_cost: assignment.total_cost,
    })
}

pub fn heatmap_prf(results: &[PixelMatchResult]) -> PrecisionRecallF {
    let (tp, fp, fn_) = results
        .iter()
        .fold((0, 0, 0), |(tp, fp, fn_), r| (tp + r.tp, fp + r.fp, fn_ + r.fn_));
    PrecisionRecallF::from_counts(tp, fp, tp + fn_)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatmapCurve {
    /// One point per threshold, sorted by ascending recall.
    pub points: Vec<PRPoint>,
    pub average_precision: f64,
}

/// Sweeps confidence thresholds: at each one, segments scoring at least the
/// threshold are rasterized and matched in every frame, and pooled counts
/// give one precision-recall point. Returns the curve and the area under
/// its monotone envelope.
pub fn heatmap_curve(
    scored: &[Vec<LineSegment2D>],
    gts: &[Vec<LineSegment2D>],
    thresholds: &[f64],
    d_max: f64,
    size: (u32, u32),
) -> Result<HeatmapCurve> {
    if scored.len() != gts.len() {
        return Err(Error::InvalidValue(format!(
            "{} prediction frames but {} annotation frames",
            scored.len(),
            gts.len()
        )));
    }
    if scored.iter().flatten().any(|s| s.score.is_none()) {
        return Err(Error::ScoresRequired);
    }
    let gt_maps: Vec<Heatmap> = gts.par_iter().map(|g| rasterize(g, size)).collect();

    let mut sweep: Vec<f64> = thresholds.to_vec();
    sweep.sort_by(|a, b| b.total_cmp(a));
    sweep.dedup();

    let mut points = Vec::with_capacity(sweep.len());
    for &t in &sweep {
        let per_frame: Vec<PixelMatchResult> = scored
            .par_iter()
            .zip(&gt_maps)
            .map(|(segs, gt_map)| {
                let kept: Vec<LineSegment2D> =
                    segs.iter().filter(|s| s.score.unwrap_or(0.0) >= t).copied().collect();
                match_heatmaps(&rasterize(&kept, size), gt_map, d_max)
            })
            .collect::<Result<_>>()?;
        let prf = heatmap_prf(&per_frame);
        let has_gt = per_frame.iter().any(|r| r.tp + r.fn_ > 0);
        points.push(PRPoint {
            threshold: t,
            precision: prf.precision,
            recall: if has_gt { prf.recall } else { 0.0 },
        });
    }
    points.sort_by(|a, b| a.recall.total_cmp(&b.recall).then(b.threshold.total_cmp(&a.threshold)));
    let pr: Vec<(f64, f64)> = points.iter().map(|p| (p.recall, p.precision)).collect();
    Ok(HeatmapCurve {
        average_precision: interpolated_area(&pr),
        points,
    })
}

/// Average heatmap precision in `[0, 1]`.
pub fn heatmap_ap(
    scored: &[Vec<LineSegment2D>],
    gts: &[Vec<LineSegment2D>],
    thresholds: &[f64],
    d_max: f64,
    size: (u32, u32),
) -> Result<f64> {
    Ok(heatmap_curve(scored, gts, thresholds, d_max, size)?.average_precision)
}
