//! A synthetic RGB-D sequence: a camera moving in front of a wall at
//! `z = WALL_Z` (world frame) carrying line segments.

use std::collections::BTreeMap;

use lineval::association::MatchSet;
use lineval::io::{Detections, FrameAnnotation, SequenceAnnotation, Trajectory, TrajectoryRecord};
use lineval::{CameraModel, DepthImage, LineSegment2D, PoseSE3};
use nalgebra::{Point3, Rotation3, Vector3};
use rand::rngs::StdRng;
use rand::Rng;
use rand_distr::{Distribution, Normal};

pub const WALL_Z: f64 = 4.0;

pub fn small_camera() -> CameraModel {
    CameraModel::new(300.0, 300.0, 159.5, 119.5, 5000.0, 320, 240).unwrap()
}

pub struct SceneOptions {
    pub frames: usize,
    pub tracks: usize,
    /// Per-frame rotation step bound in degrees; 0 keeps every view
    /// fronto-parallel so depth is exactly representable.
    pub max_step_deg: f64,
    pub max_step_m: f64,
    /// Chance that a track is missing from a frame's annotation.
    pub dropout: f64,
    pub detection_noise_px: f64,
    pub scored: bool,
}

impl Default for SceneOptions {
    fn default() -> Self {
        Self {
            frames: 8,
            tracks: 25,
            max_step_deg: 1.0,
            max_step_m: 0.04,
            dropout: 0.1,
            detection_noise_px: 0.5,
            scored: true,
        }
    }
}

pub struct Sequence {
    pub camera: CameraModel,
    /// World-from-camera pose per frame.
    pub poses: Vec<PoseSE3>,
    pub annotation: SequenceAnnotation,
    pub detections: Detections,
    pub depth: BTreeMap<u64, DepthImage>,
    pub trajectory: Trajectory,
    /// Consecutive-frame matches indexing annotated lines, with some
    /// dropped and some wrong.
    pub matches: BTreeMap<(u64, u64), MatchSet>,
    /// Consecutive-frame ground-truth matches.
    pub gt_matches: BTreeMap<(u64, u64), MatchSet>,
}

/// Depth of the wall seen from `pose`, quantized to raw units.
pub fn render_wall(camera: &CameraModel, pose: &PoseSE3) -> DepthImage {
    let mut depth = DepthImage::filled(camera.width, camera.height, 0);
    let r = pose.rotation();
    let t = pose.translation();
    for v in 0..camera.height {
        for u in 0..camera.width {
            let ray = Vector3::new((u as f64 - camera.cx) / camera.fx, (v as f64 - camera.cy) / camera.fy, 1.0);
            let dz = (r * ray).z;
            if dz <= 0.0 {
                continue;
            }
            let z = (WALL_Z - t.z) / dz;
            let raw = (z * camera.depth_scale).round();
            if z > 0.0 && raw < 65535.0 {
                depth.set(u, v, raw as u16);
            }
        }
    }
    depth
}

fn project(camera: &CameraModel, pose: &PoseSE3, p: &Point3<f64>) -> (f64, f64) {
    let c = pose.inverse().transform_point(p);
    (camera.fx * c.x / c.z + camera.cx, camera.fy * c.y / c.z + camera.cy)
}

pub fn sequence(rng: &mut StdRng, opts: &SceneOptions) -> Sequence {
    let camera = small_camera();
    let mut poses = vec![PoseSE3::identity()];
    for _ in 1..opts.frames {
        let axis = super::random_unit(rng);
        let angle = rng.random_range(0.0..=opts.max_step_deg).to_radians();
        let mut shift = super::random_unit(rng) * rng.random_range(0.0..=opts.max_step_m);
        if opts.max_step_deg == 0.0 {
            // Whole raw depth units, so the wall depth is stored exactly.
            shift.z = (shift.z * camera.depth_scale).round() / camera.depth_scale;
        }
        let step = PoseSE3::from_rotation(Rotation3::from_scaled_axis(axis * angle), shift);
        poses.push(*poses.last().unwrap() * step);
    }

    let tracks: Vec<(Point3<f64>, Point3<f64>)> = (0..opts.tracks)
        .map(|_| loop {
            let p = Point3::new(rng.random_range(-1.2..1.2), rng.random_range(-0.6..0.6), WALL_Z);
            let q = Point3::new(rng.random_range(-1.2..1.2), rng.random_range(-0.6..0.6), WALL_Z);
            if (p - q).norm() > 0.4 {
                break (p, q);
            }
        })
        .collect();

    let noise = Normal::new(0.0, opts.detection_noise_px.max(1e-300)).unwrap();
    let mut frames = Vec::new();
    let mut detections = Detections {
        scored: Some(opts.scored),
        ..Default::default()
    };
    for (k, pose) in poses.iter().enumerate() {
        let mut lines = Vec::new();
        let mut dets = Vec::new();
        for (id, (p, q)) in tracks.iter().enumerate() {
            if rng.random_bool(opts.dropout) {
                continue;
            }
            let (x1, y1) = project(&camera, pose, p);
            let (x2, y2) = project(&camera, pose, q);
            lines.push(LineSegment2D::from_coords(x1, y1, x2, y2).unwrap().with_track_id(id as i64));
            if rng.random_bool(0.85) {
                let mut jitter = || if opts.detection_noise_px > 0.0 { noise.sample(rng) } else { 0.0 };
                let d = LineSegment2D::from_coords(x1 + jitter(), y1 + jitter(), x2 + jitter(), y2 + jitter()).unwrap();
                dets.push(d);
            }
        }
        for _ in 0..2 {
            let x = rng.random_range(0.0..300.0);
            let y = rng.random_range(0.0..220.0);
            dets.push(LineSegment2D::from_coords(x, y, x + rng.random_range(5.0..20.0), y + 15.0).unwrap());
        }
        if opts.scored {
            for d in &mut dets {
                *d = d.with_score(rng.random_range(0.0..=1.0)).unwrap();
            }
        }
        detections.frames.insert(k as u64, dets);
        frames.push(FrameAnnotation {
            frame_id: k as u64,
            lines,
        });
    }
    let annotation = SequenceAnnotation::new(frames).unwrap();

    let mut matches = BTreeMap::new();
    let mut gt_matches = BTreeMap::new();
    for k in 0..opts.frames.saturating_sub(1) {
        let (a, b) = (&annotation.frames()[k].lines, &annotation.frames()[k + 1].lines);
        let gt = lineval::association::gt_matches(a, b).unwrap();
        let mut pred = MatchSet::default();
        let mut used_b = std::collections::BTreeSet::new();
        for &(i, j) in gt.pairs() {
            if rng.random_bool(0.1) {
                continue;
            }
            let j = if rng.random_bool(0.1) { rng.random_range(0..b.len()) } else { j };
            if used_b.insert(j) {
                pred.insert(i, j).unwrap();
            }
        }
        matches.insert((k as u64, k as u64 + 1), pred);
        gt_matches.insert((k as u64, k as u64 + 1), gt);
    }

    let depth = poses
        .iter()
        .enumerate()
        .map(|(k, p)| (k as u64, render_wall(&camera, p)))
        .collect();
    let trajectory = Trajectory::new(
        poses
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let t = p.translation();
                TrajectoryRecord {
                    timestamp: 1.0 + 0.04 * k as f64,
                    translation: [t.x, t.y, t.z],
                    quaternion: p.quaternion_xyzw(),
                }
            })
            .collect(),
    )
    .unwrap();

    Sequence {
        camera,
        poses,
        annotation,
        detections,
        depth,
        trajectory,
        matches,
        gt_matches,
    }
}
