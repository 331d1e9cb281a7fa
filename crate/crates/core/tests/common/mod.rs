//! Synthetic data generators and brute-force reference implementations
//! shared by the integration tests. Nothing here calls into the code paths
//! it is used to check.
#![allow(dead_code)]

pub mod oracle;
pub mod scene;

use lineval::pose::LineCorrespondence;
use lineval::{CameraModel, HomogeneousLine2D, PoseSE3};
use nalgebra::{Point2, Point3, Vector3, Vector6};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn vga_camera() -> CameraModel {
    CameraModel::new(525.0, 525.0, 319.5, 239.5, 5000.0, 640, 480).unwrap()
}

/// Rigid motion with the given rotation angle (degrees) about a random
/// axis and translation of the given length in a random direction.
pub fn random_motion(rng: &mut StdRng, max_deg: f64, max_trans: f64) -> PoseSE3 {
    let axis = random_unit(rng);
    let angle = rng.random_range(0.0..=max_deg).to_radians();
    let dir = random_unit(rng);
    let len = rng.random_range(0.0..=max_trans);
    let w = axis * angle;
    let t = dir * len;
    let rot = nalgebra::Rotation3::from_scaled_axis(w);
    PoseSE3::from_rotation(rot, t)
}

pub fn random_unit(rng: &mut StdRng) -> Vector3<f64> {
    let n = Normal::new(0.0, 1.0).unwrap();
    Vector3::new(n.sample(rng), n.sample(rng), n.sample(rng)).normalize()
}

fn project(cam: &CameraModel, x: &Point3<f64>) -> Option<Point2<f64>> {
    if x.z <= 0.1 {
        return None;
    }
    let p = Point2::new(cam.fx * x.x / x.z + cam.cx, cam.fy * x.y / x.z + cam.cy);
    let inside = p.x >= 0.0 && p.y >= 0.0 && p.x <= cam.width as f64 - 1.0 && p.y <= cam.height as f64 - 1.0;
    inside.then_some(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutlierModel {
    /// Observation replaced by a random image line.
    RandomLine,
    /// Observation swapped with another scene line's observation
    /// (association mix-up).
    Mismatch,
}

pub struct PoseScene {
    pub truth: PoseSE3,
    pub correspondences: Vec<LineCorrespondence>,
    pub outliers: usize,
}

/// Random 3D segments visible in both views of a camera moving by `truth`
/// (source-to-destination). Destination endpoints receive Gaussian pixel
/// noise with standard deviation `noise_px`; a fraction `outlier_ratio` of
/// the observations is replaced by unrelated random image lines.
pub fn pose_scene(
    rng: &mut StdRng,
    cam: &CameraModel,
    truth: PoseSE3,
    n_lines: usize,
    noise_px: f64,
    outlier_ratio: f64,
) -> PoseScene {
    pose_scene_with(rng, cam, truth, n_lines, noise_px, outlier_ratio, OutlierModel::RandomLine)
}

pub fn pose_scene_with(
    rng: &mut StdRng,
    cam: &CameraModel,
    truth: PoseSE3,
    n_lines: usize,
    noise_px: f64,
    outlier_ratio: f64,
    model: OutlierModel,
) -> PoseScene {
    let noise = Normal::new(0.0, noise_px.max(1e-300)).unwrap();
    let n_out = (n_lines as f64 * outlier_ratio).round() as usize;
    let mut correspondences = Vec::with_capacity(n_lines);
    while correspondences.len() < n_lines {
        let lift = |rng: &mut StdRng| {
            let u = rng.random_range(40.0..600.0);
            let v = rng.random_range(40.0..440.0);
            let z = rng.random_range(1.5..5.0);
            Point3::new((u - cam.cx) * z / cam.fx, (v - cam.cy) * z / cam.fy, z)
        };
        let p = lift(rng);
        let q = lift(rng);
        let (Some(a), Some(b)) = (project(cam, &truth.transform_point(&p)), project(cam, &truth.transform_point(&q))) else {
            continue;
        };
        if (a - b).norm() < 30.0 {
            continue;
        }
        let outlier = model == OutlierModel::RandomLine && correspondences.len() < n_out;
        let (a, b) = if outlier {
            (
                Point2::new(rng.random_range(0.0..640.0), rng.random_range(0.0..480.0)),
                Point2::new(rng.random_range(0.0..640.0), rng.random_range(0.0..480.0)),
            )
        } else if noise_px > 0.0 {
            (
                a + nalgebra::Vector2::new(noise.sample(rng), noise.sample(rng)),
                b + nalgebra::Vector2::new(noise.sample(rng), noise.sample(rng)),
            )
        } else {
            (a, b)
        };
        let Ok(line) = HomogeneousLine2D::through(&a, &b) else { continue };
        correspondences.push(LineCorrespondence::new(p, q, line).unwrap());
    }
    if model == OutlierModel::Mismatch && n_out >= 2 {
        // Rotate the observed lines of the first n_out correspondences by one.
        let lines: Vec<HomogeneousLine2D> = correspondences[..n_out].iter().map(|c| c.line).collect();
        for (k, c) in correspondences[..n_out].iter_mut().enumerate() {
            c.line = lines[(k + 1) % n_out];
        }
    }
    PoseScene {
        truth,
        correspondences,
        outliers: n_out,
    }
}

pub fn twist(rng: &mut StdRng, scale: f64) -> Vector6<f64> {
    Vector6::from_fn(|_, _| rng.random_range(-scale..scale))
}
