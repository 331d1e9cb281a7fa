use nalgebra::{Point2, Point3};
use serde::{Deserialize, Serialize};

use super::{LineSegment2D, PoseSE3};
use crate::error::{Error, Result};

/// Pinhole intrinsics together with the raw-depth decoding scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// Raw depth units per meter.
    pub depth_scale: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraModel {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, depth_scale: f64, width: u32, height: u32) -> Result<Self> {
        let cam = Self {
            fx,
            fy,
            cx,
            cy,
            depth_scale,
            width,
            height,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !(positive(self.fx) && positive(self.fy) && positive(self.depth_scale)) {
            return Err(Error::InvalidValue(
                "camera fx, fy and depth_scale must be positive".into(),
            ));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidValue("camera image size must be positive".into()));
        }
        if !(self.cx > 0.0 && self.cx < self.width as f64 && self.cy > 0.0 && self.cy < self.height as f64) {
            return Err(Error::InvalidValue(format!(
                "principal point ({}, {}) outside the {}x{} image",
                self.cx, self.cy, self.width, self.height
            )));
        }
        Ok(())
    }

    /// Pinhole projection of a point already expressed in the camera frame.
    pub fn project(&self, p: &Point3<f64>) -> Result<Point2<f64>> {
        if !(p.z > 0.0) {
            return Err(Error::BehindCamera { z: p.z });
        }
        Ok(Point2::new(
            self.fx * p.x / p.z + self.cx,
            self.fy * p.y / p.z + self.cy,
        ))
    }
}

/// Raw 16-bit depth raster; zero marks a missing measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthImage {
    width: u32,
    height: u32,
    values: Vec<u16>,
}

impl DepthImage {
    pub fn new(width: u32, height: u32, values: Vec<u16>) -> Result<Self> {
        if values.len() != width as usize * height as usize {
            return Err(Error::InvalidValue(format!(
                "depth buffer holds {} values, expected {}x{}",
                values.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn filled(width: u32, height: u32, raw: u16) -> Self {
        Self {
            width,
            height,
            values: vec![raw; width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn values(&self) -> &[u16] {
        &self.values
    }

    pub fn get(&self, x: u32, y: u32) -> u16 {
        self.values[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, raw: u16) {
        self.values[y as usize * self.width as usize + x as usize] = raw;
    }
}

/// Projects `pose * point` through the pinhole model.
pub fn project_point(camera: &CameraModel, pose: &PoseSE3, point: &Point3<f64>) -> Result<Point2<f64>> {
    camera.project(&pose.transform_point(point))
}

/// Lifts a pixel to 3D using the depth stored at its nearest integer pixel.
/// Returns `Ok(None)` when that depth is zero.
pub fn backproject(camera: &CameraModel, pixel: &Point2<f64>, depth: &DepthImage) -> Result<Option<Point3<f64>>> {
    if depth.width != camera.width || depth.height != camera.height {
        return Err(Error::InvalidValue(format!(
            "depth image is {}x{} but the camera expects {}x{}",
            depth.width, depth.height, camera.width, camera.height
        )));
    }
    let (u, v) = (pixel.x, pixel.y);
    let (col, row) = (u.round(), v.round());
    if !(col >= 0.0 && row >= 0.0 && col < depth.width as f64 && row < depth.height as f64) {
        return Err(Error::OutOfBounds {
            u,
            v,
            width: depth.width,
            height: depth.height,
        });
    }
    let raw = depth.get(col as u32, row as u32);
    if raw == 0 {
        return Ok(None);
    }
    let z = raw as f64 / camera.depth_scale;
    Ok(Some(Point3::new(
        (u - camera.cx) * z / camera.fx,
        (v - camera.cy) * z / camera.fy,
        z,
    )))
}

/// Liang-Barsky clipping of the segment `a-b` against an axis-aligned box.
pub fn clip_segment(
    a: Point2<f64>,
    b: Point2<f64>,
    min: Point2<f64>,
    max: Point2<f64>,
) -> Option<(Point2<f64>, Point2<f64>)> {
    let d = b - a;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    let checks = [
        (-d.x, a.x - min.x),
        (d.x, max.x - a.x),
        (-d.y, a.y - min.y),
        (d.y, max.y - a.y),
    ];
    for (p, q) in checks {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
            if t0 > t1 {
                return None;
            }
        }
    }
    Some((a + d * t0, a + d * t1))
}

/// Maps a segment observed in the source frame into the destination frame
/// using the source depth and both world-from-camera poses, then clips it to
/// the image. `None` when an endpoint has no depth, falls behind the
/// destination camera, or nothing of the segment remains on screen.
pub fn reproject_segment(
    seg: &LineSegment2D,
    depth_src: &DepthImage,
    pose_src: &PoseSE3,
    pose_dst: &PoseSE3,
    camera: &CameraModel,
) -> Option<LineSegment2D> {
    let relative = pose_dst.inverse().compose(pose_src);
    let lift = |p: &Point2<f64>| -> Option<Point2<f64>> {
        let point = backproject(camera, p, depth_src).ok().flatten()?;
        project_point(camera, &relative, &point).ok()
    };
    let a = lift(&seg.p1)?;
    let b = lift(&seg.p2)?;
    let max = Point2::new(camera.width as f64 - 1.0, camera.height as f64 - 1.0);
    let (a, b) = clip_segment(a, b, Point2::origin(), max)?;
    if (b - a).norm() < 1e-9 {
        return None;
    }
    Some(LineSegment2D { p1: a, p2: b, ..*seg })
}
