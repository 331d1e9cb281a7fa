//! Planar and projective primitives shared by every metric.
//!
//! Coordinates are image pixels with the origin at the top-left corner, `x`
//! to the right and `y` down. 3D points live in camera frames (meters, `z`
//! along the optical axis).

mod camera;
mod se3;

use nalgebra::{Point2, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use camera::{backproject, clip_segment, project_point, reproject_segment, CameraModel, DepthImage};
pub use se3::PoseSE3;

/// A detected or annotated line segment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineSegment2D {
    pub p1: Point2<f64>,
    pub p2: Point2<f64>,
    pub score: Option<f64>,
    pub track_id: Option<i64>,
}

impl LineSegment2D {
    pub fn new(p1: Point2<f64>, p2: Point2<f64>) -> Result<Self> {
        if !(p1.x.is_finite() && p1.y.is_finite() && p2.x.is_finite() && p2.y.is_finite()) {
            return Err(Error::InvalidValue("segment endpoint is not finite".into()));
        }
        if p1 == p2 {
            return Err(Error::DegenerateSegment { x: p1.x, y: p1.y });
        }
        Ok(Self {
            p1,
            p2,
            score: None,
            track_id: None,
        })
    }

    pub fn from_coords(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self> {
        Self::new(Point2::new(x1, y1), Point2::new(x2, y2))
    }

    pub fn with_score(mut self, score: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::InvalidValue(format!("score {score} is outside [0, 1]")));
        }
        self.score = Some(score);
        Ok(self)
    }

    pub fn with_track_id(mut self, track_id: i64) -> Self {
        self.track_id = Some(track_id);
        self
    }

    pub fn direction(&self) -> Vector2<f64> {
        self.p2 - self.p1
    }

    pub fn length(&self) -> f64 {
        self.direction().norm()
    }

    pub fn reversed(&self) -> Self {
        Self {
            p1: self.p2,
            p2: self.p1,
            ..*self
        }
    }
}

/// Minimum over both endpoint pairings of the summed endpoint distances.
pub fn structural_distance(a: &LineSegment2D, b: &LineSegment2D) -> f64 {
    let direct = (b.p1 - a.p1).norm() + (b.p2 - a.p2).norm();
    let swapped = (b.p1 - a.p2).norm() + (b.p2 - a.p1).norm();
    direct.min(swapped)
}

/// Foot of the perpendicular from `p` onto the infinite line through `line`.
pub fn orthogonal_projection(p: &Point2<f64>, line: &LineSegment2D) -> Point2<f64> {
    let d = line.direction();
    let t = (p - line.p1).dot(&d) / d.norm_squared();
    line.p1 + d * t
}

fn one_sided_orthogonal(onto: &LineSegment2D, other: &LineSegment2D) -> f64 {
    // Anchor the line at its lexicographically smaller endpoint so that
    // reversing `onto` reproduces the same arithmetic.
    let onto = if (onto.p2.x, onto.p2.y) < (onto.p1.x, onto.p1.y) {
        onto.reversed()
    } else {
        *onto
    };
    (other.p1 - orthogonal_projection(&other.p1, &onto)).norm()
        + (other.p2 - orthogonal_projection(&other.p2, &onto)).norm()
}

/// Symmetrized sum of perpendicular residuals of each segment's endpoints
/// onto the other segment's supporting line.
pub fn orthogonal_distance(a: &LineSegment2D, b: &LineSegment2D) -> f64 {
    (one_sided_orthogonal(a, b) + one_sided_orthogonal(b, a)) / 2.0
}

/// Which segment distance a metric uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceKind {
    Structural,
    Orthogonal,
}

impl DistanceKind {
    pub fn distance(self, a: &LineSegment2D, b: &LineSegment2D) -> f64 {
        match self {
            DistanceKind::Structural => structural_distance(a, b),
            DistanceKind::Orthogonal => orthogonal_distance(a, b),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DistanceKind::Structural => "structural",
            DistanceKind::Orthogonal => "orthogonal",
        }
    }
}

impl std::str::FromStr for DistanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "structural" => Ok(DistanceKind::Structural),
            "orthogonal" => Ok(DistanceKind::Orthogonal),
            other => Err(Error::InvalidValue(format!("unknown distance kind '{other}'"))),
        }
    }
}

/// Unit-norm homogeneous coefficients `(a, b, c)` of the line `ax + by + c = 0`,
/// with the first nonzero coefficient positive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousLine2D {
    coeffs: Vector3<f64>,
}

impl HomogeneousLine2D {
    /// Line through two distinct points: normalized cross product of their
    /// homogeneous coordinates.
    pub fn through(p: &Point2<f64>, q: &Point2<f64>) -> Result<Self> {
        if p == q {
            return Err(Error::DegenerateSegment { x: p.x, y: p.y });
        }
        let cross = p.to_homogeneous().cross(&q.to_homogeneous());
        Self::from_coeffs(cross)
    }

    pub fn from_segment(seg: &LineSegment2D) -> Result<Self> {
        Self::through(&seg.p1, &seg.p2)
    }

    /// Normalizes arbitrary nonzero coefficients and fixes their sign.
    pub fn from_coeffs(coeffs: Vector3<f64>) -> Result<Self> {
        let norm = coeffs.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidValue("line coefficients must be finite and nonzero".into()));
        }
        let mut unit = coeffs / norm;
        if let Some(first) = unit.iter().copied().find(|c| c.abs() > 1e-12) {
            if first < 0.0 {
                unit = -unit;
            }
        }
        Ok(Self { coeffs: unit })
    }

    pub fn coeffs(&self) -> &Vector3<f64> {
        &self.coeffs
    }

    /// `l^T (x, y, 1)`.
    pub fn evaluate(&self, p: &Point2<f64>) -> f64 {
        self.coeffs.dot(&p.to_homogeneous())
    }
}
