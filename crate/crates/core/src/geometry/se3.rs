use std::ops::Mul;

use nalgebra::{Matrix3, Point3, Rotation3, UnitQuaternion, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ORTHONORMAL_TOL: f64 = 1e-9;

/// Rigid transform `x -> R x + t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseSE3 {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Default for PoseSE3 {
    fn default() -> Self {
        Self::identity()
    }
}

impl PoseSE3 {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a pose from a rotation matrix, rejecting matrices that are not
    /// proper rotations to within 1e-9.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        if !rotation.iter().chain(translation.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidValue("pose contains non-finite entries".into()));
        }
        let gram_err = (rotation.transpose() * rotation - Matrix3::identity()).amax();
        let det_err = (rotation.determinant() - 1.0).abs();
        if gram_err > ORTHONORMAL_TOL || det_err > ORTHONORMAL_TOL {
            return Err(Error::InvalidValue(format!(
                "rotation is not orthonormal (|R^T R - I| = {gram_err:e}, |det R - 1| = {det_err:e})"
            )));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn from_rotation(rotation: Rotation3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation: *rotation.matrix(),
            translation,
        }
    }

    /// Pose from a translation and a quaternion given as `(qx, qy, qz, qw)`.
    /// The quaternion must be unit-norm within `tol`; it is renormalized.
    pub fn from_quaternion(translation: Vector3<f64>, xyzw: [f64; 4], tol: f64) -> Result<Self> {
        let [x, y, z, w] = xyzw;
        let norm = (x * x + y * y + z * z + w * w).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > tol {
            return Err(Error::InvalidValue(format!(
                "quaternion norm {norm} deviates from 1 by more than {tol}"
            )));
        }
        let q = UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(w, x, y, z));
        Ok(Self::from_rotation(q.to_rotation_matrix(), translation))
    }

    /// Exponential map of a twist `(phi, rho)`: rotation vector first, then
    /// the translational part.
    pub fn exp(twist: &Vector6<f64>) -> Self {
        let phi = Vector3::new(twist[0], twist[1], twist[2]);
        let rho = Vector3::new(twist[3], twist[4], twist[5]);
        let theta2 = phi.norm_squared();
        let theta = theta2.sqrt();
        let k = phi.cross_matrix();
        let (a, b) = if theta < 1e-5 {
            // Taylor expansions of (1 - cos t)/t^2 and (t - sin t)/t^3.
            (0.5 - theta2 / 24.0, 1.0 / 6.0 - theta2 / 120.0)
        } else {
            (
                (1.0 - theta.cos()) / theta2,
                (theta - theta.sin()) / (theta2 * theta),
            )
        };
        let v = Matrix3::identity() + k * a + k * k * b;
        Self {
            rotation: *Rotation3::from_scaled_axis(phi).matrix(),
            translation: v * rho,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn compose(&self, other: &PoseSE3) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    /// Rotation angle in radians, in `[0, pi]`.
    pub fn rotation_angle(&self) -> f64 {
        // atan2 of (sin, cos) instead of acos((tr R - 1) / 2): acos loses
        // all precision near zero.
        let r = &self.rotation;
        let sin = 0.5
            * Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]).norm();
        let cos = (r.trace() - 1.0) / 2.0;
        sin.atan2(cos)
    }

    /// Unit quaternion `(qx, qy, qz, qw)` of the rotation part.
    pub fn quaternion_xyzw(&self) -> [f64; 4] {
        let q = UnitQuaternion::from_matrix(&self.rotation);
        [q.i, q.j, q.k, q.w]
    }
}

impl Mul for PoseSE3 {
    type Output = PoseSE3;

    fn mul(self, rhs: PoseSE3) -> PoseSE3 {
        self.compose(&rhs)
    }
}

impl Mul<&PoseSE3> for &PoseSE3 {
    type Output = PoseSE3;

    fn mul(self, rhs: &PoseSE3) -> PoseSE3 {
        self.compose(rhs)
    }
}
