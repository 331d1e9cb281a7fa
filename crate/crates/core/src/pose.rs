//! Relative pose from line correspondences.
//!
//! Each correspondence pairs two 3D endpoints `P`, `Q` (expressed in the
//! source camera frame) with the unit homogeneous line `l` observed in the
//! destination image. The residual of a pose `T` is `(l^T pi(TP), l^T pi(TQ))`
//! where `pi` is the pinhole projection in homogeneous pixel coordinates.
//! The pose is refined with Levenberg-Marquardt under a Huber kernel on the
//! residual norm, using left perturbations `T <- exp(delta) T` with
//! `delta = (rotation vector, translation)`.

use nalgebra::{Matrix2x6, Matrix3x6, Matrix6, Point3, RowVector3, Vector2, Vector6};
use serde::{Deserialize, Serialize};

use crate::association::MatchSet;
use crate::error::{Error, Result};
use crate::geometry::{backproject, CameraModel, DepthImage, HomogeneousLine2D, LineSegment2D, PoseSE3};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineCorrespondence {
    pub p: Point3<f64>,
    pub q: Point3<f64>,
    pub line: HomogeneousLine2D,
}

impl LineCorrespondence {
    pub fn new(p: Point3<f64>, q: Point3<f64>, line: HomogeneousLine2D) -> Result<Self> {
        if p == q {
            return Err(Error::InvalidValue("3D endpoints of a correspondence coincide".into()));
        }
        Ok(Self { p, q, line })
    }
}

/// How the observed line's coefficients are scaled inside the residual.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineNormalization {
    /// `(a, b)` has unit norm, so residuals are signed point-to-line pixel
    /// distances.
    #[default]
    Normal,
    /// The full 3-vector `(a, b, c)` has unit norm.
    Full,
}

impl LineNormalization {
    /// Factor turning unit-3-vector residuals into this normalization.
    pub fn scale(self, line: &HomogeneousLine2D) -> f64 {
        match self {
            LineNormalization::Full => 1.0,
            LineNormalization::Normal => 1.0 / line.coeffs().xy().norm(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LineNormalization::Normal => "normal",
            LineNormalization::Full => "full",
        }
    }
}

impl std::str::FromStr for LineNormalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(LineNormalization::Normal),
            "full" => Ok(LineNormalization::Full),
            other => Err(Error::InvalidValue(format!("unknown line normalization '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Huber threshold on the residual norm, in residual units (pixels
    /// with [`LineNormalization::Normal`]).
    pub huber_delta: f64,
    pub initial_pose: PoseSE3,
    /// Stop once the update step norm falls below this.
    pub convergence_tol: f64,
    /// Initial Levenberg-Marquardt damping.
    pub damping: f64,
    pub normalization: LineNormalization,
    /// Outlier rejection schedule. After the first robust solve, each entry
    /// starts a new round that keeps only correspondences whose residual
    /// norm at the current estimate is below the entry and re-solves.
    /// Empty means a single robust solve over everything.
    pub outlier_thresholds: Vec<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            huber_delta: 1.0,
            initial_pose: PoseSE3::identity(),
            convergence_tol: 1e-10,
            damping: 1e-3,
            normalization: LineNormalization::default(),
            outlier_thresholds: vec![20.0, 10.0, 5.0, 2.5, 1.0],
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidValue("max_iterations must be at least 1".into()));
        }
        for (name, v) in [
            ("huber_delta", self.huber_delta),
            ("convergence_tol", self.convergence_tol),
            ("damping", self.damping),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidValue(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(t) = self.outlier_thresholds.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::InvalidValue(format!("outlier threshold {t} must be positive")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 0 for the initial solve, then one per rejection round.
    pub round: usize,
    /// Robust cost over the round's active set after an accepted step.
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseEstimate {
    pub pose: PoseSE3,
    pub converged: bool,
    /// Robust cost over the correspondences kept by the last round.
    pub final_cost: f64,
    pub iterations: usize,
    /// Share of all correspondences that were kept and have a residual
    /// norm below `huber_delta`.
    pub inlier_fraction: f64,
    pub rejected: usize,
    pub history: Vec<IterationRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RPEResult {
    /// Meters.
    pub trans_error: f64,
    /// Degrees.
    pub rot_error: f64,
}

/// `(l^T pi(TP), l^T pi(TQ))`, scaled according to `normalization`.
pub fn residual(
    pose: &PoseSE3,
    c: &LineCorrespondence,
    camera: &CameraModel,
    normalization: LineNormalization,
) -> Result<Vector2<f64>> {
    let a = camera.project(&pose.transform_point(&c.p))?;
    let b = camera.project(&pose.transform_point(&c.q))?;
    let s = normalization.scale(&c.line);
    Ok(Vector2::new(c.line.evaluate(&a), c.line.evaluate(&b)) * s)
}

/// Derivative of one endpoint's residual with respect to the left
/// perturbation, given the endpoint already mapped into the camera frame.
fn endpoint_jacobian(x: &Point3<f64>, line: &HomogeneousLine2D, camera: &CameraModel) -> Result<RowVector3<f64>> {
    if !(x.z > 0.0) {
        return Err(Error::BehindCamera { z: x.z });
    }
    let l = line.coeffs();
    let inv_z = 1.0 / x.z;
    let du = l[0] * camera.fx;
    let dv = l[1] * camera.fy;
    Ok(RowVector3::new(
        du * inv_z,
        dv * inv_z,
        -(du * x.x + dv * x.y) * inv_z * inv_z,
    ))
}

fn point_jacobian(x: &Point3<f64>) -> Matrix3x6<f64> {
    let mut j = Matrix3x6::zeros();
    j.fixed_view_mut::<3, 3>(0, 0).copy_from(&(-x.coords.cross_matrix()));
    j.fixed_view_mut::<3, 3>(0, 3).copy_from(&nalgebra::Matrix3::identity());
    j
}

/// Analytic 2x6 Jacobian of [`residual`] with respect to `delta` in
/// `exp(delta) * pose`.
pub fn jacobian(
    pose: &PoseSE3,
    c: &LineCorrespondence,
    camera: &CameraModel,
    normalization: LineNormalization,
) -> Result<Matrix2x6<f64>> {
    let mut j = Matrix2x6::zeros();
    for (row, endpoint) in [c.p, c.q].iter().enumerate() {
        let x = pose.transform_point(endpoint);
        let de_dx = endpoint_jacobian(&x, &c.line, camera)?;
        j.set_row(row, &(de_dx * point_jacobian(&x)));
    }
    Ok(j * normalization.scale(&c.line))
}

fn huber(norm: f64, delta: f64) -> (f64, f64) {
    if norm <= delta {
        (norm * norm, 1.0)
    } else {
        (2.0 * delta * norm - delta * delta, delta / norm)
    }
}

struct Linearization {
    cost: f64,
    valid: usize,
    inliers: usize,
    hessian: Matrix6<f64>,
    gradient: Vector6<f64>,
}

fn robust_cost(pose: &PoseSE3, cs: &[LineCorrespondence], camera: &CameraModel, cfg: &SolverConfig) -> (f64, usize) {
    let mut cost = 0.0;
    let mut valid = 0;
    for c in cs {
        if let Ok(r) = residual(pose, c, camera, cfg.normalization) {
            cost += huber(r.norm(), cfg.huber_delta).0;
            valid += 1;
        }
    }
    (cost, valid)
}

fn linearize(pose: &PoseSE3, cs: &[LineCorrespondence], camera: &CameraModel, cfg: &SolverConfig) -> Linearization {
    let delta = cfg.huber_delta;
    let mut lin = Linearization {
        cost: 0.0,
        valid: 0,
        inliers: 0,
        hessian: Matrix6::zeros(),
        gradient: Vector6::zeros(),
    };
    for c in cs {
        let (Ok(r), Ok(j)) = (
            residual(pose, c, camera, cfg.normalization),
            jacobian(pose, c, camera, cfg.normalization),
        ) else {
            continue;
        };
        let norm = r.norm();
        let (rho, weight) = huber(norm, delta);
        lin.cost += rho;
        lin.valid += 1;
        if norm < delta {
            lin.inliers += 1;
        }
        let jt = j.transpose();
        lin.hessian += jt * j * weight;
        lin.gradient += jt * r * weight;
    }
    lin
}

struct Solve {
    pose: PoseSE3,
    converged: bool,
    cost: f64,
    inliers: usize,
    iterations: usize,
}

/// Levenberg-Marquardt on the Huber cost of `cs`. Correspondences whose
/// endpoints fall behind the camera at the current estimate are left out of
/// that iteration; a trial step is accepted only when it lowers the cost
/// without losing correspondences.
fn minimize(
    cs: &[LineCorrespondence],
    camera: &CameraModel,
    cfg: &SolverConfig,
    start: PoseSE3,
    round: usize,
    history: &mut Vec<IterationRecord>,
) -> Result<Solve> {
    let mut pose = start;
    let mut lin = linearize(&pose, cs, camera, cfg);
    if lin.valid == 0 {
        return Err(Error::AllCorrespondencesInvalid);
    }
    if lin.valid < 3 {
        return Err(Error::UnderConstrained(lin.valid));
    }
    let mut lambda = cfg.damping;
    let mut converged = lin.cost == 0.0;
    let mut iterations = 0;

    while !converged && iterations < cfg.max_iterations {
        iterations += 1;
        if !lin.cost.is_finite() {
            return Err(Error::Diverged);
        }
        let mut damped = lin.hessian;
        for i in 0..6 {
            damped[(i, i)] += lambda * lin.hessian[(i, i)].max(1e-12);
        }
        let Some(step) = damped.cholesky().map(|ch| ch.solve(&(-lin.gradient))) else {
            lambda *= 10.0;
            continue;
        };
        if !step.iter().all(|v| v.is_finite()) {
            return Err(Error::Diverged);
        }
        if step.norm() < cfg.convergence_tol {
            converged = true;
            break;
        }
        let candidate = PoseSE3::exp(&step).compose(&pose);
        let (cost, valid) = robust_cost(&candidate, cs, camera, cfg);
        if !cost.is_finite() {
            return Err(Error::Diverged);
        }
        if valid >= lin.valid && cost < lin.cost {
            pose = candidate;
            lin = linearize(&pose, cs, camera, cfg);
            history.push(IterationRecord { round, cost: lin.cost });
            lambda = (lambda / 10.0).max(1e-12);
            if lin.cost == 0.0 {
                converged = true;
            }
        } else {
            lambda *= 10.0;
        }
    }
    Ok(Solve {
        pose,
        converged,
        cost: lin.cost,
        inliers: lin.inliers,
        iterations,
    })
}

/// Estimates the pose mapping source-frame points into the destination
/// camera by minimizing the Huber-robustified line reprojection cost over
/// SE(3), followed by the outlier rejection rounds in
/// [`SolverConfig::outlier_thresholds`]. A round that would leave fewer than
/// three correspondences, or whose solve fails, ends the schedule early.
pub fn estimate_relative_pose(
    correspondences: &[LineCorrespondence],
    camera: &CameraModel,
    cfg: &SolverConfig,
) -> Result<PoseEstimate> {
    cfg.validate()?;
    let usable = correspondences.iter().filter(|c| c.p != c.q).count();
    if usable < 3 {
        return Err(Error::UnderConstrained(usable));
    }

    let mut history = Vec::new();
    let mut solve = minimize(correspondences, camera, cfg, cfg.initial_pose, 0, &mut history)?;
    let mut iterations = solve.iterations;
    let mut kept = correspondences.len();
    for (k, &threshold) in cfg.outlier_thresholds.iter().enumerate() {
        let active: Vec<LineCorrespondence> = correspondences
            .iter()
            .filter(|c| {
                residual(&solve.pose, c, camera, cfg.normalization).is_ok_and(|r| r.norm() < threshold)
            })
            .copied()
            .collect();
        if active.len() < 3 {
            break;
        }
        let Ok(next) = minimize(&active, camera, cfg, solve.pose, k + 1, &mut history) else {
            break;
        };
        iterations += next.iterations;
        kept = active.len();
        solve = next;
    }

    Ok(PoseEstimate {
        pose: solve.pose,
        converged: solve.converged,
        final_cost: solve.cost,
        iterations,
        inlier_fraction: solve.inliers as f64 / correspondences.len() as f64,
        rejected: correspondences.len() - kept,
        history,
    })
}

/// Error of `estimate` relative to `ground_truth`: `E = gt^-1 * est`.
pub fn relative_pose_error(estimate: &PoseSE3, ground_truth: &PoseSE3) -> RPEResult {
    let e = ground_truth.inverse().compose(estimate);
    RPEResult {
        trans_error: e.translation().norm(),
        rot_error: e.rotation_angle().to_degrees(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseErrorSummary {
    /// `None` when there were no successes or more than half the pairs
    /// failed.
    pub median_trans: Option<f64>,
    pub median_rot: Option<f64>,
    pub failure_fraction: f64,
    pub successes: usize,
    pub failures: usize,
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

/// Medians over successful estimates; failures are `None` entries.
pub fn aggregate_pose_errors(results: &[Option<RPEResult>]) -> PoseErrorSummary {
    let mut trans: Vec<f64> = results.iter().flatten().map(|r| r.trans_error).collect();
    let mut rot: Vec<f64> = results.iter().flatten().map(|r| r.rot_error).collect();
    let failures = results.len() - trans.len();
    let failure_fraction = if results.is_empty() {
        0.0
    } else {
        failures as f64 / results.len() as f64
    };
    let report = failure_fraction <= 0.5;
    PoseErrorSummary {
        median_trans: median(&mut trans).filter(|_| report),
        median_rot: median(&mut rot).filter(|_| report),
        failure_fraction,
        successes: trans.len(),
        failures,
    }
}

/// Lifts matched frame-i segments to 3D with frame-i depth and pairs them
/// with the line through the matched frame-j segment. Returns the
/// correspondences and the number of matches dropped for missing depth.
pub fn build_correspondences(
    matches: &MatchSet,
    lines_i: &[LineSegment2D],
    lines_j: &[LineSegment2D],
    depth_i: &DepthImage,
    camera: &CameraModel,
) -> Result<(Vec<LineCorrespondence>, usize)> {
    matches.check_bounds(lines_i.len(), lines_j.len())?;
    let mut out = Vec::with_capacity(matches.len());
    let mut dropped = 0;
    for &(a, b) in matches.pairs() {
        let src = &lines_i[a];
        let lift = |p| backproject(camera, p, depth_i).ok().flatten();
        let (Some(p), Some(q)) = (lift(&src.p1), lift(&src.p2)) else {
            dropped += 1;
            continue;
        };
        match LineCorrespondence::new(p, q, HomogeneousLine2D::from_segment(&lines_j[b])?) {
            Ok(c) => out.push(c),
            Err(_) => dropped += 1,
        }
    }
    Ok((out, dropped))
}
