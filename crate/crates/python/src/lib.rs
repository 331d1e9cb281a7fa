//! Python bindings for the lineval evaluation library.

use std::collections::BTreeMap;
use std::path::PathBuf;

use ::lineval as core;
use core::eval::{AssociationSettings, DetectionSettings, HeatmapSettings};
use core::heatmap::Heatmap;
use core::io::Report;
use core::pose::{LineCorrespondence, LineNormalization, SolverConfig};
use core::vectorized::{ClassifiedDetections, Label, MetricConfig};
use core::{DistanceKind, HomogeneousLine2D};
use nalgebra::{Matrix3, Point3, Vector3};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: core::Error) -> PyErr {
    if e.is_input_error() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn distance_kind(name: &str) -> PyResult<DistanceKind> {
    match name {
        "structural" => Ok(DistanceKind::Structural),
        "orthogonal" => Ok(DistanceKind::Orthogonal),
        _ => Err(PyValueError::new_err(format!("unknown distance '{name}'"))),
    }
}

/// A 2D line segment with optional confidence score and track id.
#[pyclass(name = "LineSegment", frozen, from_py_object)]
#[derive(Clone)]
struct PyLineSegment {
    inner: core::LineSegment2D,
}

#[pymethods]
impl PyLineSegment {
    #[new]
    #[pyo3(signature = (x1, y1, x2, y2, score=None, track_id=None))]
    fn new(x1: f64, y1: f64, x2: f64, y2: f64, score: Option<f64>, track_id: Option<i64>) -> PyResult<Self> {
        let mut s = core::LineSegment2D::from_coords(x1, y1, x2, y2).map_err(to_py)?;
        if let Some(score) = score {
            s = s.with_score(score).map_err(to_py)?;
        }
        if let Some(id) = track_id {
            s = s.with_track_id(id);
        }
        Ok(Self { inner: s })
    }

    #[getter]
    fn coords(&self) -> (f64, f64, f64, f64) {
        let s = &self.inner;
        (s.p1.x, s.p1.y, s.p2.x, s.p2.y)
    }

    #[getter]
    fn score(&self) -> Option<f64> {
        self.inner.score
    }

    #[getter]
    fn track_id(&self) -> Option<i64> {
        self.inner.track_id
    }

    fn length(&self) -> f64 {
        self.inner.length()
    }

    fn reversed(&self) -> Self {
        Self {
            inner: self.inner.reversed(),
        }
    }

    fn __repr__(&self) -> String {
        let (x1, y1, x2, y2) = self.coords();
        format!("LineSegment({x1}, {y1}, {x2}, {y2}, score={:?}, track_id={:?})", self.inner.score, self.inner.track_id)
    }
}

fn segments(lines: &[PyLineSegment]) -> Vec<core::LineSegment2D> {
    lines.iter().map(|l| l.inner).collect()
}

/// Pinhole intrinsics with the depth unit scale.
#[pyclass(name = "CameraModel", frozen, from_py_object)]
#[derive(Clone)]
struct PyCameraModel {
    inner: core::CameraModel,
}

#[pymethods]
impl PyCameraModel {
    #[new]
    #[pyo3(signature = (fx, fy, cx, cy, width, height, depth_scale=5000.0))]
    fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32, depth_scale: f64) -> PyResult<Self> {
        let inner = core::CameraModel::new(fx, fy, cx, cy, depth_scale, width, height).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn intrinsics(&self) -> (f64, f64, f64, f64) {
        let c = &self.inner;
        (c.fx, c.fy, c.cx, c.cy)
    }

    #[getter]
    fn size(&self) -> (u32, u32) {
        (self.inner.width, self.inner.height)
    }

    #[getter]
    fn depth_scale(&self) -> f64 {
        self.inner.depth_scale
    }

    fn project(&self, point: [f64; 3]) -> PyResult<(f64, f64)> {
        let p = self.inner.project(&Point3::from(point)).map_err(to_py)?;
        Ok((p.x, p.y))
    }
}

/// Rigid transform in SE(3).
#[pyclass(name = "Pose", frozen, from_py_object)]
#[derive(Clone)]
struct PyPose {
    inner: core::PoseSE3,
}

#[pymethods]
impl PyPose {
    #[staticmethod]
    fn identity() -> Self {
        Self {
            inner: core::PoseSE3::identity(),
        }
    }

    /// From a 3x3 rotation (row-major nested lists) and a translation.
    #[staticmethod]
    fn from_rt(rotation: [[f64; 3]; 3], translation: [f64; 3]) -> PyResult<Self> {
        let r = Matrix3::from_fn(|i, j| rotation[i][j]);
        let inner = core::PoseSE3::new(r, Vector3::from(translation)).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// From a translation and a unit quaternion in `x y z w` order.
    #[staticmethod]
    #[pyo3(signature = (translation, quaternion, tolerance=1e-6))]
    fn from_quaternion(translation: [f64; 3], quaternion: [f64; 4], tolerance: f64) -> PyResult<Self> {
        let inner = core::PoseSE3::from_quaternion(Vector3::from(translation), quaternion, tolerance).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn rotation(&self) -> [[f64; 3]; 3] {
        let r = self.inner.rotation();
        [0, 1, 2].map(|i| [0, 1, 2].map(|j| r[(i, j)]))
    }

    #[getter]
    fn translation(&self) -> [f64; 3] {
        let t = self.inner.translation();
        [t.x, t.y, t.z]
    }

    fn quaternion(&self) -> [f64; 4] {
        self.inner.quaternion_xyzw()
    }

    fn inverse(&self) -> Self {
        Self {
            inner: self.inner.inverse(),
        }
    }

    fn __mul__(&self, other: &Self) -> Self {
        Self {
            inner: self.inner.compose(&other.inner),
        }
    }

    fn transform_point(&self, point: [f64; 3]) -> [f64; 3] {
        let p = self.inner.transform_point(&Point3::from(point));
        [p.x, p.y, p.z]
    }

    /// Rotation angle in radians.
    fn rotation_angle(&self) -> f64 {
        self.inner.rotation_angle()
    }

    fn __repr__(&self) -> String {
        format!("Pose(translation={:?}, quaternion={:?})", self.translation(), self.quaternion())
    }
}

#[pyfunction]
fn structural_distance(a: &PyLineSegment, b: &PyLineSegment) -> f64 {
    core::structural_distance(&a.inner, &b.inner)
}

#[pyfunction]
fn orthogonal_distance(a: &PyLineSegment, b: &PyLineSegment) -> f64 {
    core::orthogonal_distance(&a.inner, &b.inner)
}

fn metric_config(distance: &str, d_max: f64, resolution: (u32, u32)) -> PyResult<MetricConfig> {
    MetricConfig::new(distance_kind(distance)?, d_max, resolution).map_err(to_py)
}

fn classify_frame(
    preds: &[PyLineSegment],
    gts: &[PyLineSegment],
    cfg: &MetricConfig,
    image_size: (u32, u32),
) -> ClassifiedDetections {
    let res = cfg.eval_resolution;
    let p = core::vectorized::rescale_lines(&segments(preds), image_size, res);
    let g = core::vectorized::rescale_lines(&segments(gts), image_size, res);
    core::vectorized::classify(&p, &g, cfg)
}

/// True-positive flags of the predictions of one frame.
#[pyfunction]
#[pyo3(signature = (preds, gts, distance="structural", d_max=5.0, resolution=(128, 128), image_size=(640, 480)))]
fn classify(
    preds: Vec<PyLineSegment>,
    gts: Vec<PyLineSegment>,
    distance: &str,
    d_max: f64,
    resolution: (u32, u32),
    image_size: (u32, u32),
) -> PyResult<Vec<bool>> {
    let cfg = metric_config(distance, d_max, resolution)?;
    let c = classify_frame(&preds, &gts, &cfg, image_size);
    Ok(c.labels.iter().map(|l| *l == Label::TruePositive).collect())
}

/// Average precision (a fraction) over frames given as `(preds, gts)` pairs.
#[pyfunction]
#[pyo3(signature = (frames, distance="structural", d_max=5.0, resolution=(128, 128), image_size=(640, 480)))]
fn average_precision(
    frames: Vec<(Vec<PyLineSegment>, Vec<PyLineSegment>)>,
    distance: &str,
    d_max: f64,
    resolution: (u32, u32),
    image_size: (u32, u32),
) -> PyResult<f64> {
    let cfg = metric_config(distance, d_max, resolution)?;
    let per_frame: Vec<ClassifiedDetections> =
        frames.iter().map(|(p, g)| classify_frame(p, g, &cfg, image_size)).collect();
    core::vectorized::average_precision(&per_frame).map_err(to_py)
}

fn heatmap(rows: &[Vec<bool>]) -> PyResult<Heatmap> {
    let height = rows.len() as u32;
    let width = rows.first().map_or(0, Vec::len) as u32;
    if rows.iter().any(|r| r.len() as u32 != width) {
        return Err(PyValueError::new_err("heatmap rows differ in length"));
    }
    let mut map = Heatmap::new(width, height);
    for (y, row) in rows.iter().enumerate() {
        for (x, &v) in row.iter().enumerate() {
            map.set(x as u32, y as u32, v);
        }
    }
    Ok(map)
}

/// Optimal pixel assignment between two boolean maps given as row lists.
#[pyfunction]
fn match_heatmaps<'py>(
    py: Python<'py>,
    pred: Vec<Vec<bool>>,
    gt: Vec<Vec<bool>>,
    d_max: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let r = core::heatmap::match_heatmaps(&heatmap(&pred)?, &heatmap(&gt)?, d_max).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("tp", r.tp)?;
    d.set_item("fp", r.fp)?;
    d.set_item("fn", r.fn_)?;
    d.set_item("cost", r.total_assignment_cost)?;
    Ok(d)
}

/// Estimates the transform taking frame-1 points into camera 2 from
/// correspondences `(p, q, (a, b, c))`: 3D segment endpoints in frame 1 and
/// the observed image line `a u + b v + c = 0` in frame 2.
#[pyfunction]
#[pyo3(signature = (
    correspondences,
    camera,
    max_iterations=100,
    huber_delta=1.0,
    normalization="normal",
    outlier_thresholds=None,
))]
fn estimate_relative_pose<'py>(
    py: Python<'py>,
    correspondences: Vec<([f64; 3], [f64; 3], [f64; 3])>,
    camera: &PyCameraModel,
    max_iterations: usize,
    huber_delta: f64,
    normalization: &str,
    outlier_thresholds: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let cs = correspondences
        .iter()
        .map(|(p, q, l)| {
            let line = HomogeneousLine2D::from_coeffs(Vector3::from(*l))?;
            LineCorrespondence::new(Point3::from(*p), Point3::from(*q), line)
        })
        .collect::<core::Result<Vec<_>>>()
        .map_err(to_py)?;
    let defaults = SolverConfig::default();
    let cfg = SolverConfig {
        max_iterations,
        huber_delta,
        normalization: match normalization {
            "normal" => LineNormalization::Normal,
            "full" => LineNormalization::Full,
            other => return Err(PyValueError::new_err(format!("unknown normalization '{other}'"))),
        },
        outlier_thresholds: outlier_thresholds.unwrap_or(defaults.outlier_thresholds.clone()),
        ..defaults
    };
    let est = core::pose::estimate_relative_pose(&cs, &camera.inner, &cfg).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("pose", PyPose { inner: est.pose })?;
    d.set_item("converged", est.converged)?;
    d.set_item("final_cost", est.final_cost)?;
    d.set_item("iterations", est.iterations)?;
    d.set_item("inlier_fraction", est.inlier_fraction)?;
    d.set_item("rejected", est.rejected)?;
    Ok(d)
}

/// `(translation error in meters, rotation error in degrees)`.
#[pyfunction]
fn relative_pose_error(estimate: &PyPose, ground_truth: &PyPose) -> (f64, f64) {
    let e = core::pose::relative_pose_error(&estimate.inner, &ground_truth.inner);
    (e.trans_error, e.rot_error)
}

/// Metrics of a report; an undefined metric maps to `None`.
fn metrics(report: Report) -> BTreeMap<String, Option<f64>> {
    report.metrics
}

/// Track, frame and line counts of an annotation file.
#[pyfunction]
fn stats(annotations: PathBuf) -> PyResult<BTreeMap<String, Option<f64>>> {
    let a = core::io::load_annotations(annotations).map_err(to_py)?;
    Ok(metrics(core::eval::evaluate_stats(&a)))
}

/// Vectorized detection metrics from annotation and detection files.
#[pyfunction]
#[pyo3(signature = (annotations, detections, distance="structural", d_max=vec![5.0, 10.0], resolution=(128, 128), image_size=(640, 480)))]
fn evaluate_detection(
    annotations: PathBuf,
    detections: PathBuf,
    distance: &str,
    d_max: Vec<f64>,
    resolution: (u32, u32),
    image_size: (u32, u32),
) -> PyResult<BTreeMap<String, Option<f64>>> {
    let a = core::io::load_annotations(annotations).map_err(to_py)?;
    let d = core::io::load_detections(detections).map_err(to_py)?;
    let settings = DetectionSettings {
        distance: distance_kind(distance)?,
        d_max,
        eval_resolution: resolution,
        image_size,
    };
    core::eval::evaluate_detection(&a, &d, &settings).map(metrics).map_err(to_py)
}

/// Heatmap metrics from annotation and detection files.
#[pyfunction]
#[pyo3(signature = (annotations, detections, d_max=None, resolution=(128, 128), image_size=(640, 480)))]
fn evaluate_heatmap(
    annotations: PathBuf,
    detections: PathBuf,
    d_max: Option<f64>,
    resolution: (u32, u32),
    image_size: (u32, u32),
) -> PyResult<BTreeMap<String, Option<f64>>> {
    let a = core::io::load_annotations(annotations).map_err(to_py)?;
    let d = core::io::load_detections(detections).map_err(to_py)?;
    let settings = HeatmapSettings {
        d_max,
        eval_resolution: resolution,
        image_size,
        ..HeatmapSettings::default()
    };
    core::eval::evaluate_heatmap(&a, &d, &settings).map(metrics).map_err(to_py)
}

/// Association metrics from annotation and match files.
#[pyfunction]
#[pyo3(signature = (annotations, matches, stride=1))]
fn evaluate_association(annotations: PathBuf, matches: PathBuf, stride: usize) -> PyResult<BTreeMap<String, Option<f64>>> {
    let a = core::io::load_annotations(annotations).map_err(to_py)?;
    let m = core::io::load_matches(matches).map_err(to_py)?;
    core::eval::evaluate_association(&a, &m, &AssociationSettings { stride })
        .map(metrics)
        .map_err(to_py)
}

#[pymodule(name = "lineval")]
fn lineval_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLineSegment>()?;
    m.add_class::<PyCameraModel>()?;
    m.add_class::<PyPose>()?;
    m.add_function(wrap_pyfunction!(structural_distance, m)?)?;
    m.add_function(wrap_pyfunction!(orthogonal_distance, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(average_precision, m)?)?;
    m.add_function(wrap_pyfunction!(match_heatmaps, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_relative_pose, m)?)?;
    m.add_function(wrap_pyfunction!(relative_pose_error, m)?)?;
    m.add_function(wrap_pyfunction!(stats, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_detection, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_heatmap, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_association, m)?)?;
    Ok(())
}
