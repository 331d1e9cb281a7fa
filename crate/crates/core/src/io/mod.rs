//! Loaders and writers for the on-disk formats: annotations, detections,
//! matches, depth rasters, trajectories, intrinsics, timings and reports.

mod annotations;
mod depth;
mod report;
mod tables;
mod trajectory;

use std::fs;
use std::path::Path;

pub use annotations::{
    load_annotations, sequence_stats, write_annotations, FrameAnnotation, SequenceAnnotation, SequenceStats,
};
pub use depth::{load_depth, write_depth, DepthDir, DepthSource};
pub use report::{Report, ReportFormat};
pub use tables::{
    fps, load_detections, load_matches, load_timings, write_detections, write_matches, Detections, FramePair,
    Timings,
};
pub use trajectory::{
    load_frame_timestamps, load_trajectory, load_trajectory_with_tolerance, FrameMapping, Trajectory,
    TrajectoryRecord, QUATERNION_TOLERANCE,
};

use crate::error::{Error, Result};
use crate::geometry::CameraModel;

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Rows of a delimited text file with their 1-based line numbers. Fields
/// are separated by commas and/or whitespace; blank lines and lines starting
/// with `#` are skipped.
pub(crate) fn rows(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            return None;
        }
        let fields = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        Some((i + 1, fields))
    })
}

pub(crate) fn parse_field<T: std::str::FromStr>(path: &Path, row: usize, name: &str, field: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::format(path, format!("row {row}: cannot parse {name} from '{field}'")))
}

/// Reads camera intrinsics from a JSON object with the fields of
/// [`CameraModel`]; `depth_scale` defaults to 5000.
pub fn load_intrinsics(path: impl AsRef<Path>) -> Result<CameraModel> {
    #[derive(serde::Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Raw {
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        #[serde(default = "default_depth_scale")]
        depth_scale: f64,
        width: u32,
        height: u32,
    }
    fn default_depth_scale() -> f64 {
        5000.0
    }
    let path = path.as_ref();
    let raw: Raw = serde_json::from_str(&read_text(path)?).map_err(|e| Error::format(path, e.to_string()))?;
    CameraModel::new(raw.fx, raw.fy, raw.cx, raw.cy, raw.depth_scale, raw.width, raw.height)
        .map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_intrinsics(path: impl AsRef<Path>, camera: &CameraModel) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(camera).map_err(|e| Error::format(path, e.to_string()))?;
    write_text(path, &text)
}
