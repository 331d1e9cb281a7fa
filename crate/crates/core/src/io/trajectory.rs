use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use super::{parse_field, read_text, rows, write_text};
use crate::error::{Error, Result};
use crate::geometry::PoseSE3;

/// Default allowed deviation of a quaternion norm from 1.
pub const QUATERNION_TOLERANCE: f64 = 1e-6;

/// One trajectory row: the camera-to-world pose at `timestamp`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub timestamp: f64,
    pub translation: [f64; 3],
    /// Unit quaternion in `x y z w` order.
    pub quaternion: [f64; 4],
}

impl TrajectoryRecord {
    /// The stored quaternion is renormalized; loading already checked that
    /// it is unit within tolerance.
    pub fn pose(&self) -> PoseSE3 {
        let n = self.quaternion.iter().map(|v| v * v).sum::<f64>().sqrt();
        let q = self.quaternion.map(|v| v / n);
        PoseSE3::from_quaternion(Vector3::from(self.translation), q, 1e-9).expect("normalized quaternion")
    }
}

/// How frame ids select trajectory rows.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum FrameMapping {
    /// Frame id `k` is row `k`.
    #[default]
    Positional,
    /// Frame id to timestamp; the row with that timestamp (within 1e-6 s).
    Timestamps(BTreeMap<u64, f64>),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    records: Vec<TrajectoryRecord>,
}

impl Trajectory {
    pub fn new(records: Vec<TrajectoryRecord>) -> Result<Self> {
        for (k, r) in records.iter().enumerate() {
            PoseSE3::from_quaternion(Vector3::from(r.translation), r.quaternion, QUATERNION_TOLERANCE)
                .map_err(|e| Error::InvalidValue(format!("record {k}: {e}")))?;
            if k > 0 && !(r.timestamp > records[k - 1].timestamp) {
                return Err(Error::InvalidValue(format!(
                    "record {k}: timestamp {} does not follow {}",
                    r.timestamp,
                    records[k - 1].timestamp
                )));
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[TrajectoryRecord] {
        &self.records
    }

    pub fn pose_of(&self, frame_id: u64, mapping: &FrameMapping) -> Result<PoseSE3> {
        let record = match mapping {
            FrameMapping::Positional => usize::try_from(frame_id).ok().and_then(|k| self.records.get(k)),
            FrameMapping::Timestamps(map) => {
                let t = *map
                    .get(&frame_id)
                    .ok_or_else(|| Error::InvalidValue(format!("frame {frame_id} has no timestamp")))?;
                let k = self.records.partition_point(|r| r.timestamp < t - 1e-6);
                self.records.get(k).filter(|r| (r.timestamp - t).abs() <= 1e-6)
            }
        };
        record
            .map(TrajectoryRecord::pose)
            .ok_or_else(|| Error::InvalidValue(format!("frame {frame_id} not found in trajectory")))
    }

    /// Ground-truth relative pose `pose_i⁻¹ · pose_j`, mapping points from
    /// camera `j` into camera `i`.
    pub fn relative_gt(&self, frame_i: u64, frame_j: u64, mapping: &FrameMapping) -> Result<PoseSE3> {
        Ok(self.pose_of(frame_i, mapping)?.inverse() * self.pose_of(frame_j, mapping)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = String::from("# timestamp tx ty tz qx qy qz qw\n");
        for r in &self.records {
            let [tx, ty, tz] = r.translation;
            let [qx, qy, qz, qw] = r.quaternion;
            writeln!(text, "{} {tx} {ty} {tz} {qx} {qy} {qz} {qw}", r.timestamp).unwrap();
        }
        write_text(path.as_ref(), &text)
    }
}

/// Reads whitespace-delimited rows `timestamp tx ty tz qx qy qz qw`.
pub fn load_trajectory(path: impl AsRef<Path>) -> Result<Trajectory> {
    load_trajectory_with_tolerance(path, QUATERNION_TOLERANCE)
}

/// [`load_trajectory`] with a custom bound on `|‖q‖ - 1|`.
pub fn load_trajectory_with_tolerance(path: impl AsRef<Path>, tolerance: f64) -> Result<Trajectory> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut records: Vec<TrajectoryRecord> = Vec::new();
    for (row, fields) in rows(&text) {
        if fields.len() != 8 {
            return Err(Error::format(
                path,
                format!("row {row}: expected 8 fields (timestamp tx ty tz qx qy qz qw), found {}", fields.len()),
            ));
        }
        let names = ["timestamp", "tx", "ty", "tz", "qx", "qy", "qz", "qw"];
        let mut v = [0.0; 8];
        for k in 0..8 {
            v[k] = parse_field(path, row, names[k], fields[k])?;
        }
        let record = TrajectoryRecord {
            timestamp: v[0],
            translation: [v[1], v[2], v[3]],
            quaternion: [v[4], v[5], v[6], v[7]],
        };
        PoseSE3::from_quaternion(Vector3::from(record.translation), record.quaternion, tolerance)
            .map_err(|e| Error::format(path, format!("row {row}: {e}")))?;
        if let Some(prev) = records.last() {
            if !(record.timestamp > prev.timestamp) {
                return Err(Error::format(
                    path,
                    format!("row {row}: timestamp {} does not follow {}", record.timestamp, prev.timestamp),
                ));
            }
        }
        records.push(record);
    }
    Ok(Trajectory { records })
}

/// Reads rows `frame_id timestamp` into a [`FrameMapping::Timestamps`].
pub fn load_frame_timestamps(path: impl AsRef<Path>) -> Result<FrameMapping> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut map = BTreeMap::new();
    for (row, fields) in rows(&text) {
        if fields.len() != 2 {
            return Err(Error::format(
                path,
                format!("row {row}: expected 2 fields (frame_id timestamp), found {}", fields.len()),
            ));
        }
        let frame: u64 = parse_field(path, row, "frame_id", fields[0])?;
        let t: f64 = parse_field(path, row, "timestamp", fields[1])?;
        if map.insert(frame, t).is_some() {
            return Err(Error::format(path, format!("row {row}: frame {frame} listed twice")));
        }
    }
    Ok(FrameMapping::Timestamps(map))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(dir: &tempfile::TempDir, text: &str) -> std::path::PathBuf {
        let path = dir.path().join("traj.txt");
        std::fs::write(&path, text).unwrap();
        path
    }

    #[test]
    fn identical_rows_give_identity() {
        let dir = tempfile::tempdir().unwrap();
        let t = load_trajectory(file(&dir, "1.0 0.5 0.2 1 0 0.6 0 0.8\n2.0 0.5 0.2 1 0 0.6 0 0.8\n")).unwrap();
        let rel = t.relative_gt(0, 1, &FrameMapping::Positional).unwrap();
        assert!((rel.rotation() - nalgebra::Matrix3::identity()).norm() < 1e-15);
        assert!(rel.translation().norm() < 1e-15);
    }

    #[test]
    fn z_translation() {
        let dir = tempfile::tempdir().unwrap();
        let t = load_trajectory(file(&dir, "0 0 0 0 0 0 0 1\n1 0 0 1 0 0 0 1\n")).unwrap();
        let rel = t.relative_gt(0, 1, &FrameMapping::Positional).unwrap();
        assert_eq!(rel.translation().norm(), 1.0);
        let map = FrameMapping::Timestamps([(10, 0.0), (11, 1.0)].into());
        assert_eq!(t.relative_gt(10, 11, &map).unwrap(), rel);
        assert!(t.relative_gt(10, 12, &map).is_err());
        assert!(t.relative_gt(0, 2, &FrameMapping::Positional).is_err());
    }

    #[test]
    fn validation() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_trajectory(file(&dir, "1 0 0 0 0 0 0 1\n0.5 0 0 0 0 0 0 1\n")).unwrap_err().to_string();
        assert!(err.contains("row 2"), "{err}");
        let err = load_trajectory(file(&dir, "1 0 0 0 0 0 0 1.00001\n")).unwrap_err().to_string();
        assert!(err.contains("row 1"), "{err}");
        assert!(load_trajectory(file(&dir, "1 0 0 0 0 0 0 1.0000005\n")).is_ok());
        let coarse = file(&dir, "1 0 0 0 0.6574 0.6126 -0.2949 -0.3248\n");
        assert!(load_trajectory(&coarse).is_err());
        assert!(load_trajectory_with_tolerance(&coarse, 1e-3).is_ok());
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let text = "1305031102.175304 1.3405 0.6266 1.6575 0.36 0.48 -0.64 0.48\n1305031102.211214 1.3303 0.6256 1.6464 0 0.6 0 -0.8\n";
        let t = load_trajectory(file(&dir, text)).unwrap();
        let out = dir.path().join("out.txt");
        t.write(&out).unwrap();
        assert_eq!(load_trajectory(&out).unwrap(), t);
        assert_eq!(Trajectory::new(t.records().to_vec()).unwrap(), t);
    }
}
