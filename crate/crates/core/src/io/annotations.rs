use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_text, write_text};
use crate::error::{Error, Result};
use crate::geometry::LineSegment2D;

#[derive(Clone, Debug, PartialEq)]
pub struct FrameAnnotation {
    pub frame_id: u64,
    /// Every line carries a track id, unique within the frame.
    pub lines: Vec<LineSegment2D>,
}

/// Ground-truth lines of a sequence, frames in strictly increasing id order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SequenceAnnotation {
    frames: Vec<FrameAnnotation>,
}

impl SequenceAnnotation {
    pub fn new(frames: Vec<FrameAnnotation>) -> Result<Self> {
        for (k, pair) in frames.windows(2).enumerate() {
            if pair[1].frame_id <= pair[0].frame_id {
                return Err(Error::Annotation(format!(
                    "frames[{}]: frame_id {} does not follow {}",
                    k + 1,
                    pair[1].frame_id,
                    pair[0].frame_id
                )));
            }
        }
        for frame in &frames {
            let mut seen = BTreeSet::new();
            for (k, line) in frame.lines.iter().enumerate() {
                let Some(id) = line.track_id else {
                    return Err(Error::Annotation(format!(
                        "frame {}: line {k} has no track_id",
                        frame.frame_id
                    )));
                };
                if !seen.insert(id) {
                    return Err(Error::Annotation(format!(
                        "frame {}: duplicate track_id {id}",
                        frame.frame_id
                    )));
                }
            }
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &[FrameAnnotation] {
        &self.frames
    }

    pub fn frame(&self, frame_id: u64) -> Option<&FrameAnnotation> {
        self.frames
            .binary_search_by_key(&frame_id, |f| f.frame_id)
            .ok()
            .map(|k| &self.frames[k])
    }

    pub fn frame_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.frames.iter().map(|f| f.frame_id)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    frames: Vec<RawFrame>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFrame {
    frame_id: u64,
    lines: Vec<RawLine>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLine {
    track_id: i64,
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
}

/// Reads an annotation document:
///
/// ```json
/// {"frames": [{"frame_id": 0, "lines": [{"track_id": 3, "x1": 0, "y1": 0, "x2": 10, "y2": 0}]}]}
/// ```
pub fn load_annotations(path: impl AsRef<Path>) -> Result<SequenceAnnotation> {
    let path = path.as_ref();
    let doc: RawDocument =
        serde_json::from_str(&read_text(path)?).map_err(|e| Error::format(path, e.to_string()))?;
    let mut frames = Vec::with_capacity(doc.frames.len());
    for (fi, raw) in doc.frames.into_iter().enumerate() {
        let mut lines = Vec::with_capacity(raw.lines.len());
        for (li, l) in raw.lines.into_iter().enumerate() {
            let seg = LineSegment2D::from_coords(l.x1, l.y1, l.x2, l.y2).map_err(|e| {
                Error::format(path, format!("frames[{fi}].lines[{li}] (frame {}): {e}", raw.frame_id))
            })?;
            lines.push(seg.with_track_id(l.track_id));
        }
        frames.push(FrameAnnotation {
            frame_id: raw.frame_id,
            lines,
        });
    }
    SequenceAnnotation::new(frames)
}

pub fn write_annotations(path: impl AsRef<Path>, annotation: &SequenceAnnotation) -> Result<()> {
    let path = path.as_ref();
    let doc = RawDocument {
        frames: annotation
            .frames
            .iter()
            .map(|f| RawFrame {
                frame_id: f.frame_id,
                lines: f
                    .lines
                    .iter()
                    .map(|l| RawLine {
                        track_id: l.track_id.unwrap_or_default(),
                        x1: l.p1.x,
                        y1: l.p1.y,
                        x2: l.p2.x,
                        y2: l.p2.y,
                    })
                    .collect(),
            })
            .collect(),
    };
    let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::format(path, e.to_string()))?;
    write_text(path, &text)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceStats {
    pub n_tracks: usize,
    pub n_frames: usize,
    pub n_lines: usize,
    pub mean_lines_per_frame: f64,
}

impl SequenceStats {
    /// Mean line count rounded half away from zero, as tabulated.
    pub fn rounded_mean(&self) -> u64 {
        self.mean_lines_per_frame.round() as u64
    }
}

pub fn sequence_stats(annotation: &SequenceAnnotation) -> SequenceStats {
    let tracks: BTreeSet<i64> = annotation
        .frames
        .iter()
        .flat_map(|f| f.lines.iter().filter_map(|l| l.track_id))
        .collect();
    let n_frames = annotation.frames.len();
    let n_lines: usize = annotation.frames.iter().map(|f| f.lines.len()).sum();
    SequenceStats {
        n_tracks: tracks.len(),
        n_frames,
        n_lines,
        mean_lines_per_frame: if n_frames == 0 { 0.0 } else { n_lines as f64 / n_frames as f64 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, text: &str) -> std::path::PathBuf {
        let path = dir.path().join("a.json");
        std::fs::write(&path, text).unwrap();
        path
    }

    #[test]
    fn minimal_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(
            &dir,
            r#"{"frames": [{"frame_id": 0, "lines": [{"track_id": 1, "x1": 0, "y1": 0, "x2": 10, "y2": 0}]}]}"#,
        );
        let a = load_annotations(&path).unwrap();
        assert_eq!(a.frames().len(), 1);
        assert_eq!(a.frames()[0].lines.len(), 1);
        assert_eq!(a.frames()[0].lines[0].track_id, Some(1));
    }

    #[test]
    fn duplicate_track_names_frame() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(
            &dir,
            r#"{"frames": [{"frame_id": 7, "lines": [
                {"track_id": 1, "x1": 0, "y1": 0, "x2": 10, "y2": 0},
                {"track_id": 1, "x1": 0, "y1": 5, "x2": 10, "y2": 5}]}]}"#,
        );
        let err = load_annotations(&path).unwrap_err().to_string();
        assert!(err.contains("frame 7") && err.contains("duplicate"), "{err}");
    }

    #[test]
    fn non_monotone_frames() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(&dir, r#"{"frames": [{"frame_id": 2, "lines": []}, {"frame_id": 1, "lines": []}]}"#);
        let err = load_annotations(&path).unwrap_err().to_string();
        assert!(err.contains("frames[1]"), "{err}");
    }

    #[test]
    fn schema_errors_carry_location() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(&dir, "{\"frames\": [{\"frame_id\": 0,\n \"lines\": [{\"track_id\": 1, \"x1\": 0}]}]}");
        let err = load_annotations(&path).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        let path = write(
            &dir,
            r#"{"frames": [{"frame_id": 0, "lines": [{"track_id": 1, "x1": 3, "y1": 3, "x2": 3, "y2": 3}]}]}"#,
        );
        let err = load_annotations(&path).unwrap_err().to_string();
        assert!(err.contains("frames[0].lines[0]"), "{err}");
    }

    #[test]
    fn stats() {
        assert_eq!(
            sequence_stats(&SequenceAnnotation::default()),
            SequenceStats {
                n_tracks: 0,
                n_frames: 0,
                n_lines: 0,
                mean_lines_per_frame: 0.0
            }
        );
        let line = |id| LineSegment2D::from_coords(0.0, 0.0, 1.0, 1.0).unwrap().with_track_id(id);
        let a = SequenceAnnotation::new(vec![
            FrameAnnotation { frame_id: 0, lines: vec![line(1), line(2)] },
            FrameAnnotation { frame_id: 1, lines: vec![line(2), line(3), line(4)] },
        ])
        .unwrap();
        let s = sequence_stats(&a);
        assert_eq!((s.n_tracks, s.n_frames, s.n_lines), (4, 2, 5));
        assert_eq!(s.mean_lines_per_frame, 2.5);
        assert_eq!(s.rounded_mean(), 3);
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let line = |id, y| LineSegment2D::from_coords(0.1, y, 7.25, 3.0).unwrap().with_track_id(id);
        let a = SequenceAnnotation::new(vec![
            FrameAnnotation { frame_id: 3, lines: vec![line(9, 0.3), line(-2, 1.0 / 3.0)] },
            FrameAnnotation { frame_id: 8, lines: vec![] },
        ])
        .unwrap();
        let path = dir.path().join("rt.json");
        write_annotations(&path, &a).unwrap();
        assert_eq!(load_annotations(&path).unwrap(), a);
    }
}
