use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{parse_field, read_text, rows, write_text};
use crate::association::MatchSet;
use crate::error::{Error, Result};
use crate::geometry::LineSegment2D;

/// Detected segments grouped by frame, in file order within each frame.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Detections {
    pub frames: BTreeMap<u64, Vec<LineSegment2D>>,
    /// Whether the rows carry a confidence column. `None` for an empty file.
    pub scored: Option<bool>,
}

impl Detections {
    /// Segments of `frame_id`; a frame absent from the file has none.
    pub fn frame(&self, frame_id: u64) -> &[LineSegment2D] {
        self.frames.get(&frame_id).map_or(&[], Vec::as_slice)
    }

    pub fn is_scored(&self) -> bool {
        self.scored.unwrap_or(false)
    }
}

/// Reads rows `frame_id x1 y1 x2 y2 [score]`, separated by whitespace or
/// commas. Either every row carries a score or none does.
pub fn load_detections(path: impl AsRef<Path>) -> Result<Detections> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut out = Detections::default();
    for (row, fields) in rows(&text) {
        let scored = match fields.len() {
            5 => false,
            6 => true,
            n => {
                return Err(Error::format(
                    path,
                    format!("row {row}: expected 5 or 6 fields (frame_id x1 y1 x2 y2 [score]), found {n}"),
                ))
            }
        };
        match out.scored {
            Some(s) if s != scored => {
                return Err(Error::format(
                    path,
                    format!("row {row}: mixes scored and unscored detections"),
                ))
            }
            _ => out.scored = Some(scored),
        }
        let frame: u64 = parse_field(path, row, "frame_id", fields[0])?;
        let mut c = [0.0; 4];
        for (k, name) in ["x1", "y1", "x2", "y2"].iter().enumerate() {
            c[k] = parse_field(path, row, name, fields[k + 1])?;
        }
        let mut seg =
            LineSegment2D::from_coords(c[0], c[1], c[2], c[3]).map_err(|e| Error::format(path, format!("row {row}: {e}")))?;
        if scored {
            let score: f64 = parse_field(path, row, "score", fields[5])?;
            seg = seg.with_score(score).map_err(|e| Error::format(path, format!("row {row}: {e}")))?;
        }
        out.frames.entry(frame).or_default().push(seg);
    }
    Ok(out)
}

pub fn write_detections(path: impl AsRef<Path>, detections: &Detections) -> Result<()> {
    let mut text = String::new();
    for (frame, segs) in &detections.frames {
        for s in segs {
            write!(text, "{frame} {} {} {} {}", s.p1.x, s.p1.y, s.p2.x, s.p2.y).unwrap();
            if let Some(score) = s.score {
                write!(text, " {score}").unwrap();
            }
            text.push('\n');
        }
    }
    write_text(path.as_ref(), &text)
}

pub type FramePair = (u64, u64);

/// Reads rows `frame_i frame_j idx_i idx_j` into one-to-one match sets per
/// frame pair.
pub fn load_matches(path: impl AsRef<Path>) -> Result<BTreeMap<FramePair, MatchSet>> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut out: BTreeMap<FramePair, MatchSet> = BTreeMap::new();
    for (row, fields) in rows(&text) {
        if fields.len() != 4 {
            return Err(Error::format(
                path,
                format!("row {row}: expected 4 fields (frame_i frame_j idx_i idx_j), found {}", fields.len()),
            ));
        }
        let fi: u64 = parse_field(path, row, "frame_i", fields[0])?;
        let fj: u64 = parse_field(path, row, "frame_j", fields[1])?;
        let a: usize = parse_field(path, row, "idx_i", fields[2])?;
        let b: usize = parse_field(path, row, "idx_j", fields[3])?;
        out.entry((fi, fj))
            .or_default()
            .insert(a, b)
            .map_err(|e| Error::format(path, format!("row {row}: frames ({fi}, {fj}): {e}")))?;
    }
    Ok(out)
}

pub fn write_matches(path: impl AsRef<Path>, matches: &BTreeMap<FramePair, MatchSet>) -> Result<()> {
    let mut text = String::new();
    for ((fi, fj), set) in matches {
        for (a, b) in set.pairs() {
            writeln!(text, "{fi} {fj} {a} {b}").unwrap();
        }
    }
    write_text(path.as_ref(), &text)
}

/// Per-frame processing times in seconds, in file order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Timings {
    pub rows: Vec<(u64, f64)>,
}

/// Reads rows `frame_id seconds`; every duration must be positive.
pub fn load_timings(path: impl AsRef<Path>) -> Result<Timings> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut out = Timings::default();
    for (row, fields) in rows(&text) {
        if fields.len() != 2 {
            return Err(Error::format(
                path,
                format!("row {row}: expected 2 fields (frame_id seconds), found {}", fields.len()),
            ));
        }
        let frame: u64 = parse_field(path, row, "frame_id", fields[0])?;
        let secs: f64 = parse_field(path, row, "seconds", fields[1])?;
        if !(secs.is_finite() && secs > 0.0) {
            return Err(Error::format(path, format!("row {row}: duration must be positive, got {secs}")));
        }
        out.rows.push((frame, secs));
    }
    Ok(out)
}

/// Frames processed per second of total runtime.
pub fn fps(timings: &Timings) -> Result<f64> {
    if timings.rows.is_empty() {
        return Err(Error::UndefinedMetric("fps of an empty timing table".into()));
    }
    if let Some(&(frame, secs)) = timings.rows.iter().find(|r| !(r.1.is_finite() && r.1 > 0.0)) {
        return Err(Error::InvalidValue(format!("frame {frame}: duration must be positive, got {secs}")));
    }
    let total: f64 = timings.rows.iter().map(|r| r.1).sum();
    Ok(timings.rows.len() as f64 / total)
}
