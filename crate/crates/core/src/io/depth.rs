use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, ImageReader, Luma};

use crate::error::{Error, Result};
use crate::geometry::{CameraModel, DepthImage};

/// Decodes a 16-bit single-channel raster. Raw values are kept as stored;
/// the camera's `depth_scale` converts them to meters.
pub fn load_depth(path: impl AsRef<Path>, camera: &CameraModel) -> Result<DepthImage> {
    let path = path.as_ref();
    let img = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|e| Error::format(path, e.to_string()))?;
    let buf = match img {
        DynamicImage::ImageLuma16(buf) => buf,
        other => {
            return Err(Error::format(
                path,
                format!("expected a 16-bit single-channel depth image, found {:?}", other.color()),
            ))
        }
    };
    if (buf.width(), buf.height()) != (camera.width, camera.height) {
        return Err(Error::format(
            path,
            format!(
                "depth image is {}x{}, camera expects {}x{}",
                buf.width(),
                buf.height(),
                camera.width,
                camera.height
            ),
        ));
    }
    DepthImage::new(buf.width(), buf.height(), buf.into_raw())
}

/// Writes a depth raster as a 16-bit grayscale PNG.
pub fn write_depth(path: impl AsRef<Path>, depth: &DepthImage) -> Result<()> {
    let path = path.as_ref();
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(depth.width(), depth.height(), depth.values().to_vec())
            .expect("depth buffer length matches its dimensions");
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::format(path, e.to_string()))
}

/// Supplies depth rasters by frame id.
pub trait DepthSource: Sync {
    /// Frame ids with depth, ascending.
    fn frame_ids(&self) -> Vec<u64>;
    fn depth(&self, frame_id: u64) -> Result<DepthImage>;
}

impl DepthSource for BTreeMap<u64, DepthImage> {
    fn frame_ids(&self) -> Vec<u64> {
        self.keys().copied().collect()
    }

    fn depth(&self, frame_id: u64) -> Result<DepthImage> {
        self.get(&frame_id)
            .cloned()
            .ok_or_else(|| Error::InvalidValue(format!("no depth image for frame {frame_id}")))
    }
}

/// A directory of `<frame_id>.png` depth rasters, decoded on demand.
#[derive(Clone, Debug)]
pub struct DepthDir {
    camera: CameraModel,
    files: BTreeMap<u64, PathBuf>,
}

impl DepthDir {
    /// Indexes the `.png` files of `dir`; each must be named by its frame id.
    pub fn open(dir: impl AsRef<Path>, camera: &CameraModel) -> Result<Self> {
        let dir = dir.as_ref();
        let mut files = BTreeMap::new();
        for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let path = entry.map_err(|e| Error::io(dir, e))?.path();
            if !path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
                continue;
            }
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            let id: u64 = stem
                .parse()
                .map_err(|_| Error::format(&path, "depth file name must be <frame_id>.png"))?;
            if let Some(prev) = files.insert(id, path.clone()) {
                return Err(Error::format(&path, format!("frame {id} already provided by {}", prev.display())));
            }
        }
        Ok(Self {
            camera: *camera,
            files,
        })
    }
}

impl DepthSource for DepthDir {
    fn frame_ids(&self) -> Vec<u64> {
        self.files.keys().copied().collect()
    }

    fn depth(&self, frame_id: u64) -> Result<DepthImage> {
        let path = self
            .files
            .get(&frame_id)
            .ok_or_else(|| Error::InvalidValue(format!("no depth image for frame {frame_id}")))?;
        load_depth(path, &self.camera)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::backproject;
    use nalgebra::Point2;

    fn camera() -> CameraModel {
        CameraModel::new(500.0, 500.0, 15.5, 11.5, 5000.0, 32, 24).unwrap()
    }

    #[test]
    fn round_trip_and_scale() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.png");
        let cam = camera();
        let mut depth = DepthImage::filled(32, 24, 0);
        depth.set(16, 12, 5000);
        depth.set(3, 4, 65535);
        write_depth(&path, &depth).unwrap();
        let back = load_depth(&path, &cam).unwrap();
        assert_eq!(back, depth);
        let p = backproject(&cam, &Point2::new(16.0, 12.0), &back).unwrap().unwrap();
        assert_eq!(p.z, 1.0);
    }

    #[test]
    fn zero_depth_everywhere_is_absent() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.png");
        let cam = camera();
        write_depth(&path, &DepthImage::filled(32, 24, 0)).unwrap();
        let depth = load_depth(&path, &cam).unwrap();
        for v in 0..24 {
            for u in 0..32 {
                assert!(backproject(&cam, &Point2::new(u as f64, v as f64), &depth).unwrap().is_none());
            }
        }
    }

    #[test]
    fn depth_dir_indexes_by_frame_id() {
        let dir = tempfile::tempdir().unwrap();
        let cam = camera();
        write_depth(dir.path().join("0007.png"), &DepthImage::filled(32, 24, 7)).unwrap();
        write_depth(dir.path().join("2.png"), &DepthImage::filled(32, 24, 2)).unwrap();
        std::fs::write(dir.path().join("notes.txt"), "x").unwrap();
        let src = DepthDir::open(dir.path(), &cam).unwrap();
        assert_eq!(src.frame_ids(), vec![2, 7]);
        assert_eq!(src.depth(7).unwrap().get(0, 0), 7);
        assert!(src.depth(3).is_err());
        std::fs::write(dir.path().join("seven.png"), "x").unwrap();
        assert!(DepthDir::open(dir.path(), &cam).is_err());
    }

    #[test]
    fn rejects_8_bit_and_wrong_size() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d8.png");
        image::GrayImage::new(32, 24).save(&path).unwrap();
        assert!(matches!(load_depth(&path, &camera()), Err(Error::Format { .. })));
        let path = dir.path().join("small.png");
        write_depth(&path, &DepthImage::filled(8, 8, 1)).unwrap();
        let err = load_depth(&path, &camera()).unwrap_err().to_string();
        assert!(err.contains("8x8"), "{err}");
    }
}
