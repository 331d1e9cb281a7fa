//! Evaluation toolkit for line segment detectors and associators on
//! sequential RGB-D data.
//!
//! The crate covers vectorized and heatmap detection metrics, depth-based
//! cross-frame repeatability, association classification, and line-based
//! relative pose estimation with relative pose error reporting.

pub mod association;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod heatmap;
pub mod io;
pub mod matching;
pub mod metrics;
pub mod pose;
pub mod repeatability;
pub mod vectorized;

pub use error::{Error, Result};
pub use geometry::{
    backproject, orthogonal_distance, orthogonal_projection, project_point, reproject_segment,
    structural_distance, CameraModel, DepthImage, DistanceKind, HomogeneousLine2D, LineSegment2D,
    PoseSE3,
};
