//! Metric depth from affine-invariant monocular disparity.
//!
//! Monocular depth networks such as Depth Anything predict disparity that is
//! only correct up to an unknown scale and offset. This crate recovers metric
//! depth per image by fitting `1 / depth = alpha * d + beta` against sparse
//! metric reference points, and ships the pieces needed to produce and judge
//! those points:
//!
//! - [`camera`] and [`raster`]: pinhole geometry, rigid poses, dense maps, bilinear sampling.
//! - [`rescale`]: pairing, least-squares and RANSAC fits, inversion to depth.
//! - [`lidar`]: B-beam LiDAR simulated from dense ground truth.
//! - [`stereo`]: census-cost semi-global matching.
//! - [`sfm`]: pose-gated two-view triangulation and a small corner matcher.
//! - [`metrics`]: δ-thresholds, AbsRel, RMSE, RMSE log, log10 and R².
//! - [`io`]: PNG16, PFM, NPY, text and manifest formats.
//! - [`synth`]: self-consistent synthetic scenes.
//! - [`app`]: the batch pipelines behind the `depth-rescale` binary.

pub mod app;
pub mod camera;
pub mod error;
pub mod io;
pub mod lidar;
pub mod metrics;
pub mod raster;
pub mod refpoint;
pub mod rescale;
pub mod sfm;
pub mod stereo;
pub mod synth;

pub use camera::{project_points, CameraIntrinsics, ProjectedPoint, RigidPose};
pub use error::{Error, Result};
pub use raster::{DepthRange, MapKind, RasterMap};
pub use refpoint::{PointSource, ReferencePoint};
pub use rescale::{
    apply_scale, build_pairs, fit_affine_lsq, fit_affine_ransac, rescale_image, AffineScale,
    InlierThreshold, RansacConfig, RescaleConfig, SamplePair,
};
