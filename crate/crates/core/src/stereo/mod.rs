//! Census-cost semi-global matching on rectified stereo pairs.
//!
//! Pipeline: [`census_transform`] both views, [`matching_cost`] (Hamming
//! distance), [`sgm_aggregate`] over 4 or 8 paths, winner-takes-all with
//! smallest-index tie-break and optional parabolic refinement, then a
//! left-right consistency check. [`stereo_refpoints`] turns the surviving
//! disparities into metric reference points with `depth = fx * baseline / d`.

mod aggregate;
mod census;
mod cost;

pub use aggregate::{aggregate_paths, Direction, PATHS4, PATHS8, PATHS_HORIZONTAL};
pub use census::{census_transform, to_luma, CensusImage};
pub use cost::{matching_cost, CostVolume};

use image::GrayImage;
use serde::{Deserialize, Serialize};

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::raster::{MapKind, RasterMap};
use crate::refpoint::{PointSource, ReferencePoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StereoRig {
    pub intrinsics: CameraIntrinsics,
    pub baseline_m: f64,
}

impl StereoRig {
    pub fn new(intrinsics: CameraIntrinsics, baseline_m: f64) -> Result<Self> {
        if !(baseline_m > 0.0 && baseline_m.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "baseline must be positive, got {baseline_m}"
            )));
        }
        Ok(Self {
            intrinsics,
            baseline_m,
        })
    }

    pub fn depth_from_disparity(&self, d: f64) -> f64 {
        self.intrinsics.fx * self.baseline_m / d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgmConfig {
    pub max_disparity: usize,
    pub census_window: usize,
    pub p1: u32,
    pub p2: u32,
    pub n_paths: usize,
    pub lr_check_max_diff: f64,
    pub subpixel: bool,
    pub min_disparity_px: f64,
}

impl Default for SgmConfig {
    fn default() -> Self {
        Self {
            max_disparity: 128,
            census_window: 5,
            p1: 8,
            p2: 96,
            n_paths: 8,
            lr_check_max_diff: 1.0,
            subpixel: true,
            min_disparity_px: 1.0,
        }
    }
}

impl SgmConfig {
    pub fn validate(&self) -> Result<()> {
        census::check_window(self.census_window)?;
        if !(self.p2 > self.p1 && self.p1 > 0) {
            return Err(Error::InvalidConfig(format!(
                "penalties need p2 > p1 > 0, got p1={} p2={}",
                self.p1, self.p2
            )));
        }
        if self.max_disparity < 2 {
            return Err(Error::InvalidConfig("max_disparity must be >= 2".into()));
        }
        if self.n_paths != 4 && self.n_paths != 8 {
            return Err(Error::InvalidConfig(format!(
                "n_paths must be 4 or 8, got {}",
                self.n_paths
            )));
        }
        if !(self.min_disparity_px >= 1.0) {
            return Err(Error::InvalidConfig("min_disparity_px must be >= 1".into()));
        }
        if !(self.lr_check_max_diff >= 0.0) {
            return Err(Error::InvalidConfig(
                "lr_check_max_diff must be >= 0".into(),
            ));
        }
        Ok(())
    }

    pub fn directions(&self) -> &'static [Direction] {
        if self.n_paths == 4 {
            &PATHS4
        } else {
            &PATHS8
        }
    }
}

pub fn sgm_aggregate(cv: &CostVolume, cfg: &SgmConfig) -> Result<CostVolume> {
    cfg.validate()?;
    Ok(aggregate_paths(cv, cfg.p1, cfg.p2, cfg.directions()))
}

fn argmin(costs: &[u32]) -> usize {
    let mut best = 0;
    for (d, &c) in costs.iter().enumerate() {
        if c < costs[best] {
            best = d;
        }
    }
    best
}

/// Left-view winner-takes-all disparity.
///
/// Ties resolve to the smallest disparity. Pixels whose match would fall
/// left of the right image (`d > x`) are invalid.
pub fn wta_disparity(cv: &CostVolume, cfg: &SgmConfig) -> RasterMap {
    RasterMap::from_fn(cv.width, cv.height, MapKind::PixelDisparity, |x, y| {
        let c = cv.pixel(x, y);
        let d = argmin(c);
        if d > x {
            return None;
        }
        let mut disp = d as f64;
        if cfg.subpixel && d > 0 && d + 1 < cv.n_disp {
            let (cm, c0, cp) = (c[d - 1] as f64, c[d] as f64, c[d + 1] as f64);
            let denom = cm - 2.0 * c0 + cp;
            if denom > 0.0 {
                disp += (cm - cp) / (2.0 * denom);
            }
        }
        Some(disp)
    })
    .expect("disparities are non-negative")
}

/// Right-view integer disparity from a right-referenced (aggregated) volume,
/// see [`CostVolume::right_view`]. Pixels whose match would fall right of the
/// left image (`x + d >= width`) are invalid.
pub fn wta_right_disparity(cv_right: &CostVolume) -> RasterMap {
    RasterMap::from_fn(
        cv_right.width,
        cv_right.height,
        MapKind::PixelDisparity,
        |x, y| {
            let d = argmin(cv_right.pixel(x, y));
            (x + d < cv_right.width).then_some(d as f64)
        },
    )
    .expect("disparities are non-negative")
}

/// Invalidates left pixels where `|d_L(p) - d_R(p - d_L(p))| > max_diff`.
pub fn lr_consistency(left: &RasterMap, right: &RasterMap, max_diff: f64) -> Result<RasterMap> {
    if !left.same_shape(right) {
        return Err(Error::InvalidInput(
            "left and right disparity maps differ in size".into(),
        ));
    }
    RasterMap::from_fn(
        left.width(),
        left.height(),
        MapKind::PixelDisparity,
        |x, y| {
            let dl = left.get(x, y)?;
            let xr = (x as f64 - dl).round();
            if xr < 0.0 {
                return None;
            }
            let dr = right.get(xr as usize, y)?;
            ((dl - dr).abs() <= max_diff).then_some(dl)
        },
    )
}

/// Full matcher: census, cost, aggregation, WTA and left-right check.
pub fn compute_disparity(
    left: &GrayImage,
    right: &GrayImage,
    cfg: &SgmConfig,
) -> Result<RasterMap> {
    cfg.validate()?;
    if left.dimensions() != right.dimensions() {
        return Err(Error::InvalidInput("stereo images differ in size".into()));
    }
    let cl = census_transform(left, cfg.census_window)?;
    let cr = census_transform(right, cfg.census_window)?;
    let raw = matching_cost(&cl, &cr, cfg.max_disparity)?;
    let agg = sgm_aggregate(&raw, cfg)?;
    let dl = wta_disparity(&agg, cfg);
    // aggregating the right view separately keeps its scores comparable;
    // reading them off `agg` mixes path histories of different left pixels
    let agg_r = sgm_aggregate(&raw.right_view(cl.n_bits()), cfg)?;
    let dr = wta_right_disparity(&agg_r);
    lr_consistency(&dl, &dr, cfg.lr_check_max_diff)
}

/// Every `stride`-th valid pixel (row-major) with `d >= min_disparity_px` becomes a reference point.
pub fn stereo_refpoints(
    disp: &RasterMap,
    rig: &StereoRig,
    stride: usize,
    min_disparity_px: f64,
) -> Result<Vec<ReferencePoint>> {
    if stride == 0 {
        return Err(Error::InvalidConfig("stride must be >= 1".into()));
    }
    disp.iter_valid()
        .filter(|&(_, _, d)| d >= min_disparity_px)
        .step_by(stride)
        .map(|(x, y, d)| {
            ReferencePoint::new(
                x as f64,
                y as f64,
                rig.depth_from_disparity(d),
                PointSource::Stereo,
            )
        })
        .collect()
}
