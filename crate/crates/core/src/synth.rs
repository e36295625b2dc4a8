//! Self-consistent synthetic scenes for tests, examples and the `synth` command.
//!
//! A scene is a road-like depth map seen from a camera 1.6 m above a flat
//! ground plane: ground below the horizon, a back wall above it and a few
//! upright boxes in between. Everything else (affine disparity, stereo pair,
//! second view, correspondences) is derived from that depth map.

use image::{GrayImage, Luma};
use nalgebra::Vector3;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::camera::{CameraIntrinsics, RigidPose, Z_MIN};
use crate::error::{Error, Result};
use crate::raster::{DepthRange, MapKind, RasterMap};
use crate::refpoint::ReferencePoint;
use crate::sfm::Correspondence;

pub const CAMERA_HEIGHT_M: f64 = 1.6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub width: usize,
    pub height: usize,
    /// Fraction of pixels randomly marked invalid, mimicking sparse ground truth.
    pub hole_fraction: f64,
    pub max_boxes: usize,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            width: 160,
            height: 64,
            hole_fraction: 0.0,
            max_boxes: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub intrinsics: CameraIntrinsics,
    pub depth: RasterMap,
}

/// Camera with a horizontal field of view of about 80 degrees and the horizon at 40% height.
pub fn scene_intrinsics(width: usize, height: usize) -> CameraIntrinsics {
    let f = 0.6 * width as f64;
    CameraIntrinsics {
        fx: f,
        fy: f,
        cx: (width as f64 - 1.0) / 2.0,
        cy: 0.4 * (height as f64 - 1.0),
        width,
        height,
    }
}

pub fn road_scene(cfg: &SceneConfig) -> Result<Scene> {
    if cfg.width < 8 || cfg.height < 8 {
        return Err(Error::InvalidConfig(
            "synthetic scenes need at least 8x8 pixels".into(),
        ));
    }
    let k = scene_intrinsics(cfg.width, cfg.height);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let wall = rng.random_range(30.0..60.0);
    let n_boxes = rng.random_range(0..=cfg.max_boxes);
    // (z, x_min, x_max, top) in meters; box bottoms rest on the ground
    let boxes: Vec<(f64, f64, f64, f64)> = (0..n_boxes)
        .map(|_| {
            let z = rng.random_range(4.0..25.0);
            let x = rng.random_range(-8.0..8.0);
            let half = rng.random_range(0.75..2.0);
            let tall = rng.random_range(1.0..3.0);
            (z, x - half, x + half, CAMERA_HEIGHT_M - tall)
        })
        .collect();
    let holes = cfg.hole_fraction.clamp(0.0, 1.0);
    let depth = RasterMap::from_fn(cfg.width, cfg.height, MapKind::MetricDepth, |u, v| {
        let (uf, vf) = (u as f64, v as f64);
        let mut z = if vf > k.cy {
            (k.fy * CAMERA_HEIGHT_M / (vf - k.cy)).min(wall)
        } else {
            wall
        };
        for &(bz, x0, x1, top) in &boxes {
            // camera y axis points down: the box spans y in [top, CAMERA_HEIGHT_M]
            let (x, y) = ((uf - k.cx) * bz / k.fx, (vf - k.cy) * bz / k.fy);
            if bz < z && x >= x0 && x <= x1 && y >= top && y <= CAMERA_HEIGHT_M {
                z = bz;
            }
        }
        (holes == 0.0 || rng.random::<f64>() >= holes).then_some(z)
    })?;
    Ok(Scene {
        intrinsics: k,
        depth,
    })
}

/// Disparity that satisfies `1 / depth = alpha0 * d + beta0` exactly.
pub fn affine_disparity(depth: &RasterMap, alpha0: f64, beta0: f64) -> Result<RasterMap> {
    if !(alpha0 > 0.0 && alpha0.is_finite() && beta0.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "need alpha0 > 0, got {alpha0}"
        )));
    }
    depth.map_valid(MapKind::AffineDisparity, |z| {
        Some((1.0 / z - beta0) / alpha0)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutlierDepth {
    /// Uniform in depth over the range.
    Uniform,
    /// Uniform in log depth over the range.
    LogUniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Corruption {
    /// Exact fraction (rounded) of points whose depth is replaced by junk.
    pub outlier_fraction: f64,
    pub outlier_depth: OutlierDepth,
    /// Relative standard deviation of the multiplicative noise on inlier inverse depth.
    pub g_noise: f64,
    pub range: DepthRange,
}

/// Returns the corrupted points and, per point, whether it was made an outlier.
pub fn corrupt_refpoints(
    refs: &[ReferencePoint],
    c: &Corruption,
    rng: &mut impl Rng,
) -> (Vec<ReferencePoint>, Vec<bool>) {
    let n_out =
        ((c.outlier_fraction.clamp(0.0, 1.0) * refs.len() as f64).round() as usize).min(refs.len());
    let mut is_out = vec![false; refs.len()];
    for i in sample(rng, refs.len(), n_out) {
        is_out[i] = true;
    }
    let noise = Normal::new(0.0, c.g_noise.max(0.0)).expect("finite sigma");
    let (lo, hi) = (c.range.min_m, c.range.max_m);
    let out = refs
        .iter()
        .zip(&is_out)
        .map(|(r, &o)| {
            let depth = if o {
                match c.outlier_depth {
                    OutlierDepth::Uniform => rng.random_range(lo..=hi),
                    OutlierDepth::LogUniform => rng.random_range(lo.ln()..=hi.ln()).exp(),
                }
            } else {
                let g = r.inverse_depth() * (1.0 + noise.sample(rng)).max(1e-3);
                1.0 / g
            };
            ReferencePoint { depth, ..*r }
        })
        .collect();
    (out, is_out)
}

/// Independent uniform noise, good enough for census matching.
pub fn noise_texture(width: u32, height: u32, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GrayImage::from_fn(width, height, |_, _| Luma([rng.random()]))
}

/// Left/right pair where every left pixel `x` appears at `x - d0` on the right.
pub fn shifted_pair(width: u32, height: u32, d0: u32, seed: u64) -> (GrayImage, GrayImage) {
    let tex = noise_texture(width + d0, height, seed);
    let left = GrayImage::from_fn(width, height, |x, y| *tex.get_pixel(x, y));
    let right = GrayImage::from_fn(width, height, |x, y| *tex.get_pixel(x + d0, y));
    (left, right)
}

/// Renders a rectified pair from a depth map by forward-warping a noise
/// texture with integer disparity `round(fx * baseline / z)`. Nearer surfaces
/// win occlusions; disoccluded right pixels get fresh noise. Returns the pair
/// and the integer disparity used per left pixel.
pub fn render_stereo(
    depth: &RasterMap,
    k: &CameraIntrinsics,
    baseline_m: f64,
    seed: u64,
) -> Result<(GrayImage, GrayImage, RasterMap)> {
    if !(baseline_m > 0.0) {
        return Err(Error::InvalidConfig("baseline must be positive".into()));
    }
    let (w, h) = (depth.width(), depth.height());
    let left = noise_texture(w as u32, h as u32, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut right = GrayImage::from_fn(w as u32, h as u32, |_, _| Luma([rng.random()]));
    let disp = RasterMap::from_fn(w, h, MapKind::PixelDisparity, |x, y| {
        Some(
            depth
                .get(x, y)
                .map_or(0.0, |z| (k.fx * baseline_m / z).round()),
        )
    })?;
    let mut zbuf = vec![-1.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let d = disp.get(x, y).unwrap_or(0.0);
            let xr = x as f64 - d;
            if xr < 0.0 {
                continue;
            }
            let i = y * w + xr as usize;
            if d > zbuf[i] {
                zbuf[i] = d;
                right.put_pixel(xr as u32, y as u32, *left.get_pixel(x as u32, y as u32));
            }
        }
    }
    Ok((left, right, disp))
}

/// Relative pose of a second view: mostly forward motion with a small yaw.
pub fn forward_motion(forward_m: f64, lateral_m: f64, yaw_deg: f64) -> RigidPose {
    RigidPose::from_axis_angle(
        Vector3::y(),
        yaw_deg.to_radians(),
        Vector3::new(-lateral_m, 0.0, -forward_m),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchSynthesis {
    pub n_points: usize,
    /// Gaussian pixel noise added to frame-B coordinates.
    pub pixel_noise: f64,
    /// Fraction of matches displaced by `moving_offset_px` in frame B (independently moving points).
    pub moving_fraction: f64,
    pub moving_offset_px: f64,
    pub seed: u64,
}

impl Default for MatchSynthesis {
    fn default() -> Self {
        Self {
            n_points: 400,
            pixel_noise: 0.0,
            moving_fraction: 0.0,
            moving_offset_px: 20.0,
            seed: 0,
        }
    }
}

/// Correspondences between the depth map's frame A and a second view at `rel`
/// (`X_B = R X_A + t`), sampled at random valid pixels visible in both views.
pub fn synthesize_matches(
    depth: &RasterMap,
    k: &CameraIntrinsics,
    rel: &RigidPose,
    cfg: &MatchSynthesis,
) -> Vec<Correspondence> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.pixel_noise.max(0.0)).expect("finite sigma");
    let valid: Vec<(usize, usize, f64)> = depth.iter_valid().collect();
    let mut out = Vec::with_capacity(cfg.n_points);
    let mut tries = 0;
    while out.len() < cfg.n_points && tries < 20 * cfg.n_points && !valid.is_empty() {
        tries += 1;
        let (x, y, z) = valid[rng.random_range(0..valid.len())];
        let xb = rel.transform_point(&k.backproject(x as f64, y as f64, z));
        if xb.z <= Z_MIN {
            continue;
        }
        let Some((mut u2, mut v2)) = k.project(&xb) else {
            continue;
        };
        u2 += noise.sample(&mut rng);
        v2 += noise.sample(&mut rng);
        if rng.random::<f64>() < cfg.moving_fraction {
            let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            u2 += cfg.moving_offset_px * a.cos();
            v2 += cfg.moving_offset_px * a.sin();
        }
        if k.contains(u2, v2) {
            out.push(Correspondence::new(x as f64, y as f64, u2, v2));
        }
    }
    out
}

/// Uniform random points in a box in front of the camera.
pub fn random_points(n: usize, seed: u64) -> Vec<Vector3<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            Vector3::new(
                rng.random_range(-4.0..4.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(4.0..20.0),
            )
        })
        .collect()
}
