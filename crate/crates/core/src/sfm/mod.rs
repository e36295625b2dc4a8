//! Two-view triangulation with known relative pose.
//!
//! Frame A is the earlier image and frame B the target image whose disparity
//! map gets rescaled. The relative pose `rel` maps frame-A camera coordinates
//! into frame B: `X_B = R X_A + t`, so the center of camera A sits at `t` in
//! frame B and `|t|` is the baseline.

mod features;

pub use features::{detect_and_match, harris_corners, Corner, MatchConfig};

use nalgebra::{Matrix4, Vector3};
use serde::{Deserialize, Serialize};

use crate::camera::{project_points, CameraIntrinsics, RigidPose};
use crate::error::{Error, Result};
use crate::refpoint::{PointSource, ReferencePoint};

/// A pixel in frame A matched to a pixel in frame B.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub u1: f64,
    pub v1: f64,
    pub u2: f64,
    pub v2: f64,
    pub score: Option<f64>,
}

impl Correspondence {
    pub fn new(u1: f64, v1: f64, u2: f64, v2: f64) -> Self {
        Self {
            u1,
            v1,
            u2,
            v2,
            score: None,
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.u1, self.v1, self.u2, self.v2]
            .iter()
            .all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateMode {
    TranslationOnly,
    TranslationOrRotation,
    TranslationAndRotation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateConfig {
    pub min_translation_m: f64,
    pub rotation_threshold_deg: f64,
    pub gate_mode: GateMode,
}

impl GateConfig {
    /// 1.5 m translation, as used for KITTI-like driving sequences.
    pub fn kitti() -> Self {
        Self {
            min_translation_m: 1.5,
            rotation_threshold_deg: 5.0,
            gate_mode: GateMode::TranslationOnly,
        }
    }

    /// 2 m translation, as used for DDAD-like sequences.
    pub fn ddad() -> Self {
        Self {
            min_translation_m: 2.0,
            ..Self::kitti()
        }
    }
}

impl Default for GateConfig {
    fn default() -> Self {
        Self::kitti()
    }
}

/// Decides whether a frame pair has enough motion to triangulate.
pub fn gate_pair(rel: &RigidPose, cfg: &GateConfig) -> bool {
    let t_ok = rel.translation_norm_m() >= cfg.min_translation_m;
    let r_ok = rel.rotation_angle_deg() >= cfg.rotation_threshold_deg;
    match cfg.gate_mode {
        GateMode::TranslationOnly => t_ok,
        GateMode::TranslationOrRotation => t_ok || r_ok,
        GateMode::TranslationAndRotation => t_ok && r_ok,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangulationConfig {
    pub max_reprojection_px: f64,
    pub min_parallax_deg: f64,
}

impl Default for TriangulationConfig {
    fn default() -> Self {
        Self {
            max_reprojection_px: 2.0,
            min_parallax_deg: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangulatedPoint {
    /// Frame-B camera coordinates.
    pub point: Vector3<f64>,
    /// Index of the correspondence it came from.
    pub index: usize,
    pub parallax_deg: f64,
}

/// Angle between the rays from both camera centers to `x` (frame-B coordinates).
pub fn parallax_deg(x: &Vector3<f64>, rel: &RigidPose) -> f64 {
    let ray_b = x;
    let ray_a = x - rel.translation();
    let c = ray_b.dot(&ray_a) / (ray_b.norm() * ray_a.norm());
    c.clamp(-1.0, 1.0).acos().to_degrees()
}

fn dlt_point(xa: &Vector3<f64>, xb: &Vector3<f64>, b_to_a: &RigidPose) -> Option<Vector3<f64>> {
    // normalized image coordinates; camera B is [I | 0], camera A is [R | t]
    let r = b_to_a.rotation();
    let t = b_to_a.translation();
    let pa = [
        [r[(0, 0)], r[(0, 1)], r[(0, 2)], t.x],
        [r[(1, 0)], r[(1, 1)], r[(1, 2)], t.y],
        [r[(2, 0)], r[(2, 1)], r[(2, 2)], t.z],
    ];
    let pb = [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
    ];
    let mut a = Matrix4::zeros();
    for c in 0..4 {
        a[(0, c)] = xa.x * pa[2][c] - pa[0][c];
        a[(1, c)] = xa.y * pa[2][c] - pa[1][c];
        a[(2, c)] = xb.x * pb[2][c] - pb[0][c];
        a[(3, c)] = xb.y * pb[2][c] - pb[1][c];
    }
    let svd = a.svd(false, true);
    let vt = svd.v_t?;
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))?;
    let h = vt.row(imin);
    if h[3].abs() < 1e-12 * h.norm() {
        return None;
    }
    Some(Vector3::new(h[0] / h[3], h[1] / h[3], h[2] / h[3]))
}

/// Linear (DLT) triangulation of each match, keeping points that are in
/// front of both cameras, reproject within `max_reprojection_px` in both
/// frames and subtend at least `min_parallax_deg`. Input order is preserved.
pub fn triangulate(
    matches: &[Correspondence],
    k: &CameraIntrinsics,
    rel: &RigidPose,
    cfg: &TriangulationConfig,
) -> Result<Vec<TriangulatedPoint>> {
    let b_to_a = rel.inverse();
    let mut out = Vec::new();
    for (index, m) in matches.iter().enumerate() {
        if !m.is_finite() {
            continue;
        }
        let xa = k.ray(m.u1, m.v1);
        let xb = k.ray(m.u2, m.v2);
        let Some(point) = dlt_point(&xa, &xb, &b_to_a) else {
            continue;
        };
        let in_a = b_to_a.transform_point(&point);
        if !(point.z > 0.0 && in_a.z > 0.0) {
            continue;
        }
        let reproj_ok = |p: &Vector3<f64>, u: f64, v: f64| {
            k.project(p)
                .is_some_and(|(pu, pv)| (pu - u).hypot(pv - v) <= cfg.max_reprojection_px)
        };
        if !(reproj_ok(&in_a, m.u1, m.v1) && reproj_ok(&point, m.u2, m.v2)) {
            continue;
        }
        let parallax = parallax_deg(&point, rel);
        if parallax < cfg.min_parallax_deg {
            continue;
        }
        out.push(TriangulatedPoint {
            point,
            index,
            parallax_deg: parallax,
        });
    }
    if out.is_empty() {
        return Err(Error::EmptyResult);
    }
    Ok(out)
}

/// Projects frame-B points into the target image as reference points.
pub fn sfm_refpoints(points: &[Vector3<f64>], k: &CameraIntrinsics) -> Result<Vec<ReferencePoint>> {
    project_points(points, k)
        .into_iter()
        .map(|p| ReferencePoint::new(p.u, p.v, p.depth, PointSource::Sfm))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn kitti_k() -> CameraIntrinsics {
        CameraIntrinsics::new(718.0, 718.0, 607.0, 185.0, 1242, 375).unwrap()
    }

    fn project_pair(
        x_b: &Vector3<f64>,
        k: &CameraIntrinsics,
        rel: &RigidPose,
    ) -> Option<Correspondence> {
        let x_a = rel.inverse().transform_point(x_b);
        let (u1, v1) = k.project(&x_a)?;
        let (u2, v2) = k.project(x_b)?;
        (k.contains(u1, v1) && k.contains(u2, v2)).then_some(Correspondence::new(u1, v1, u2, v2))
    }

    #[test]
    fn gate_examples() {
        let cfg = GateConfig::kitti();
        let t2 = RigidPose::from_translation(Vector3::new(0.0, 0.0, 2.0));
        assert!(gate_pair(&t2, &cfg));
        let small = RigidPose::from_axis_angle(
            Vector3::y(),
            10f64.to_radians(),
            Vector3::new(0.1, 0.0, 0.0),
        );
        assert!(!gate_pair(&small, &cfg));
        assert!(gate_pair(
            &small,
            &GateConfig {
                gate_mode: GateMode::TranslationOrRotation,
                ..cfg
            }
        ));
        let both = RigidPose::from_axis_angle(
            Vector3::y(),
            6f64.to_radians(),
            Vector3::new(1.6, 0.0, 0.0),
        );
        let and = GateConfig {
            gate_mode: GateMode::TranslationAndRotation,
            ..cfg
        };
        assert!(gate_pair(&both, &and));
        assert!(!gate_pair(&t2, &and));
    }

    #[test]
    fn gate_monotone_in_threshold() {
        let p = RigidPose::from_translation(Vector3::new(1.0, 0.5, 1.2));
        let n = p.translation_norm_m();
        let at = |t: f64| {
            gate_pair(
                &p,
                &GateConfig {
                    min_translation_m: t,
                    ..GateConfig::kitti()
                },
            )
        };
        assert!(at(n));
        for t in [0.1, 0.5, n * 0.99] {
            assert!(at(t));
        }
        assert!(!at(n * 1.01));
    }

    #[test]
    fn round_trip_on_axis_point() {
        let k = CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0, 640, 480).unwrap();
        let rel = RigidPose::from_translation(Vector3::new(1.0, 0.0, 0.0));
        let target = Vector3::new(0.0, 0.0, 10.0);
        let m = project_pair(&target, &k, &rel).unwrap();
        let pts = triangulate(&[m], &k, &rel, &TriangulationConfig::default()).unwrap();
        assert_abs_diff_eq!(pts[0].point, target, epsilon = 1e-6);
    }

    #[test]
    fn epipolar_violation_rejected() {
        let k = CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0, 640, 480).unwrap();
        let rel = RigidPose::from_translation(Vector3::new(1.0, 0.0, 0.0));
        let mut m = project_pair(&Vector3::new(0.5, 0.2, 8.0), &k, &rel).unwrap();
        let good = m;
        m.v1 += 20.0;
        assert!(matches!(
            triangulate(&[m], &k, &rel, &TriangulationConfig::default()),
            Err(Error::EmptyResult)
        ));
        let pts = triangulate(&[m, good], &k, &rel, &TriangulationConfig::default()).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].index, 1);
    }

    #[test]
    fn behind_camera_rejected() {
        let k = CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0, 640, 480).unwrap();
        let rel = RigidPose::from_translation(Vector3::new(1.0, 0.0, 0.0));
        // rays that only meet behind both cameras
        let m = project_pair(&Vector3::new(0.0, 0.0, 10.0), &k, &rel).unwrap();
        let swapped = Correspondence::new(m.u2, m.v2, m.u1, m.v1);
        assert!(triangulate(&[swapped], &k, &rel, &TriangulationConfig::default()).is_err());
    }

    // Midpoint of the common perpendicular of the two viewing rays.
    fn midpoint(m: &Correspondence, k: &CameraIntrinsics, rel: &RigidPose) -> Vector3<f64> {
        let c_b = Vector3::zeros();
        let d_b = k.ray(m.u2, m.v2);
        let c_a = *rel.translation();
        let d_a = rel.rotation() * k.ray(m.u1, m.v1);
        let w0 = c_b - c_a;
        let (a, b, c) = (d_b.dot(&d_b), d_b.dot(&d_a), d_a.dot(&d_a));
        let (d, e) = (d_b.dot(&w0), d_a.dot(&w0));
        let den = a * c - b * b;
        let s = (b * e - c * d) / den;
        let t = (a * e - b * d) / den;
        0.5 * ((c_b + s * d_b) + (c_a + t * d_a))
    }

    #[test]
    fn fifty_points_against_midpoint_oracle() {
        let k = kitti_k();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rel = RigidPose::from_axis_angle(
            Vector3::new(0.1, 1.0, 0.05),
            3f64.to_radians(),
            Vector3::new(-1.8, 0.1, 0.87).normalize() * 2.0,
        );
        let mut matches = Vec::new();
        let mut truth = Vec::new();
        while matches.len() < 50 {
            let z: f64 = rng.random_range(2.0..40.0);
            let u = rng.random_range(0.0..1241.0);
            let v = rng.random_range(0.0..374.0);
            let x = k.backproject(u, v, z);
            if let Some(m) = project_pair(&x, &k, &rel) {
                matches.push(m);
                truth.push(x);
            }
        }
        let cfg = TriangulationConfig::default();
        let pts = triangulate(&matches, &k, &rel, &cfg).unwrap();
        let kept: Vec<usize> = pts.iter().map(|p| p.index).collect();
        for (i, m) in matches.iter().enumerate() {
            let oracle = midpoint(m, &k, &rel);
            assert!((oracle - truth[i]).norm() < 1e-6);
            let low_parallax = parallax_deg(&oracle, &rel) < cfg.min_parallax_deg;
            assert_eq!(kept.contains(&i), !low_parallax, "match {i}");
        }
        for p in &pts {
            assert!((p.point - truth[p.index]).norm() < 1e-6);
            assert!((p.point - midpoint(&matches[p.index], &k, &rel)).norm() < 1e-6);
        }
    }

    #[test]
    fn refpoints_are_projections() {
        let k = CameraIntrinsics::new(100.0, 100.0, 50.0, 50.0, 100, 100).unwrap();
        let r = sfm_refpoints(
            &[Vector3::new(0.0, 0.0, 4.0), Vector3::new(9.0, 0.0, 1.0)],
            &k,
        )
        .unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(
            (r[0].u, r[0].v, r[0].depth, r[0].source),
            (50.0, 50.0, 4.0, PointSource::Sfm)
        );
    }
}
