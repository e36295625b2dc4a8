//! Pinhole intrinsics, rigid poses and point projection.
//!
//! Image convention used throughout the crate: the origin is the top-left
//! pixel, `u` grows along the image width and `v` along the height, and pixel
//! centers sit at integer coordinates. A point projects inside the image when
//! `0 <= u <= width - 1` and `0 <= v <= height - 1`.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points closer than this to the camera plane are not projected.
pub const Z_MIN: f64 = 1e-3;

const POSE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0 && self.fx.is_finite() && self.fy.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "focal lengths must be positive, got fx={} fy={}",
                self.fx, self.fy
            )));
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64) {
            return Err(Error::InvalidInput(format!(
                "cx={} outside [0, {})",
                self.cx, self.width
            )));
        }
        if !(self.cy >= 0.0 && self.cy < self.height as f64) {
            return Err(Error::InvalidInput(format!(
                "cy={} outside [0, {})",
                self.cy, self.height
            )));
        }
        Ok(())
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && v >= 0.0 && u <= (self.width - 1) as f64 && v <= (self.height - 1) as f64
    }

    /// Pinhole projection without bounds checks. `None` when `z <= Z_MIN`.
    pub fn project(&self, p: &Vector3<f64>) -> Option<(f64, f64)> {
        if p.z <= Z_MIN {
            return None;
        }
        Some((self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy))
    }

    pub fn backproject(&self, u: f64, v: f64, depth: f64) -> Vector3<f64> {
        Vector3::new(
            (u - self.cx) / self.fx * depth,
            (v - self.cy) / self.fy * depth,
            depth,
        )
    }

    /// Viewing ray through a pixel, with unit z component.
    pub fn ray(&self, u: f64, v: f64) -> Vector3<f64> {
        Vector3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.fx, 0.0, self.cx, //
            0.0, self.fy, self.cy, //
            0.0, 0.0, 1.0,
        )
    }
}

/// A projected point together with the index of the 3D point it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedPoint {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
    pub index: usize,
}

/// Projects camera-frame points, dropping those behind the camera or outside the image.
pub fn project_points(points: &[Vector3<f64>], k: &CameraIntrinsics) -> Vec<ProjectedPoint> {
    points
        .iter()
        .enumerate()
        .filter_map(|(index, p)| {
            let (u, v) = k.project(p)?;
            k.contains(u, v).then_some(ProjectedPoint {
                u,
                v,
                depth: p.z,
                index,
            })
        })
        .collect()
}

/// SE(3) transform `x -> R x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidPose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl RigidPose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let orth = (rotation.transpose() * rotation - Matrix3::identity())
            .abs()
            .max();
        let det = rotation.determinant();
        if !(orth <= POSE_TOL && (det - 1.0).abs() <= POSE_TOL) {
            return Err(Error::InvalidInput(format!(
                "rotation is not orthonormal (|RtR - I|max = {orth:e}, det = {det})"
            )));
        }
        if !translation.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidInput("non-finite translation".into()));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    /// Projects an approximately orthonormal matrix onto SO(3) first.
    ///
    /// Pose files written with a handful of significant digits are off by
    /// ~1e-7, which fails the strict check in [`RigidPose::new`].
    pub fn new_orthonormalized(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let orth = (rotation.transpose() * rotation - Matrix3::identity())
            .abs()
            .max();
        if orth > 1e-3 {
            return Err(Error::InvalidInput(format!(
                "rotation too far from orthonormal (|RtR - I|max = {orth:e})"
            )));
        }
        let svd = rotation.svd(true, true);
        let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
        let mut r = u * vt;
        if r.determinant() < 0.0 {
            return Err(Error::InvalidInput(
                "rotation has negative determinant".into(),
            ));
        }
        // one Newton step tightens orthonormality to machine precision
        r = 0.5 * (r + r.transpose().try_inverse().unwrap_or(r));
        Self::new(r, translation)
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: t,
        }
    }

    /// Rotation of `angle_rad` about `axis` (need not be normalized), plus a translation.
    pub fn from_axis_angle(axis: Vector3<f64>, angle_rad: f64, t: Vector3<f64>) -> Self {
        let axis = nalgebra::Unit::new_normalize(axis);
        let r = nalgebra::Rotation3::from_axis_angle(&axis, angle_rad);
        Self {
            rotation: *r.matrix(),
            translation: t,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidPose) -> RigidPose {
        RigidPose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidPose {
        let rt = self.rotation.transpose();
        RigidPose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn transform_point(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * x + self.translation
    }

    pub fn rotation_angle_deg(&self) -> f64 {
        let c = ((self.rotation.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
        c.acos().to_degrees()
    }

    pub fn translation_norm_m(&self) -> f64 {
        self.translation.norm()
    }

    /// Row-major 3x4 `[R | t]`.
    pub fn to_rows(&self) -> [f64; 12] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[(0, 0)],
            r[(0, 1)],
            r[(0, 2)],
            t.x,
            r[(1, 0)],
            r[(1, 1)],
            r[(1, 2)],
            t.y,
            r[(2, 0)],
            r[(2, 1)],
            r[(2, 2)],
            t.z,
        ]
    }
}

pub fn compose_pose(a: &RigidPose, b: &RigidPose) -> RigidPose {
    a.compose(b)
}

pub fn invert_pose(p: &RigidPose) -> RigidPose {
    p.inverse()
}

pub fn transform_point(p: &RigidPose, x: &Vector3<f64>) -> Vector3<f64> {
    p.transform_point(x)
}
