use nalgebra::{Matrix2x3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_FOV_Y_DEG: f64 = 45.0;

/// Fixed pinhole camera at the origin looking down `-z`, `+y` up.
///
/// The principal point is the image centre; pixel `(u, v)` uses continuous
/// coordinates where the top-left image corner is `(0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub width: usize,
    pub height: usize,
    pub fov_y_deg: f64,
}

/// A projected point: pixel position and positive depth along the view axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
}

impl Camera {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            fov_y_deg: DEFAULT_FOV_Y_DEG,
        }
    }

    /// Focal length in pixels (identical on both axes).
    pub fn focal(&self) -> f64 {
        0.5 * self.height as f64 / (0.5 * self.fov_y_deg.to_radians()).tan()
    }

    pub fn principal_point(&self) -> (f64, f64) {
        (0.5 * self.width as f64, 0.5 * self.height as f64)
    }

    /// Pixels-to-normalized-device-units factor. NDC spans `[-1, 1]` over the
    /// image height and uses the same scale horizontally.
    pub fn ndc_per_pixel(&self) -> f64 {
        2.0 / self.height as f64
    }

    pub fn project(&self, p: &Vector3<f64>) -> Result<Projection> {
        let depth = -p.z;
        if !(depth > 0.0) {
            return Err(Error::BehindCamera { depth });
        }
        Ok(self.project_unchecked(p))
    }

    #[inline]
    pub(crate) fn project_unchecked(&self, p: &Vector3<f64>) -> Projection {
        let depth = -p.z;
        let f = self.focal();
        let (cx, cy) = self.principal_point();
        Projection {
            u: cx + f * p.x / depth,
            v: cy - f * p.y / depth,
            depth,
        }
    }

    /// Jacobian of `(u, v)` w.r.t. the camera-space point.
    #[inline]
    pub(crate) fn projection_jacobian(&self, p: &Vector3<f64>) -> Matrix2x3<f64> {
        let f = self.focal();
        let d = -p.z;
        let inv = 1.0 / d;
        Matrix2x3::new(f * inv, 0.0, f * p.x * inv * inv, 0.0, -f * inv, -f * p.y * inv * inv)
    }

    /// Inverse of [`Camera::project`] for a pixel and depth.
    pub fn unproject(&self, u: f64, v: f64, depth: f64) -> Vector3<f64> {
        let f = self.focal();
        let (cx, cy) = self.principal_point();
        Vector3::new((u - cx) * depth / f, -(v - cy) * depth / f, -depth)
    }
}
