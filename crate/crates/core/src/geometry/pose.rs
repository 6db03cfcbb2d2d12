use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rigid object-to-camera transform: `x_cam = R(q) * x_obj + t`.
///
/// The quaternion is stored in `(w, x, y, z)` order and may drift off the
/// unit sphere during optimization; every consumer normalizes it first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub translation: Vector3<f64>,
    pub rotation: Vector4<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            translation: Vector3::zeros(),
            rotation: Vector4::new(1.0, 0.0, 0.0, 0.0),
        }
    }

    pub fn new(translation: Vector3<f64>, rotation: Vector4<f64>) -> Self {
        Self { translation, rotation }
    }

    /// Unit quaternion of this pose.
    pub fn unit_rotation(&self) -> Result<Vector4<f64>> {
        normalize_quaternion(&self.rotation)
    }

    pub fn rotation_matrix(&self) -> Result<Matrix3<f64>> {
        Ok(rotation_matrix(&self.unit_rotation()?))
    }

    /// Rescale the quaternion to unit length in place.
    pub fn normalize(&mut self) -> Result<()> {
        self.rotation = normalize_quaternion(&self.rotation)?;
        Ok(())
    }
}

pub fn normalize_quaternion(q: &Vector4<f64>) -> Result<Vector4<f64>> {
    let n = q.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::ZeroQuaternion);
    }
    Ok(q / n)
}

/// Rotation matrix of a unit quaternion `(w, x, y, z)`.
pub fn rotation_matrix(q: &Vector4<f64>) -> Matrix3<f64> {
    let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

/// Pulls a gradient w.r.t. the entries of [`rotation_matrix`] back onto the
/// quaternion components, treating the matrix entries as polynomials of
/// `(w, x, y, z)`.
pub fn rotation_matrix_vjp(q: &Vector4<f64>, g: &Matrix3<f64>) -> Vector4<f64> {
    let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
    let gw = 2.0 * (-z * g[(0, 1)] + y * g[(0, 2)] + z * g[(1, 0)] - x * g[(1, 2)] - y * g[(2, 0)] + x * g[(2, 1)]);
    let gx = 2.0
        * (y * g[(0, 1)] + z * g[(0, 2)] + y * g[(1, 0)] - 2.0 * x * g[(1, 1)] - w * g[(1, 2)]
            + z * g[(2, 0)]
            + w * g[(2, 1)]
            - 2.0 * x * g[(2, 2)]);
    let gy = 2.0
        * (-2.0 * y * g[(0, 0)] + x * g[(0, 1)] + w * g[(0, 2)] + x * g[(1, 0)] + z * g[(1, 2)] - w * g[(2, 0)]
            + z * g[(2, 1)]
            - 2.0 * y * g[(2, 2)]);
    let gz = 2.0
        * (-2.0 * z * g[(0, 0)] - w * g[(0, 1)] + x * g[(0, 2)] + w * g[(1, 0)] - 2.0 * z * g[(1, 1)]
            + y * g[(1, 2)]
            + x * g[(2, 0)]
            + y * g[(2, 1)]);
    Vector4::new(gw, gx, gy, gz)
}

/// Chain rule through `q / |q|`: maps a gradient w.r.t. the normalized
/// quaternion to the raw parameter, which lies in the tangent space of the
/// sphere at `q`.
pub fn tangent_project(q_raw: &Vector4<f64>, g_unit: &Vector4<f64>) -> Vector4<f64> {
    let n = q_raw.norm();
    let qh = q_raw / n;
    (g_unit - qh * qh.dot(g_unit)) / n
}

/// 4x4 homogeneous transform of a pose.
pub fn pose_to_matrix(pose: &Pose) -> Result<Matrix4<f64>> {
    let r = pose.rotation_matrix()?;
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&pose.translation);
    Ok(m)
}

/// Geodesic angle between two rotations in degrees, `2 acos |<q1, q2>|`.
pub fn quaternion_angle_deg(a: &Vector4<f64>, b: &Vector4<f64>) -> Result<f64> {
    let a = normalize_quaternion(a)?;
    let b = normalize_quaternion(b)?;
    let d = a.dot(&b).abs().min(1.0);
    Ok((2.0 * d.acos()).to_degrees())
}

/// Unit quaternion of a rotation by `angle` radians about `axis`.
pub fn quaternion_from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Vector4<f64> {
    let n = axis.norm();
    if n == 0.0 {
        return Vector4::new(1.0, 0.0, 0.0, 0.0);
    }
    let a = axis / n;
    let (s, c) = (0.5 * angle).sin_cos();
    Vector4::new(c, a.x * s, a.y * s, a.z * s)
}

/// Hamilton product `a * b` (rotation `b` applied first).
pub fn quaternion_multiply(a: &Vector4<f64>, b: &Vector4<f64>) -> Vector4<f64> {
    let (aw, ax, ay, az) = (a[0], a[1], a[2], a[3]);
    let (bw, bx, by, bz) = (b[0], b[1], b[2], b[3]);
    Vector4::new(
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )
}
