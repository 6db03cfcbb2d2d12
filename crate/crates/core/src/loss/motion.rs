use crate::error::Result;
use crate::geometry::{tangent_project, Pose, Vector3, Vector4};

/// Per-frame motion allowances.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct MotionThresholds {
    /// Translation per frame, world units.
    pub translation: f64,
    /// Rotation per frame, degrees.
    pub rotation_deg: f64,
}

impl Default for MotionThresholds {
    fn default() -> Self {
        Self {
            translation: 0.1,
            rotation_deg: 30.0,
        }
    }
}

/// Motion penalty with gradients for both poses (raw quaternion parameters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionLoss {
    pub value: f64,
    pub grad_current_translation: Vector3<f64>,
    pub grad_current_rotation: Vector4<f64>,
    pub grad_anchor_translation: Vector3<f64>,
    pub grad_anchor_rotation: Vector4<f64>,
}

/// Hinge penalty on the per-frame translation and rotation rates between the
/// current pose and an anchor pose `frame_gap` frames apart.
///
/// `max(0, |T_a - T_n| / gap - t) + max(0, angle(q_a, q_n) / gap - r)` where
/// the angle `2 acos |<q_a, q_n>|` is in degrees.
pub fn motion_loss(
    current: &Pose,
    anchor: &Pose,
    frame_gap: usize,
    thresholds: &MotionThresholds,
) -> Result<MotionLoss> {
    let gap = frame_gap.max(1) as f64;
    let qn = current.unit_rotation()?;
    let qa = anchor.unit_rotation()?;
    let mut out = MotionLoss {
        value: 0.0,
        grad_current_translation: Vector3::zeros(),
        grad_current_rotation: Vector4::zeros(),
        grad_anchor_translation: Vector3::zeros(),
        grad_anchor_rotation: Vector4::zeros(),
    };

    let dt = current.translation - anchor.translation;
    let dist = dt.norm();
    let t_excess = dist / gap - thresholds.translation;
    if t_excess > 0.0 {
        out.value += t_excess;
        if dist > 0.0 {
            let g = dt / (dist * gap);
            out.grad_current_translation = g;
            out.grad_anchor_translation = -g;
        }
    }

    let dot = qn.dot(&qa);
    let c = dot.abs().min(1.0);
    let angle = 2.0 * c.acos().to_degrees();
    let r_excess = angle / gap - thresholds.rotation_deg;
    if r_excess > 0.0 {
        out.value += r_excess;
        if c < 1.0 {
            // d angle / d dot
            let g_dot = -2.0f64.to_degrees() / (1.0 - c * c).sqrt() * dot.signum() / gap;
            out.grad_current_rotation = tangent_project(&current.rotation, &(qa * g_dot));
            out.grad_anchor_rotation = tangent_project(&anchor.rotation, &(qn * g_dot));
        }
    }
    Ok(out)
}
