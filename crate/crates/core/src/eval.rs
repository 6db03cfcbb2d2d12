//! Segmentation and pose metrics.

use crate::error::{Error, Result};
use crate::geometry::{quaternion_angle_deg, quaternion_multiply, Pose, Vector4};
use crate::image::Mask;

/// `|pred ∩ gt| / |pred ∪ gt|`, 1 when both are empty.
pub fn iou_metric(pred: &Mask, gt: &Mask) -> Result<f64> {
    if pred.dims() != gt.dims() {
        return Err(Error::ResolutionMismatch {
            what: "iou".into(),
            expected: gt.dims(),
            found: pred.dims(),
        });
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (&a, &b) in pred.as_slice().iter().zip(gt.as_slice()) {
        inter += (a && b) as usize;
        union += (a || b) as usize;
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

/// Translation distance and rotation angle in degrees between two poses.
pub fn pose_error(pred: &Pose, gt: &Pose) -> Result<(f64, f64)> {
    let t = (pred.translation - gt.translation).norm();
    let r = quaternion_angle_deg(&pred.rotation, &gt.rotation)?;
    Ok((t, r))
}

fn conjugate(q: &Vector4<f64>) -> Vector4<f64> {
    Vector4::new(q[0], -q[1], -q[2], -q[3])
}

/// Rotation errors after removing the unobservable object-frame gauge: the
/// rotation of frame `n` relative to frame 0 is compared between the
/// estimate and the ground truth.
pub fn relative_rotation_errors(pred: &[Pose], gt: &[Pose]) -> Result<Vec<f64>> {
    if pred.len() != gt.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} estimated poses for {} ground-truth poses",
            pred.len(),
            gt.len()
        )));
    }
    let (Some(p0), Some(g0)) = (pred.first(), gt.first()) else {
        return Ok(Vec::new());
    };
    let p0 = conjugate(&p0.unit_rotation()?);
    let g0 = conjugate(&g0.unit_rotation()?);
    pred.iter()
        .zip(gt)
        .map(|(p, g)| {
            let rp = quaternion_multiply(&p.unit_rotation()?, &p0);
            let rg = quaternion_multiply(&g.unit_rotation()?, &g0);
            quaternion_angle_deg(&rp, &rg)
        })
        .collect()
}

/// Sequence-level summary.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct EvalSummary {
    pub frames: usize,
    pub mean_iou: f64,
    pub mean_rotation_error_deg: f64,
    pub mean_translation_error: f64,
    pub failed_frames: usize,
}

pub fn summarize(
    pred_masks: &[Mask],
    gt_masks: &[Mask],
    pred_poses: &[Pose],
    gt_poses: &[Pose],
    failed: &[bool],
) -> Result<EvalSummary> {
    if pred_masks.len() != gt_masks.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predicted masks for {} ground-truth masks",
            pred_masks.len(),
            gt_masks.len()
        )));
    }
    let ious = pred_masks
        .iter()
        .zip(gt_masks)
        .map(|(p, g)| iou_metric(p, g))
        .collect::<Result<Vec<_>>>()?;
    let rot = relative_rotation_errors(pred_poses, gt_poses)?;
    let trans: Vec<f64> = pred_poses
        .iter()
        .zip(gt_poses)
        .map(|(p, g)| (p.translation - g.translation).norm())
        .collect();
    let mean = |v: &[f64]| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    Ok(EvalSummary {
        frames: ious.len(),
        mean_iou: mean(&ious),
        mean_rotation_error_deg: mean(&rot),
        mean_translation_error: mean(&trans),
        failed_frames: failed.iter().filter(|&&f| f).count(),
    })
}
