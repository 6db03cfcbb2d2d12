use crate::error::{Error, Result};
use crate::image::{Mask, ScalarMap};

use super::FrameLoss;

/// Floor of the silhouette mass in the distance term.
pub const SILHOUETTE_EPS: f64 = 1e-8;

/// Soft intersection-over-union `sum(ab) / sum(a + b - ab)`; 1 when both
/// inputs are empty.
pub fn soft_iou(a: &[f64], b: &[f64]) -> f64 {
    let (i, u) = iou_parts(a, b, None);
    if u <= 0.0 {
        1.0
    } else {
        i / u
    }
}

fn iou_parts(a: &[f64], b: &[f64], ignore: Option<&[f64]>) -> (f64, f64) {
    let mut i = 0.0;
    let mut u = 0.0;
    for p in 0..a.len().min(b.len()) {
        let m = ignore.map_or(1.0, |m| m[p]);
        i += m * a[p] * b[p];
        u += m * (a[p] + b[p] - a[p] * b[p]);
    }
    (i, u)
}

/// `(1 - IoU(M, S)) + sum(DT * S) / max(sum S, eps)` for one frame, with the
/// gradient w.r.t. `S`. `dt` is the normalized distance transform of `mask`.
pub fn silhouette_frame(
    silhouette: &ScalarMap,
    mask: &Mask,
    dt: &ScalarMap,
    ignore: Option<&[f64]>,
) -> Result<FrameLoss> {
    let dims = silhouette.dims();
    if mask.dims() != dims || dt.dims() != dims {
        return Err(Error::ResolutionMismatch {
            what: "silhouette buffers".into(),
            expected: dims,
            found: if mask.dims() != dims { mask.dims() } else { dt.dims() },
        });
    }
    let n = dims.0 * dims.1;
    if let Some(m) = ignore {
        if m.len() != n {
            return Err(Error::ShapeMismatch("ignore weights do not match the image".into()));
        }
    }
    let s = silhouette.as_slice();
    let a = mask.to_map();
    let a = a.as_slice();
    let dist = dt.as_slice();
    let (inter, union) = iou_parts(a, s, ignore);
    let iou = if union <= 0.0 { 1.0 } else { inter / union };

    let mut mass = 0.0;
    let mut dsum = 0.0;
    for p in 0..n {
        let m = ignore.map_or(1.0, |m| m[p]);
        mass += m * s[p];
        dsum += m * dist[p] * s[p];
    }
    let denom = mass.max(SILHOUETTE_EPS);
    let value = (1.0 - iou) + dsum / denom;

    let mut grad_silhouette = vec![0.0; n];
    for p in 0..n {
        let m = ignore.map_or(1.0, |m| m[p]);
        if m == 0.0 {
            continue;
        }
        let mut g = 0.0;
        if union > 0.0 {
            let di = m * a[p];
            let du = m * (1.0 - a[p]);
            g -= (di * union - inter * du) / (union * union);
        }
        g += m * dist[p] / denom;
        if mass > SILHOUETTE_EPS {
            g -= m * dsum / (mass * mass);
        }
        grad_silhouette[p] = g;
    }
    Ok(FrameLoss {
        value,
        degenerate: mass <= 0.0,
        grad_features: Vec::new(),
        grad_silhouette,
    })
}
