use crate::error::{Error, Result};
use crate::features::FeatureImage;
use crate::image::ScalarMap;

use super::FrameLoss;

pub const CAUCHY_SCALE: f64 = 0.25;

/// Cauchy penalty `log(1 + (r/c)²)`.
#[inline]
pub fn cauchy(r: f64, c: f64) -> f64 {
    (r / c).powi(2).ln_1p()
}

#[inline]
pub fn cauchy_derivative(r: f64, c: f64) -> f64 {
    2.0 * r / (c * c + r * r)
}

/// Silhouette-weighted mean Cauchy penalty of the masked feature residual
/// `S * (rendered - observed)`, taken per channel:
///
/// `sum_p S_p sum_c cauchy(S_p (R_pc - F_pc)) / (D sum_p S_p)`.
///
/// `ignore` optionally scales each pixel's participation (0 removes it).
pub fn appearance_frame(
    rendered: &FeatureImage,
    silhouette: &ScalarMap,
    observed: &FeatureImage,
    ignore: Option<&[f64]>,
) -> Result<FrameLoss> {
    let (w, h) = rendered.dims();
    let d = rendered.channels();
    if observed.dims() != (w, h) || silhouette.dims() != (w, h) {
        return Err(Error::ResolutionMismatch {
            what: "appearance buffers".into(),
            expected: (w, h),
            found: if observed.dims() != (w, h) {
                observed.dims()
            } else {
                silhouette.dims()
            },
        });
    }
    if observed.channels() != d {
        return Err(Error::ChannelMismatch {
            expected: d,
            found: observed.channels(),
        });
    }
    if let Some(m) = ignore {
        if m.len() != w * h {
            return Err(Error::ShapeMismatch("ignore weights do not match the image".into()));
        }
    }
    let n = w * h;
    let r = rendered.as_slice();
    let f = observed.as_slice();
    let s = silhouette.as_slice();
    let weight = |p: usize| s[p] * ignore.map_or(1.0, |m| m[p]);

    let mut per_pixel = vec![0.0; n];
    let mut mass = 0.0;
    let mut num = 0.0;
    for p in 0..n {
        if ignore.is_some_and(|m| m[p] == 0.0) {
            continue;
        }
        let wp = weight(p);
        let mut a = 0.0;
        for c in 0..d {
            a += cauchy(s[p] * (r[p * d + c] - f[p * d + c]), CAUCHY_SCALE);
        }
        a /= d as f64;
        per_pixel[p] = a;
        mass += wp;
        num += wp * a;
    }

    let mut grad_features = vec![0.0; n * d];
    let mut grad_silhouette = vec![0.0; n];
    if mass <= 0.0 {
        return Ok(FrameLoss {
            value: 0.0,
            degenerate: true,
            grad_features,
            grad_silhouette,
        });
    }
    let value = num / mass;
    for p in 0..n {
        let m = ignore.map_or(1.0, |m| m[p]);
        if m == 0.0 {
            continue;
        }
        let wp = weight(p);
        let mut da_ds = 0.0;
        for c in 0..d {
            let diff = r[p * d + c] - f[p * d + c];
            let g = cauchy_derivative(s[p] * diff, CAUCHY_SCALE) / d as f64;
            grad_features[p * d + c] = wp * g * s[p] / mass;
            da_ds += g * diff;
        }
        // d/dS of wp * a_p / mass with wp = m * S
        grad_silhouette[p] = (m * per_pixel[p] + wp * da_ds - m * value) / mass;
    }
    Ok(FrameLoss {
        value,
        degenerate: false,
        grad_features,
        grad_silhouette,
    })
}
