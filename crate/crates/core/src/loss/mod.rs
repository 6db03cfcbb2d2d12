//! Objective terms and their gradients.
//!
//! Per-frame image terms return gradients w.r.t. the rendered buffers; the
//! pose and geometry terms return gradients w.r.t. their parameters. Frame
//! terms are averaged over the frames taking part in an optimization step.

mod appearance;
mod distance_transform;
mod motion;
mod regularizers;
mod silhouette;

pub use appearance::{appearance_frame, cauchy, cauchy_derivative, CAUCHY_SCALE};
pub use distance_transform::{distance_transform, squared_distance_to_foreground, DistanceMap, NO_FOREGROUND};
pub use motion::{motion_loss, MotionLoss, MotionThresholds};
pub use regularizers::{laplacian_loss, tv_loss, LaplacianLoss, TvLoss};
pub use silhouette::{silhouette_frame, soft_iou, SILHOUETTE_EPS};

use crate::error::{Error, Result};

/// Value of an image term on one frame with gradients w.r.t. the rendered
/// feature image (`H*W*D`) and soft silhouette (`H*W`).
#[derive(Debug, Clone)]
pub struct FrameLoss {
    pub value: f64,
    /// The rendered silhouette had no mass; the value is defined as 0.
    pub degenerate: bool,
    pub grad_features: Vec<f64>,
    pub grad_silhouette: Vec<f64>,
}

/// Mean of per-frame values, `(|K| + 1)^-1 * sum`. Returns `(mu, value)`.
pub fn frame_average(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let (mut n, mut sum) = (0usize, 0.0);
    for v in values {
        n += 1;
        sum += v;
    }
    if n == 0 {
        return (0.0, 0.0);
    }
    let mu = 1.0 / n as f64;
    (mu, mu * sum)
}

/// Weights of the objective terms.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub appearance: f64,
    pub silhouette: f64,
    pub motion: f64,
    pub laplacian: f64,
    pub tv: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            appearance: 1.0,
            silhouette: 1.0,
            motion: 1.0,
            laplacian: 1000.0,
            tv: 0.001,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in self.named() {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::Config(format!(
                    "loss weight {name} must be finite and nonnegative, got {w}"
                )));
            }
        }
        Ok(())
    }

    fn named(&self) -> [(&'static str, f64); 5] {
        [
            ("appearance", self.appearance),
            ("silhouette", self.silhouette),
            ("motion", self.motion),
            ("laplacian", self.laplacian),
            ("tv", self.tv),
        ]
    }
}

/// Unweighted values of the five objective terms.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LossTerms {
    pub appearance: f64,
    pub silhouette: f64,
    pub motion: f64,
    pub laplacian: f64,
    pub tv: f64,
}

impl LossTerms {
    fn named(&self) -> [(&'static str, f64); 5] {
        [
            ("appearance", self.appearance),
            ("silhouette", self.silhouette),
            ("motion", self.motion),
            ("laplacian", self.laplacian),
            ("tv", self.tv),
        ]
    }
}

/// Weighted sum of the terms. Fails on the first non-finite term.
pub fn total_loss(terms: &LossTerms, weights: &LossWeights) -> Result<f64> {
    let mut total = 0.0;
    for ((name, v), (_, w)) in terms.named().into_iter().zip(weights.named()) {
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("{name} loss is {v}")));
        }
        total += w * v;
    }
    Ok(total)
}
