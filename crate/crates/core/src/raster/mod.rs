//! Differentiable triangle rasterizer.
//!
//! Appearance uses a hard z-buffer: every covered pixel takes the front-most
//! face, its screen-space barycentrics interpolate the face-varying texture
//! coordinates, and the texture is sampled bilinearly. Gradients of the
//! appearance flow through the texture weights and the barycentrics.
//!
//! The silhouette is soft. Covered pixels have silhouette 1; an uncovered
//! pixel `p` aggregates the faces near it as `1 - prod_f (1 - w_f(p))`, where
//! `w_f` decays as `exp(-d²/sigma)` with `d` the distance from `p` to face
//! `f` in normalized device units (2 / image height per pixel). The kernel
//! is shifted and rescaled so it reaches exactly zero at `cutoff * sqrt(sigma)`
//! and remains continuous there.

mod backward;
mod forward;

pub use backward::{render_backward, RenderGradients};
pub use forward::render;

use crate::features::FeatureImage;
use crate::geometry::Vector3;
use crate::image::ScalarMap;

/// Tuning of the soft silhouette and the clipping rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderConfig {
    /// Squared-distance scale of the silhouette kernel, in NDC units².
    pub sigma: f64,
    /// Kernel support radius in multiples of `sqrt(sigma)`.
    pub cutoff: f64,
    /// Faces with a vertex closer than this depth are not drawn.
    pub near: f64,
    pub cull_backfaces: bool,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            sigma: 1e-4,
            cutoff: 3.0,
            near: 1e-3,
            cull_backfaces: false,
        }
    }
}

impl RenderConfig {
    /// Kernel value for a squared NDC distance.
    #[inline]
    pub(crate) fn kernel(&self, d2: f64) -> f64 {
        let floor = (-self.cutoff * self.cutoff).exp();
        if d2 >= self.cutoff * self.cutoff * self.sigma {
            return 0.0;
        }
        ((-d2 / self.sigma).exp() - floor) / (1.0 - floor)
    }

    /// Derivative of [`RenderConfig::kernel`] w.r.t. the squared distance.
    #[inline]
    pub(crate) fn kernel_derivative(&self, d2: f64) -> f64 {
        let floor = (-self.cutoff * self.cutoff).exp();
        if d2 >= self.cutoff * self.cutoff * self.sigma {
            return 0.0;
        }
        -(-d2 / self.sigma).exp() / (self.sigma * (1.0 - floor))
    }
}

/// Buffers produced by [`render`].
#[derive(Debug, Clone)]
pub struct RenderOutput {
    pub feature_image: FeatureImage,
    pub soft_silhouette: ScalarMap,
    /// Interpolated view depth; `+inf` on background.
    pub depth: ScalarMap,
    /// Front-most face per pixel, `-1` for background.
    pub face_index: Vec<i32>,
    /// Screen-space barycentrics of the front-most face; zero on background.
    pub barycentrics: Vec<[f64; 3]>,
    pub(crate) cache: RenderCache,
}

#[derive(Debug, Clone)]
pub(crate) struct RenderCache {
    pub camera_vertices: Vec<Vector3<f64>>,
    pub screen: Vec<[f64; 2]>,
    /// Faces that passed the near-plane, degeneracy and culling tests.
    pub drawable: Vec<bool>,
    /// `prod_f (1 - w_f)` on uncovered pixels, 1 on covered ones.
    pub exterior_product: Vec<f64>,
}

impl RenderOutput {
    pub fn width(&self) -> usize {
        self.soft_silhouette.width()
    }

    pub fn height(&self) -> usize {
        self.soft_silhouette.height()
    }

    #[inline]
    pub fn covered(&self, pixel: usize) -> bool {
        self.face_index[pixel] >= 0
    }

    /// Hard coverage mask of the z-buffer.
    pub fn coverage(&self) -> crate::image::Mask {
        crate::image::Mask::from_vec(
            self.width(),
            self.height(),
            self.face_index.iter().map(|&f| f >= 0).collect(),
        )
        .expect("buffer sizes agree")
    }
}

#[inline]
pub(crate) fn cross2(p: [f64; 2], q: [f64; 2]) -> f64 {
    p[0] * q[1] - p[1] * q[0]
}

/// Squared distance from `p` to segment `a-b`, and the segment parameter of
/// the closest point.
#[inline]
pub(crate) fn point_segment_d2(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> (f64, f64) {
    let e = [b[0] - a[0], b[1] - a[1]];
    let r = [p[0] - a[0], p[1] - a[1]];
    let ee = e[0] * e[0] + e[1] * e[1];
    let t = if ee > 0.0 {
        ((r[0] * e[0] + r[1] * e[1]) / ee).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let c = [a[0] + t * e[0] - p[0], a[1] + t * e[1] - p[1]];
    (c[0] * c[0] + c[1] * c[1], t)
}

/// Closest edge of triangle `tri` to `p`: `(d², edge index, t)`.
#[inline]
pub(crate) fn point_triangle_edge_d2(p: [f64; 2], tri: &[[f64; 2]; 3]) -> (f64, usize, f64) {
    let mut best = (f64::INFINITY, 0, 0.0);
    for k in 0..3 {
        let (d2, t) = point_segment_d2(p, tri[k], tri[(k + 1) % 3]);
        if d2 < best.0 {
            best = (d2, k, t);
        }
    }
    best
}

/// Inclusive pixel range whose centres lie in `[lo, hi]`, clipped to `[0, n)`.
#[inline]
pub(crate) fn pixel_span(lo: f64, hi: f64, n: usize) -> Option<(usize, usize)> {
    let a = (lo - 0.5).ceil().max(0.0);
    let b = (hi - 0.5).floor().min(n as f64 - 1.0);
    (a <= b && b >= 0.0).then_some((a as usize, b as usize))
}

#[cfg(test)]
mod tests;
