use crate::error::{Error, Result};
use crate::features::FeatureImage;
use crate::geometry::FeatureTexture;
use crate::raster::render;

use super::TrackerState;

/// Texture assembled from observed colors.
#[derive(Debug, Clone)]
pub struct BackProjection {
    pub texture: FeatureTexture,
    /// Per texel: some keyframe pixel sampled it.
    pub observed: Vec<bool>,
}

impl BackProjection {
    pub fn observed_count(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }
}

/// Averages the colors of every visible keyframe pixel into the texels it
/// samples, weighted by the bilinear weights. `frames` pairs frame indices
/// with their RGB images; keyframes without an entry are skipped.
/// Unobserved texels are zero.
pub fn backproject_rgb(state: &TrackerState, frames: &[(usize, &FeatureImage)]) -> Result<BackProjection> {
    let tex = state.texture();
    let (tw, th) = (tex.width(), tex.height());
    let camera = state.camera();
    let render_cfg = state.config().render();
    let proxy = FeatureTexture::zeros(tw, th, 1);
    let mut acc = vec![0.0; tw * th * 3];
    let mut weight = vec![0.0; tw * th];
    let uvs = state.mesh().uvs();
    let face_uvs = state.mesh().face_uvs();

    for kf in state.keyframes().frames() {
        let Some(&(_, rgb)) = frames.iter().find(|(i, _)| *i == kf.index) else {
            continue;
        };
        if rgb.channels() != 3 {
            return Err(Error::ChannelMismatch {
                expected: 3,
                found: rgb.channels(),
            });
        }
        if rgb.dims() != (camera.width, camera.height) {
            return Err(Error::ResolutionMismatch {
                what: format!("color frame {}", kf.index),
                expected: (camera.width, camera.height),
                found: rgb.dims(),
            });
        }
        let out = render(state.mesh(), &proxy, &kf.pose, camera, &render_cfg)?;
        let colors = rgb.as_slice();
        for (p, &fi) in out.face_index.iter().enumerate() {
            if fi < 0 {
                continue;
            }
            let bc = out.barycentrics[p];
            let mut u = 0.0;
            let mut v = 0.0;
            for k in 0..3 {
                let t = uvs[face_uvs[fi as usize][k] as usize];
                u += bc[k] * t.x;
                v += bc[k] * t.y;
            }
            let fp = proxy.footprint(u, v);
            for k in 0..4 {
                let w = fp.weights[k];
                if w <= 0.0 {
                    continue;
                }
                let t = fp.texels[k];
                weight[t] += w;
                for c in 0..3 {
                    acc[t * 3 + c] += w * colors[p * 3 + c];
                }
            }
        }
    }

    let observed: Vec<bool> = weight.iter().map(|&w| w > 0.0).collect();
    for t in 0..tw * th {
        if observed[t] {
            for c in 0..3 {
                acc[t * 3 + c] /= weight[t];
            }
        }
    }
    Ok(BackProjection {
        texture: FeatureTexture::from_vec(tw, th, 3, acc)?,
        observed,
    })
}
