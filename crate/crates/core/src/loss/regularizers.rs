use crate::error::Result;
use crate::geometry::{uniform_laplacian, DeformableMesh, FeatureTexture, Vector3};

use super::{cauchy, CAUCHY_SCALE};

#[derive(Debug, Clone)]
pub struct LaplacianLoss {
    pub value: f64,
    pub grad_offsets: Vec<Vector3<f64>>,
}

/// Mean squared norm of the uniform Laplacian of the deformed vertices.
pub fn laplacian_loss(mesh: &DeformableMesh) -> Result<LaplacianLoss> {
    let adj = mesh.adjacency();
    let verts = mesh.deformed_vertices();
    let delta = uniform_laplacian(adj, &verts)?;
    let n = verts.len();
    if n == 0 {
        return Ok(LaplacianLoss {
            value: 0.0,
            grad_offsets: Vec::new(),
        });
    }
    let scale = 2.0 / n as f64;
    let value = delta.iter().map(|d| d.norm_squared()).sum::<f64>() / n as f64;
    // delta_i = v_i - mean(v_j); d/dv_k picks up delta_k and -delta_i/|N_i|
    // from every i with k in N_i
    let mut grad: Vec<Vector3<f64>> = delta.iter().map(|d| d * scale).collect();
    for i in 0..n {
        let nb = adj.neighbors(i);
        let share = delta[i] * (scale / nb.len() as f64);
        for &k in nb {
            grad[k as usize] -= share;
        }
    }
    Ok(LaplacianLoss {
        value,
        grad_offsets: grad,
    })
}

#[derive(Debug, Clone)]
pub struct TvLoss {
    pub value: f64,
    /// Laid out like the texture data.
    pub grad_texture: Vec<f64>,
}

/// Mean Cauchy penalty of the feature-vector difference over all horizontal
/// and vertical texel pairs.
pub fn tv_loss(texture: &FeatureTexture) -> TvLoss {
    let (w, h, d) = (texture.width(), texture.height(), texture.channels());
    let data = texture.as_slice();
    let pairs = h * w.saturating_sub(1) + h.saturating_sub(1) * w;
    let mut grad = vec![0.0; data.len()];
    if pairs == 0 {
        return TvLoss {
            value: 0.0,
            grad_texture: grad,
        };
    }
    let inv = 1.0 / pairs as f64;
    let c2 = CAUCHY_SCALE * CAUCHY_SCALE;
    let mut sum = 0.0;
    let mut pair = |a: usize, b: usize, grad: &mut [f64]| {
        let mut r2 = 0.0;
        for c in 0..d {
            let diff = data[a * d + c] - data[b * d + c];
            r2 += diff * diff;
        }
        if r2 == 0.0 {
            return;
        }
        sum += cauchy(r2.sqrt(), CAUCHY_SCALE);
        // d/dx log(1 + |x|²/c²) = 2x / (c² + |x|²)
        let k = 2.0 * inv / (c2 + r2);
        for c in 0..d {
            let g = k * (data[a * d + c] - data[b * d + c]);
            grad[a * d + c] += g;
            grad[b * d + c] -= g;
        }
    };
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if x + 1 < w {
                pair(i, i + 1, &mut grad);
            }
            if y + 1 < h {
                pair(i, i + w, &mut grad);
            }
        }
    }
    TvLoss {
        value: sum * inv,
        grad_texture: grad,
    }
}
