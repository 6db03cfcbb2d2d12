use crate::error::{Error, Result};
use crate::geometry::{
    rotation_matrix_vjp, tangent_project, Camera, DeformableMesh, FeatureTexture, Matrix3, Pose, Vector3, Vector4,
};

use super::forward::{for_each_exterior_pixel, interpolate_uv};
use super::{point_triangle_edge_d2, RenderConfig, RenderOutput};

/// Gradients of a scalar objective w.r.t. the render inputs.
#[derive(Debug, Clone)]
pub struct RenderGradients {
    /// Per-vertex offset gradients.
    pub offsets: Vec<Vector3<f64>>,
    /// Texture gradient, laid out like [`FeatureTexture::as_slice`].
    pub texture: Vec<f64>,
    pub translation: Vector3<f64>,
    /// Gradient w.r.t. the raw (unnormalized) quaternion.
    pub rotation: Vector4<f64>,
}

impl RenderGradients {
    pub fn zeros(vertices: usize, texture_len: usize) -> Self {
        Self {
            offsets: vec![Vector3::zeros(); vertices],
            texture: vec![0.0; texture_len],
            translation: Vector3::zeros(),
            rotation: Vector4::zeros(),
        }
    }
}

/// Pulls gradients w.r.t. the rendered features (`H*W*D`, row-major, channel
/// fastest) and the soft silhouette (`H*W`) back onto the mesh offsets, the
/// texture and the pose.
///
/// The hard visibility decisions of `output` are held fixed.
#[allow(clippy::too_many_arguments)]
pub fn render_backward(
    output: &RenderOutput,
    mesh: &DeformableMesh,
    texture: &FeatureTexture,
    pose: &Pose,
    camera: &Camera,
    cfg: &RenderConfig,
    grad_features: Option<&[f64]>,
    grad_silhouette: Option<&[f64]>,
) -> Result<RenderGradients> {
    let (w, h) = (camera.width, camera.height);
    let n_pix = w * h;
    let channels = texture.channels();
    if output.width() != w || output.height() != h {
        return Err(Error::ResolutionMismatch {
            what: "render output".into(),
            expected: (w, h),
            found: (output.width(), output.height()),
        });
    }
    if let Some(g) = grad_features {
        if g.len() != n_pix * channels {
            return Err(Error::ShapeMismatch(format!(
                "feature gradient has {} values, expected {}",
                g.len(),
                n_pix * channels
            )));
        }
    }
    if let Some(g) = grad_silhouette {
        if g.len() != n_pix {
            return Err(Error::ShapeMismatch(format!(
                "silhouette gradient has {} values, expected {}",
                g.len(),
                n_pix
            )));
        }
    }
    let cache = &output.cache;
    if cache.screen.len() != mesh.vertex_count() {
        return Err(Error::ShapeMismatch("render output belongs to another mesh".into()));
    }

    let mut grads = RenderGradients::zeros(mesh.vertex_count(), texture.as_slice().len());
    let mut g_screen = vec![[0.0f64; 2]; mesh.vertex_count()];
    let faces = mesh.faces();
    let uvs = mesh.uvs();
    let face_uvs = mesh.face_uvs();
    let screen = &cache.screen;

    if let Some(gf) = grad_features {
        for i in 0..n_pix {
            let fi = output.face_index[i];
            if fi < 0 {
                continue;
            }
            let g = &gf[i * channels..(i + 1) * channels];
            if g.iter().all(|&v| v == 0.0) {
                continue;
            }
            let fi = fi as usize;
            let bc = output.barycentrics[i];
            let (u, v) = interpolate_uv(&bc, &face_uvs[fi], uvs);
            let fp = texture.footprint(u, v);
            let (mut gu, mut gv) = (0.0, 0.0);
            for k in 0..4 {
                let t = fp.texels[k];
                let texel = texture.texel(t);
                let dst = &mut grads.texture[t * channels..(t + 1) * channels];
                let mut dot = 0.0;
                for c in 0..channels {
                    dst[c] += fp.weights[k] * g[c];
                    dot += texel[c] * g[c];
                }
                gu += fp.dweights_du[k] * dot;
                gv += fp.dweights_dv[k] * dot;
            }
            if gu == 0.0 && gv == 0.0 {
                continue;
            }
            let fuv = face_uvs[fi].map(|t| uvs[t as usize]);
            let gb = [0, 1, 2].map(|k| gu * fuv[k].x + gv * fuv[k].y);
            let idx = faces[fi].map(|v| v as usize);
            let tri = idx.map(|v| screen[v]);
            let p = [(i % w) as f64 + 0.5, (i / w) as f64 + 0.5];
            let gt = barycentric_vjp(p, &tri, &bc, &gb);
            for k in 0..3 {
                g_screen[idx[k]][0] += gt[k][0];
                g_screen[idx[k]][1] += gt[k][1];
            }
        }
    }

    if let Some(gs) = grad_silhouette {
        let s2 = camera.ndc_per_pixel().powi(2);
        for_each_exterior_pixel(
            screen,
            faces,
            &cache.drawable,
            &output.face_index,
            camera,
            cfg,
            |fi, i, p, tri| {
                if gs[i] == 0.0 {
                    return;
                }
                let (d2, edge, t) = point_triangle_edge_d2(p, tri);
                let wgt = cfg.kernel(d2 * s2);
                if wgt <= 0.0 {
                    return;
                }
                // dS/dw_f is the product over all other faces
                let others = cache.exterior_product[i] / (1.0 - wgt);
                let g_d2 = gs[i] * others * cfg.kernel_derivative(d2 * s2) * s2;
                let a = tri[edge];
                let b = tri[(edge + 1) % 3];
                let c = [a[0] + t * (b[0] - a[0]) - p[0], a[1] + t * (b[1] - a[1]) - p[1]];
                let idx = faces[fi];
                let ia = idx[edge] as usize;
                let ib = idx[(edge + 1) % 3] as usize;
                for d in 0..2 {
                    g_screen[ia][d] += g_d2 * 2.0 * (1.0 - t) * c[d];
                    g_screen[ib][d] += g_d2 * 2.0 * t * c[d];
                }
            },
        );
    }

    // screen -> camera -> object
    let q = pose.unit_rotation()?;
    let rot = pose.rotation_matrix()?;
    let rt = rot.transpose();
    let verts = mesh.deformed_vertices();
    let mut g_rot = Matrix3::zeros();
    for (vi, gs) in g_screen.iter().enumerate() {
        if gs[0] == 0.0 && gs[1] == 0.0 {
            continue;
        }
        let jac = camera.projection_jacobian(&cache.camera_vertices[vi]);
        let g_cam = jac.transpose() * nalgebra::Vector2::new(gs[0], gs[1]);
        grads.offsets[vi] = rt * g_cam;
        grads.translation += g_cam;
        g_rot += g_cam * verts[vi].transpose();
    }
    let g_unit = rotation_matrix_vjp(&q, &g_rot);
    grads.rotation = tangent_project(&pose.rotation, &g_unit);
    Ok(grads)
}

/// Vector-Jacobian product of screen-space barycentrics w.r.t. the triangle
/// corners, given `dL/db`.
fn barycentric_vjp(p: [f64; 2], tri: &[[f64; 2]; 3], bc: &[f64; 3], gb: &[f64; 3]) -> [[f64; 2]; 3] {
    let [a, b, c] = *tri;
    let ap = [a[0] - p[0], a[1] - p[1]];
    let bp = [b[0] - p[0], b[1] - p[1]];
    let cp = [c[0] - p[0], c[1] - p[1]];
    let area = super::cross2(bp, cp) + super::cross2(cp, ap) + super::cross2(ap, bp);
    // b_i = n_i / sum_j n_j
    let mean: f64 = (0..3).map(|k| gb[k] * bc[k]).sum();
    let gn = [0, 1, 2].map(|k| (gb[k] - mean) / area);
    let mut out = [[0.0; 2]; 3];
    // d cross(P, Q) = (Q.y, -Q.x) dP + (-P.y, P.x) dQ
    let mut acc = |k: usize, g: f64, q: [f64; 2], sign: f64| {
        out[k][0] += sign * g * q[1];
        out[k][1] -= sign * g * q[0];
    };
    // n0 = cross(B-p, C-p)
    acc(1, gn[0], cp, 1.0);
    acc(2, gn[0], bp, -1.0);
    // n1 = cross(C-p, A-p)
    acc(2, gn[1], ap, 1.0);
    acc(0, gn[1], cp, -1.0);
    // n2 = cross(A-p, B-p)
    acc(0, gn[2], bp, 1.0);
    acc(1, gn[2], ap, -1.0);
    out
}
