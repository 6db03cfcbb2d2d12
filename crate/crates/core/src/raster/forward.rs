use crate::error::{Error, Result};
use crate::features::FeatureImage;
use crate::geometry::{Camera, DeformableMesh, FeatureTexture, Pose};
use crate::image::ScalarMap;

use super::{cross2, pixel_span, point_triangle_edge_d2, RenderCache, RenderConfig, RenderOutput};

/// Renders `mesh` deformed by its offsets, textured with `texture`, at `pose`.
///
/// Faces behind the near plane and faces with (near-)zero screen area are
/// skipped. An object entirely behind the camera renders as background.
pub fn render(
    mesh: &DeformableMesh,
    texture: &FeatureTexture,
    pose: &Pose,
    camera: &Camera,
    cfg: &RenderConfig,
) -> Result<RenderOutput> {
    if !(cfg.sigma > 0.0) {
        return Err(Error::Config(format!(
            "silhouette sigma must be positive, got {}",
            cfg.sigma
        )));
    }
    let (w, h) = (camera.width, camera.height);
    let n_pix = w * h;
    let channels = texture.channels();
    let rot = pose.rotation_matrix()?;

    let camera_vertices: Vec<_> = mesh
        .deformed_vertices()
        .iter()
        .map(|v| rot * v + pose.translation)
        .collect();
    let mut screen = Vec::with_capacity(camera_vertices.len());
    let mut depth_of = Vec::with_capacity(camera_vertices.len());
    for p in &camera_vertices {
        let pr = camera.project_unchecked(p);
        screen.push([pr.u, pr.v]);
        depth_of.push(pr.depth);
    }

    let faces = mesh.faces();
    let mut drawable = vec![false; faces.len()];
    for (fi, f) in faces.iter().enumerate() {
        let idx = f.map(|v| v as usize);
        if idx.iter().any(|&v| !(depth_of[v] > cfg.near)) {
            continue;
        }
        let [a, b, c] = idx.map(|v| screen[v]);
        let area2 = cross2([b[0] - a[0], b[1] - a[1]], [c[0] - a[0], c[1] - a[1]]);
        if area2.abs() < 1e-12 || !area2.is_finite() {
            continue;
        }
        // pixel rows grow downwards, so outward faces seen from the camera
        // have negative signed area
        if cfg.cull_backfaces && area2 > 0.0 {
            continue;
        }
        drawable[fi] = true;
    }

    let mut depth = vec![f64::INFINITY; n_pix];
    let mut face_index = vec![-1i32; n_pix];
    let mut barycentrics = vec![[0.0; 3]; n_pix];

    for (fi, f) in faces.iter().enumerate() {
        if !drawable[fi] {
            continue;
        }
        let idx = f.map(|v| v as usize);
        let tri = idx.map(|v| screen[v]);
        let dz = idx.map(|v| depth_of[v]);
        let lo_u = tri[0][0].min(tri[1][0]).min(tri[2][0]);
        let hi_u = tri[0][0].max(tri[1][0]).max(tri[2][0]);
        let lo_v = tri[0][1].min(tri[1][1]).min(tri[2][1]);
        let hi_v = tri[0][1].max(tri[1][1]).max(tri[2][1]);
        let (Some((x0, x1)), Some((y0, y1))) = (pixel_span(lo_u, hi_u, w), pixel_span(lo_v, hi_v, h)) else {
            continue;
        };
        for y in y0..=y1 {
            let py = y as f64 + 0.5;
            for x in x0..=x1 {
                let p = [x as f64 + 0.5, py];
                let Some(bc) = barycentric(p, &tri) else {
                    continue;
                };
                let z = bc[0] * dz[0] + bc[1] * dz[1] + bc[2] * dz[2];
                let i = y * w + x;
                if z < depth[i] {
                    depth[i] = z;
                    face_index[i] = fi as i32;
                    barycentrics[i] = bc;
                }
            }
        }
    }

    // appearance
    let mut feature_image = FeatureImage::zeros(w, h, channels);
    let uvs = mesh.uvs();
    let face_uvs = mesh.face_uvs();
    let feat = feature_image.as_mut_slice();
    for i in 0..n_pix {
        let fi = face_index[i];
        if fi < 0 {
            continue;
        }
        let (u, v) = interpolate_uv(&barycentrics[i], &face_uvs[fi as usize], uvs);
        texture.sample_into(u, v, &mut feat[i * channels..(i + 1) * channels]);
    }

    // soft silhouette
    let exterior_product = exterior_products(&screen, faces, &drawable, &face_index, camera, cfg);
    let silhouette: Vec<f64> = (0..n_pix)
        .map(|i| {
            if face_index[i] >= 0 {
                1.0
            } else {
                1.0 - exterior_product[i]
            }
        })
        .collect();

    Ok(RenderOutput {
        feature_image,
        soft_silhouette: ScalarMap::from_vec(w, h, silhouette)?,
        depth: ScalarMap::from_vec(w, h, depth)?,
        face_index,
        barycentrics,
        cache: RenderCache {
            camera_vertices,
            screen,
            drawable,
            exterior_product,
        },
    })
}

/// Screen-space barycentrics of `p`, or `None` if `p` lies outside.
#[inline]
pub(crate) fn barycentric(p: [f64; 2], tri: &[[f64; 2]; 3]) -> Option<[f64; 3]> {
    let [a, b, c] = *tri;
    let ap = [a[0] - p[0], a[1] - p[1]];
    let bp = [b[0] - p[0], b[1] - p[1]];
    let cp = [c[0] - p[0], c[1] - p[1]];
    let n0 = cross2(bp, cp);
    let n1 = cross2(cp, ap);
    let n2 = cross2(ap, bp);
    let area = n0 + n1 + n2;
    let inside = if area > 0.0 {
        n0 >= 0.0 && n1 >= 0.0 && n2 >= 0.0
    } else {
        n0 <= 0.0 && n1 <= 0.0 && n2 <= 0.0
    };
    if !inside || area == 0.0 {
        return None;
    }
    Some([n0 / area, n1 / area, n2 / area])
}

#[inline]
pub(crate) fn interpolate_uv(bc: &[f64; 3], face_uv: &[u32; 3], uvs: &[nalgebra::Vector2<f64>]) -> (f64, f64) {
    let mut u = 0.0;
    let mut v = 0.0;
    for k in 0..3 {
        let t = uvs[face_uv[k] as usize];
        u += bc[k] * t.x;
        v += bc[k] * t.y;
    }
    (u, v)
}

/// Visits every uncovered pixel within kernel range of a drawable face.
/// The callback receives `(face, pixel, pixel centre, triangle)`.
pub(crate) fn for_each_exterior_pixel(
    screen: &[[f64; 2]],
    faces: &[[u32; 3]],
    drawable: &[bool],
    face_index: &[i32],
    camera: &Camera,
    cfg: &RenderConfig,
    mut visit: impl FnMut(usize, usize, [f64; 2], &[[f64; 2]; 3]),
) {
    let (w, h) = (camera.width, camera.height);
    let reach = cfg.cutoff * cfg.sigma.sqrt() / camera.ndc_per_pixel();
    for (fi, f) in faces.iter().enumerate() {
        if !drawable[fi] {
            continue;
        }
        let tri = f.map(|v| screen[v as usize]);
        let lo_u = tri[0][0].min(tri[1][0]).min(tri[2][0]) - reach;
        let hi_u = tri[0][0].max(tri[1][0]).max(tri[2][0]) + reach;
        let lo_v = tri[0][1].min(tri[1][1]).min(tri[2][1]) - reach;
        let hi_v = tri[0][1].max(tri[1][1]).max(tri[2][1]) + reach;
        let (Some((x0, x1)), Some((y0, y1))) = (pixel_span(lo_u, hi_u, w), pixel_span(lo_v, hi_v, h)) else {
            continue;
        };
        for y in y0..=y1 {
            for x in x0..=x1 {
                let i = y * w + x;
                if face_index[i] >= 0 {
                    continue;
                }
                visit(fi, i, [x as f64 + 0.5, y as f64 + 0.5], &tri);
            }
        }
    }
}

fn exterior_products(
    screen: &[[f64; 2]],
    faces: &[[u32; 3]],
    drawable: &[bool],
    face_index: &[i32],
    camera: &Camera,
    cfg: &RenderConfig,
) -> Vec<f64> {
    let mut prod = vec![1.0; face_index.len()];
    let s2 = camera.ndc_per_pixel().powi(2);
    for_each_exterior_pixel(screen, faces, drawable, face_index, camera, cfg, |_, i, p, tri| {
        let (d2, _, _) = point_triangle_edge_d2(p, tri);
        let wgt = cfg.kernel(d2 * s2);
        if wgt > 0.0 {
            prod[i] *= 1.0 - wgt;
        }
    });
    prod
}
