use super::*;
use crate::geometry::{make_prototype_sphere, Camera, DeformableMesh, FeatureTexture, Pose, Vector2, Vector3};

fn quad_mesh(z: f64, half: f64) -> DeformableMesh {
    DeformableMesh::new(
        vec![
            Vector3::new(-half, -half, z),
            Vector3::new(half, -half, z),
            Vector3::new(half, half, z),
            Vector3::new(-half, half, z),
        ],
        vec![[0, 1, 2], [0, 2, 3]],
        vec![
            Vector2::new(0.0, 1.0),
            Vector2::new(1.0, 1.0),
            Vector2::new(1.0, 0.0),
            Vector2::new(0.0, 0.0),
        ],
        vec![[0, 1, 2], [0, 2, 3]],
    )
    .unwrap()
}

fn gradient_texture(channels: usize) -> FeatureTexture {
    FeatureTexture::from_fn(4, 4, channels, |x, y, t| {
        for (c, v) in t.iter_mut().enumerate() {
            *v = 0.1 * x as f64 + 0.2 * y as f64 + 0.05 * c as f64;
        }
    })
}

#[test]
fn kernel_is_one_at_contact_and_zero_at_cutoff() {
    let cfg = RenderConfig::default();
    assert!((cfg.kernel(0.0) - 1.0).abs() < 1e-15);
    let edge = cfg.cutoff * cfg.cutoff * cfg.sigma;
    assert_eq!(cfg.kernel(edge), 0.0);
    assert!(cfg.kernel(edge * (1.0 - 1e-9)) < 1e-9);
    let d = 3e-5;
    let fd = (cfg.kernel(d + 1e-10) - cfg.kernel(d - 1e-10)) / 2e-10;
    assert!((fd - cfg.kernel_derivative(d)).abs() < 1e-4 * fd.abs());
}

#[test]
fn segment_distance() {
    let (d2, t) = point_segment_d2([0.0, 1.0], [-1.0, 0.0], [1.0, 0.0]);
    assert_eq!((d2, t), (1.0, 0.5));
    let (d2, t) = point_segment_d2([3.0, 0.0], [-1.0, 0.0], [1.0, 0.0]);
    assert_eq!((d2, t), (4.0, 1.0));
}

#[test]
fn quad_covers_its_projection() {
    let cam = Camera::new(32, 32);
    let mesh = quad_mesh(-2.0, 0.25);
    let out = render(
        &mesh,
        &gradient_texture(3),
        &Pose::identity(),
        &cam,
        &RenderConfig::default(),
    )
    .unwrap();
    // half-width 0.25 at depth 2 projects to f * 0.125 pixels
    let half_px = cam.focal() * 0.125;
    let expected = (2.0 * half_px).powi(2);
    let covered = out.coverage().count() as f64;
    assert!(
        (covered - expected).abs() < 4.0 * 2.0 * half_px,
        "{covered} vs {expected}"
    );
    for i in 0..32 * 32 {
        if out.covered(i) {
            assert_eq!(out.soft_silhouette.as_slice()[i], 1.0);
            assert!((out.depth.as_slice()[i] - 2.0).abs() < 1e-12);
            let b = out.barycentrics[i];
            assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(b.iter().all(|&v| v >= 0.0));
        } else {
            assert!(out.depth.as_slice()[i].is_infinite());
            assert!(out.feature_image.as_slice()[i * 3..i * 3 + 3].iter().all(|&v| v == 0.0));
        }
    }
    // corners of the image are far from the quad
    assert_eq!(out.soft_silhouette.get(0, 0), 0.0);
}

#[test]
fn soft_band_decays_with_distance() {
    let cam = Camera::new(64, 64);
    let cfg = RenderConfig {
        sigma: 1e-3,
        ..Default::default()
    };
    let out = render(
        &quad_mesh(-2.0, 0.25),
        &gradient_texture(1),
        &Pose::identity(),
        &cam,
        &cfg,
    )
    .unwrap();
    let row = 32;
    let first = (0..64).find(|&x| out.covered(row * 64 + x)).unwrap();
    let s: Vec<f64> = (0..first).rev().map(|x| out.soft_silhouette.get(x, row)).collect();
    assert!(s[0] > 0.3 && s[0] < 1.0);
    for k in 1..s.len() {
        assert!(s[k] <= s[k - 1]);
    }
    assert_eq!(*s.last().unwrap(), 0.0);
}

#[test]
fn nearer_face_wins() {
    let cam = Camera::new(16, 16);
    let near = quad_mesh(-1.5, 0.1);
    let far = quad_mesh(-3.0, 1.0);
    let mut verts = near.prototype().to_vec();
    verts.extend_from_slice(far.prototype());
    let mesh = DeformableMesh::new(
        verts,
        vec![[4, 5, 6], [4, 6, 7], [0, 1, 2], [0, 2, 3]],
        near.uvs().to_vec(),
        vec![[0, 1, 2], [0, 2, 3], [0, 1, 2], [0, 2, 3]],
    )
    .unwrap();
    let out = render(
        &mesh,
        &gradient_texture(1),
        &Pose::identity(),
        &cam,
        &RenderConfig::default(),
    )
    .unwrap();
    assert!(out.face_index[8 * 16 + 8] >= 2);
    assert!((out.depth.get(8, 8) - 1.5).abs() < 1e-12);
    assert!(out.face_index[3 * 16 + 3] < 2 && out.face_index[3 * 16 + 3] >= 0);
}

#[test]
fn object_behind_camera_renders_background() {
    let cam = Camera::new(16, 16);
    let out = render(
        &quad_mesh(2.0, 0.5),
        &gradient_texture(1),
        &Pose::identity(),
        &cam,
        &RenderConfig::default(),
    )
    .unwrap();
    assert!(out.face_index.iter().all(|&f| f < 0));
    assert!(out.soft_silhouette.as_slice().iter().all(|&s| s == 0.0));
}

#[test]
fn culling_keeps_only_faces_towards_the_camera() {
    let cam = Camera::new(48, 48);
    let mesh = make_prototype_sphere(12, 8).unwrap();
    let pose = Pose::new(
        Vector3::new(0.0, 0.0, -2.0),
        crate::geometry::Vector4::new(1.0, 0.0, 0.0, 0.0),
    );
    let tex = gradient_texture(1);
    let all = render(&mesh, &tex, &pose, &cam, &RenderConfig::default()).unwrap();
    let culled = render(
        &mesh,
        &tex,
        &pose,
        &cam,
        &RenderConfig {
            cull_backfaces: true,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(all.coverage(), culled.coverage());
    assert_eq!(all.face_index, culled.face_index);
    let front = culled.cache.drawable.iter().filter(|&&d| d).count();
    assert!(
        front < mesh.face_count() && front > mesh.face_count() / 4,
        "{front} of {}",
        mesh.face_count()
    );
}

#[test]
fn texture_gradient_is_the_sampling_adjoint() {
    let cam = Camera::new(24, 24);
    let mesh = quad_mesh(-2.0, 0.4);
    let tex = gradient_texture(2);
    let cfg = RenderConfig::default();
    let pose = Pose::identity();
    let out = render(&mesh, &tex, &pose, &cam, &cfg).unwrap();
    let upstream: Vec<f64> = (0..24 * 24 * 2)
        .map(|i| ((i * 7919) % 13) as f64 / 13.0 - 0.5)
        .collect();
    let g = render_backward(&out, &mesh, &tex, &pose, &cam, &cfg, Some(&upstream), None).unwrap();
    // the image is linear in the texture: <upstream, R(e_k)> = g_k
    for k in [0usize, 5, 11, 17, 30] {
        let mut data = vec![0.0; tex.as_slice().len()];
        data[k] = 1.0;
        let unit = FeatureTexture::from_vec(4, 4, 2, data).unwrap();
        let r = render(&mesh, &unit, &pose, &cam, &cfg).unwrap();
        let dot: f64 = r
            .feature_image
            .as_slice()
            .iter()
            .zip(&upstream)
            .map(|(a, b)| a * b)
            .sum();
        assert!(
            (dot - g.texture[k]).abs() < 1e-12,
            "texel {k}: {dot} vs {}",
            g.texture[k]
        );
    }
}

fn silhouette_objective(out: &RenderOutput, weights: &[f64]) -> f64 {
    out.soft_silhouette
        .as_slice()
        .iter()
        .zip(weights)
        .map(|(s, w)| s * w)
        .sum()
}

#[test]
fn silhouette_gradient_matches_finite_differences() {
    let cam = Camera::new(32, 32);
    let cfg = RenderConfig {
        sigma: 4e-3,
        ..Default::default()
    };
    let mut mesh = make_prototype_sphere(8, 6).unwrap();
    let offsets: Vec<_> = (0..mesh.vertex_count())
        .map(|i| Vector3::new(0.02 * ((i * 3) as f64).sin(), 0.02 * ((i * 5) as f64).cos(), 0.0))
        .collect();
    mesh.set_offsets(offsets).unwrap();
    let tex = gradient_texture(1);
    let pose = Pose::new(
        Vector3::new(0.05, -0.03, -2.2),
        crate::geometry::Vector4::new(0.9, 0.2, -0.3, 0.1),
    );
    let weights: Vec<f64> = (0..32 * 32).map(|i| 1.0 + ((i * 31) % 17) as f64 / 17.0).collect();
    let out = render(&mesh, &tex, &pose, &cam, &cfg).unwrap();
    let g = render_backward(&out, &mesh, &tex, &pose, &cam, &cfg, None, Some(&weights)).unwrap();

    let h = 1e-5;
    let eval = |p: &Pose, m: &DeformableMesh| silhouette_objective(&render(m, &tex, p, &cam, &cfg).unwrap(), &weights);
    for k in 0..3 {
        let mut a = pose;
        let mut b = pose;
        a.translation[k] += h;
        b.translation[k] -= h;
        let fd = (eval(&a, &mesh) - eval(&b, &mesh)) / (2.0 * h);
        assert!(
            (fd - g.translation[k]).abs() < 1e-3 * (1.0 + fd.abs()),
            "t{k}: {fd} vs {}",
            g.translation[k]
        );
    }
    for k in 0..4 {
        let mut a = pose;
        let mut b = pose;
        a.rotation[k] += h;
        b.rotation[k] -= h;
        let fd = (eval(&a, &mesh) - eval(&b, &mesh)) / (2.0 * h);
        assert!(
            (fd - g.rotation[k]).abs() < 1e-3 * (1.0 + fd.abs()),
            "q{k}: {fd} vs {}",
            g.rotation[k]
        );
    }
    for v in [0usize, 7, 20, 33] {
        for k in 0..3 {
            let mut a = mesh.clone();
            let mut b = mesh.clone();
            a.offsets_mut()[v][k] += h;
            b.offsets_mut()[v][k] -= h;
            let fd = (eval(&pose, &a) - eval(&pose, &b)) / (2.0 * h);
            let an = g.offsets[v][k];
            assert!((fd - an).abs() < 1e-3 * (1.0 + fd.abs()), "v{v}[{k}]: {fd} vs {an}");
        }
    }
}
