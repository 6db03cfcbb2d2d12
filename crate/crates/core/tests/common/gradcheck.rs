//! Central-difference check of the full tracking objective on small random scenes.

use meshtrack::geometry::{make_prototype_sphere, quaternion_from_axis_angle, Vector3};
use meshtrack::loss::distance_transform;
use meshtrack::optim::{evaluate, FrameInput, ObjectiveConfig, Observation};
use meshtrack::{
    Camera, DeformableMesh, FeatureImage, FeatureTexture, Mask, Pose, RenderConfig, RenderOutput, ScalarMap,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Small enough that no sample crosses a bilinear texel kink.
pub const FD_STEP: f64 = 1e-6;

pub struct FrameData {
    pub pose: Pose,
    pub features: FeatureImage,
    pub mask: Mask,
    pub dt: ScalarMap,
    pub ignore: Vec<f64>,
}

pub struct Scene {
    pub camera: Camera,
    pub mesh: DeformableMesh,
    pub texture: FeatureTexture,
    pub cfg: ObjectiveConfig,
    pub current: FrameData,
    pub keyframe: FrameData,
}

/// Relative error `|analytic - numeric| / |numeric|` per parameter group.
#[derive(Debug, Clone, Copy)]
pub struct GroupErrors {
    pub offsets: f64,
    pub texture: f64,
    pub translation: f64,
    pub rotation: f64,
    pub keyframe_pose: f64,
    /// Pixels of the current frame left after removing boundary bands.
    pub interior_pixels: usize,
}

impl GroupErrors {
    pub fn max(&self) -> f64 {
        [
            self.offsets,
            self.texture,
            self.translation,
            self.rotation,
            self.keyframe_pose,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn random_pose(rng: &mut ChaCha8Rng) -> Pose {
    let axis = Vector3::new(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    );
    let axis = if axis.norm() < 1e-3 {
        Vector3::y()
    } else {
        axis.normalize()
    };
    Pose::new(
        Vector3::new(
            rng.gen_range(-0.15..0.15),
            rng.gen_range(-0.15..0.15),
            rng.gen_range(-2.2..-1.6),
        ),
        quaternion_from_axis_angle(&axis, rng.gen_range(-3.0..3.0)),
    )
}

/// Pixels next to a coverage change, an occlusion edge, or a texture seam.
///
/// Two different faces meet smoothly only when they share an edge with the
/// same texture coordinates and the same screen orientation; every pixel whose
/// 3x3 neighbourhood sees any other kind of face change is excluded.
pub fn boundary_band(out: &RenderOutput, mesh: &DeformableMesh, pose: &Pose, camera: &Camera) -> Vec<bool> {
    let (w, h) = (out.width(), out.height());
    let r = pose.rotation_matrix().unwrap();
    let screen: Vec<(f64, f64)> = mesh
        .deformed_vertices()
        .iter()
        .map(|v| {
            let p = camera.project(&(r * v + pose.translation)).unwrap();
            (p.u, p.v)
        })
        .collect();
    let orientation = |f: usize| {
        let [a, b, c] = mesh.faces()[f].map(|i| screen[i as usize]);
        ((b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)).signum()
    };
    let smooth = |f: usize, g: usize| {
        if f == g {
            return true;
        }
        let (fv, fu) = (mesh.faces()[f], mesh.face_uvs()[f]);
        let (gv, gu) = (mesh.faces()[g], mesh.face_uvs()[g]);
        let mut shared = 0;
        for i in 0..3 {
            for j in 0..3 {
                if fv[i] == gv[j] {
                    if fu[i] != gu[j] {
                        return false;
                    }
                    shared += 1;
                }
            }
        }
        shared == 2 && orientation(f) == orientation(g)
    };
    let mut band = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let f = out.face_index[y * w + x];
            for (dx, dy) in [(1i64, 0i64), (0, 1), (1, 1), (1, -1)] {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    continue;
                }
                let q = ny as usize * w + nx as usize;
                let g = out.face_index[q];
                let ok = match (f >= 0, g >= 0) {
                    (false, false) => true,
                    (true, true) => smooth(f as usize, g as usize),
                    _ => false,
                };
                if !ok {
                    band[y * w + x] = true;
                    band[q] = true;
                }
            }
        }
    }
    band
}

fn observed_frame(
    rng: &mut ChaCha8Rng,
    scene_mesh: &DeformableMesh,
    texture: &FeatureTexture,
    camera: &Camera,
    render_cfg: &RenderConfig,
) -> (FeatureImage, Mask) {
    // observation: the scene under a nearby pose, plus noise
    let pose = random_pose(rng);
    let out = meshtrack::render(scene_mesh, texture, &pose, camera, render_cfg).unwrap();
    let mut features = out.feature_image.clone();
    for v in features.as_mut_slice() {
        *v = (*v + rng.gen_range(-0.2..0.2)).clamp(0.0, 1.0);
    }
    (features, out.coverage())
}

fn frame(
    rng: &mut ChaCha8Rng,
    mesh: &DeformableMesh,
    texture: &FeatureTexture,
    camera: &Camera,
    render_cfg: &RenderConfig,
) -> FrameData {
    let pose = random_pose(rng);
    let (features, mask) = observed_frame(rng, mesh, texture, camera, render_cfg);
    let dt = distance_transform(&mask).map;
    let out = meshtrack::render(mesh, texture, &pose, camera, render_cfg).unwrap();
    let ignore = boundary_band(&out, mesh, &pose, camera)
        .into_iter()
        .map(|b| if b { 0.0 } else { 1.0 })
        .collect();
    FrameData {
        pose,
        features,
        mask,
        dt,
        ignore,
    }
}

/// A random scene: an 80-face sphere with random offsets and texture, seen
/// at 32x32 in the current frame and one keyframe.
pub fn random_scene(seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let camera = Camera::new(32, 32);
    let mut mesh = make_prototype_sphere(8, 6).unwrap();
    let offsets = (0..mesh.vertex_count())
        .map(|_| {
            Vector3::new(
                rng.gen_range(-0.05..0.05),
                rng.gen_range(-0.05..0.05),
                rng.gen_range(-0.05..0.05),
            )
        })
        .collect();
    mesh.set_offsets(offsets).unwrap();
    let data = (0..12 * 12 * 3).map(|_| rng.gen_range(0.0..1.0)).collect();
    let texture = FeatureTexture::from_vec(12, 12, 3, data).unwrap();
    let sigma = if seed.is_multiple_of(5) {
        RenderConfig::default().sigma
    } else {
        rng.gen_range(1e-3..1e-2)
    };
    let cfg = ObjectiveConfig {
        render: RenderConfig {
            sigma,
            ..RenderConfig::default()
        },
        ..ObjectiveConfig::default()
    };
    let current = frame(&mut rng, &mesh, &texture, &camera, &cfg.render);
    let keyframe = frame(&mut rng, &mesh, &texture, &camera, &cfg.render);
    Scene {
        camera,
        mesh,
        texture,
        cfg,
        current,
        keyframe,
    }
}

fn observation(f: &FrameData) -> Observation<'_> {
    Observation {
        features: &f.features,
        mask: &f.mask,
        dt: &f.dt,
        ignore: Some(&f.ignore),
    }
}

fn total(scene: &Scene, mesh: &DeformableMesh, texture: &FeatureTexture, current: &Pose, keyframe: &Pose) -> f64 {
    let cur = FrameInput {
        index: 5,
        pose: current,
        observation: observation(&scene.current),
    };
    let kf = FrameInput {
        index: 3,
        pose: keyframe,
        observation: observation(&scene.keyframe),
    };
    evaluate(mesh, texture, &scene.camera, &scene.cfg, &cur, &[kf], false)
        .unwrap()
        .total
}

fn rel(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm: f64 = numeric.iter().map(|n| n * n).sum::<f64>().sqrt();
    if norm == 0.0 {
        diff
    } else {
        diff / norm
    }
}

fn central(mut f: impl FnMut(f64) -> f64) -> f64 {
    (f(FD_STEP) - f(-FD_STEP)) / (2.0 * FD_STEP)
}

/// Compares the analytic gradient of the total objective with central
/// differences over every parameter.
pub fn check_scene(scene: &Scene) -> GroupErrors {
    let cur = FrameInput {
        index: 5,
        pose: &scene.current.pose,
        observation: observation(&scene.current),
    };
    let kf = FrameInput {
        index: 3,
        pose: &scene.keyframe.pose,
        observation: observation(&scene.keyframe),
    };
    let eval = evaluate(
        &scene.mesh,
        &scene.texture,
        &scene.camera,
        &scene.cfg,
        &cur,
        &[kf],
        true,
    )
    .unwrap();
    let g = eval.gradients.unwrap();
    let (cp, kp) = (&scene.current.pose, &scene.keyframe.pose);

    let mut num_offsets = Vec::new();
    let mut ana_offsets = Vec::new();
    for v in 0..scene.mesh.vertex_count() {
        for k in 0..3 {
            num_offsets.push(central(|h| {
                let mut m = scene.mesh.clone();
                m.offsets_mut()[v][k] += h;
                total(scene, &m, &scene.texture, cp, kp)
            }));
            ana_offsets.push(g.offsets[v][k]);
        }
    }

    let num_texture: Vec<f64> = (0..scene.texture.as_slice().len())
        .map(|i| {
            central(|h| {
                let mut t = scene.texture.clone();
                t.as_mut_slice()[i] += h;
                total(scene, &scene.mesh, &t, cp, kp)
            })
        })
        .collect();

    let pose_fd = |which: usize, translation: bool, k: usize| {
        central(|h| {
            let (mut c, mut kf) = (*cp, *kp);
            let p = if which == 0 { &mut c } else { &mut kf };
            if translation {
                p.translation[k] += h;
            } else {
                p.rotation[k] += h;
            }
            total(scene, &scene.mesh, &scene.texture, &c, &kf)
        })
    };
    let num_t: Vec<f64> = (0..3).map(|k| pose_fd(0, true, k)).collect();
    let num_q: Vec<f64> = (0..4).map(|k| pose_fd(0, false, k)).collect();
    let num_kf: Vec<f64> = (0..3)
        .map(|k| pose_fd(1, true, k))
        .chain((0..4).map(|k| pose_fd(1, false, k)))
        .collect();
    let ana_kf: Vec<f64> = g.keyframe_translations[0]
        .iter()
        .chain(g.keyframe_rotations[0].iter())
        .copied()
        .collect();

    GroupErrors {
        offsets: rel(&ana_offsets, &num_offsets),
        texture: rel(&g.texture, &num_texture),
        translation: rel(g.translation.as_slice(), &num_t),
        rotation: rel(g.rotation.as_slice(), &num_q),
        keyframe_pose: rel(&ana_kf, &num_kf),
        interior_pixels: scene.current.ignore.iter().filter(|&&m| m > 0.0).count(),
    }
}
