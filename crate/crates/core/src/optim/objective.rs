use crate::error::{Error, Result};
use crate::features::FeatureImage;
use crate::geometry::{Camera, DeformableMesh, FeatureTexture, Pose, Vector3, Vector4};
use crate::image::{Mask, ScalarMap};
use crate::loss::{
    appearance_frame, frame_average, laplacian_loss, motion_loss, silhouette_frame, total_loss, tv_loss, LossTerms,
    LossWeights, MotionThresholds,
};
use crate::raster::{render, render_backward, RenderConfig, RenderOutput};

/// What one frame observed.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub features: &'a FeatureImage,
    pub mask: &'a Mask,
    /// Normalized distance transform of `mask`.
    pub dt: &'a ScalarMap,
    /// Optional per-pixel participation weights of the image terms.
    pub ignore: Option<&'a [f64]>,
}

/// A frame taking part in the objective.
#[derive(Debug, Clone, Copy)]
pub struct FrameInput<'a> {
    pub index: usize,
    pub pose: &'a Pose,
    pub observation: Observation<'a>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObjectiveConfig {
    pub weights: LossWeights,
    pub motion: MotionThresholds,
    pub render: RenderConfig,
}

/// Per-frame image losses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameLosses {
    pub appearance: f64,
    pub silhouette: f64,
    /// The rendered silhouette was empty.
    pub degenerate: bool,
}

/// Gradient of the total objective.
#[derive(Debug, Clone)]
pub struct ObjectiveGradients {
    pub offsets: Vec<Vector3<f64>>,
    pub texture: Vec<f64>,
    pub translation: Vector3<f64>,
    pub rotation: Vector4<f64>,
    pub keyframe_translations: Vec<Vector3<f64>>,
    pub keyframe_rotations: Vec<Vector4<f64>>,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub terms: LossTerms,
    pub total: f64,
    pub current: FrameLosses,
    pub keyframes: Vec<FrameLosses>,
    pub gradients: Option<ObjectiveGradients>,
    /// Render of the current frame.
    pub render: RenderOutput,
}

/// Evaluates the objective over the current frame and the keyframes.
///
/// Appearance and silhouette terms are averaged over all participating
/// frames; the motion term ties the current pose to the latest keyframe.
pub fn evaluate(
    mesh: &DeformableMesh,
    texture: &FeatureTexture,
    camera: &Camera,
    cfg: &ObjectiveConfig,
    current: &FrameInput<'_>,
    keyframes: &[FrameInput<'_>],
    with_gradients: bool,
) -> Result<Evaluation> {
    let n_frames = keyframes.len() + 1;
    let mu = 1.0 / n_frames as f64;
    let w = &cfg.weights;

    let mut grads = with_gradients.then(|| ObjectiveGradients {
        offsets: vec![Vector3::zeros(); mesh.vertex_count()],
        texture: vec![0.0; texture.as_slice().len()],
        translation: Vector3::zeros(),
        rotation: Vector4::zeros(),
        keyframe_translations: vec![Vector3::zeros(); keyframes.len()],
        keyframe_rotations: vec![Vector4::zeros(); keyframes.len()],
    });

    let mut losses = Vec::with_capacity(n_frames);
    let mut current_render = None;
    for (slot, frame) in std::iter::once(current).chain(keyframes).enumerate() {
        let obs = &frame.observation;
        if obs.features.dims() != (camera.width, camera.height) {
            return Err(Error::ResolutionMismatch {
                what: format!("features of frame {}", frame.index),
                expected: (camera.width, camera.height),
                found: obs.features.dims(),
            });
        }
        let out = render(mesh, texture, frame.pose, camera, &cfg.render)?;
        let app = appearance_frame(&out.feature_image, &out.soft_silhouette, obs.features, obs.ignore)?;
        let sil = silhouette_frame(&out.soft_silhouette, obs.mask, obs.dt, obs.ignore)?;
        losses.push(FrameLosses {
            appearance: app.value,
            silhouette: sil.value,
            degenerate: app.degenerate,
        });
        if let Some(g) = grads.as_mut() {
            let gf: Vec<f64> = app.grad_features.iter().map(|v| v * mu * w.appearance).collect();
            let gs: Vec<f64> = app
                .grad_silhouette
                .iter()
                .zip(&sil.grad_silhouette)
                .map(|(a, s)| mu * (w.appearance * a + w.silhouette * s))
                .collect();
            let rg = render_backward(
                &out,
                mesh,
                texture,
                frame.pose,
                camera,
                &cfg.render,
                Some(&gf),
                Some(&gs),
            )?;
            for (acc, v) in g.offsets.iter_mut().zip(&rg.offsets) {
                *acc += v;
            }
            for (acc, v) in g.texture.iter_mut().zip(&rg.texture) {
                *acc += v;
            }
            if slot == 0 {
                g.translation += rg.translation;
                g.rotation += rg.rotation;
            } else {
                g.keyframe_translations[slot - 1] += rg.translation;
                g.keyframe_rotations[slot - 1] += rg.rotation;
            }
        }
        if slot == 0 {
            current_render = Some(out);
        }
    }

    let (_, appearance) = frame_average(losses.iter().map(|l| l.appearance));
    let (_, silhouette) = frame_average(losses.iter().map(|l| l.silhouette));

    let mut motion = 0.0;
    if let Some((k, anchor)) = keyframes.iter().enumerate().max_by_key(|(_, f)| f.index) {
        let gap = current.index.abs_diff(anchor.index).max(1);
        let m = motion_loss(current.pose, anchor.pose, gap, &cfg.motion)?;
        motion = m.value;
        if let Some(g) = grads.as_mut() {
            g.translation += m.grad_current_translation * w.motion;
            g.rotation += m.grad_current_rotation * w.motion;
            g.keyframe_translations[k] += m.grad_anchor_translation * w.motion;
            g.keyframe_rotations[k] += m.grad_anchor_rotation * w.motion;
        }
    }

    let lap = laplacian_loss(mesh)?;
    let tv = tv_loss(texture);
    if let Some(g) = grads.as_mut() {
        for (acc, v) in g.offsets.iter_mut().zip(&lap.grad_offsets) {
            *acc += v * w.laplacian;
        }
        for (acc, v) in g.texture.iter_mut().zip(&tv.grad_texture) {
            *acc += v * w.tv;
        }
    }

    let terms = LossTerms {
        appearance,
        silhouette,
        motion,
        laplacian: lap.value,
        tv: tv.value,
    };
    let total = total_loss(&terms, w)?;
    Ok(Evaluation {
        terms,
        total,
        current: losses[0],
        keyframes: losses[1..].to_vec(),
        gradients: grads,
        render: current_render.expect("current frame rendered"),
    })
}

/// Image losses of a single frame under the current model, with its render.
pub fn frame_losses(
    mesh: &DeformableMesh,
    texture: &FeatureTexture,
    camera: &Camera,
    cfg: &ObjectiveConfig,
    pose: &Pose,
    observation: &Observation<'_>,
) -> Result<(FrameLosses, RenderOutput)> {
    let out = render(mesh, texture, pose, camera, &cfg.render)?;
    let app = appearance_frame(
        &out.feature_image,
        &out.soft_silhouette,
        observation.features,
        observation.ignore,
    )?;
    let sil = silhouette_frame(
        &out.soft_silhouette,
        observation.mask,
        observation.dt,
        observation.ignore,
    )?;
    Ok((
        FrameLosses {
            appearance: app.value,
            silhouette: sil.value,
            degenerate: app.degenerate,
        },
        out,
    ))
}
