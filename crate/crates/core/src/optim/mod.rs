//! Per-frame minimization of the objective with ADAM.

mod adam;
mod objective;

pub use adam::{AdamConfig, AdamGroup};
pub use objective::{
    evaluate, frame_losses, Evaluation, FrameInput, FrameLosses, ObjectiveConfig, ObjectiveGradients, Observation,
};

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::Result;
use crate::features::FeatureImage;
use crate::geometry::{Camera, DeformableMesh, FeatureTexture, Pose, Vector3};
use crate::image::{Mask, ScalarMap};
use crate::keyframes::KeyframeSet;
use crate::loss::LossTerms;

pub const DEFAULT_MAX_ITERATIONS: usize = 500;
/// Appearance threshold for identity (RGB) features.
pub const TAU_F_RGB: f64 = 0.2;
/// Appearance threshold for learned deep features.
pub const TAU_F_DEEP: f64 = 0.05;

/// Learning-rate multipliers per parameter group.
/// Offsets and texture are damped by default so rigid motion is taken up by
/// the pose.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct GroupScales {
    pub offsets: f64,
    pub texture: f64,
    pub translation: f64,
    pub rotation: f64,
}

impl Default for GroupScales {
    fn default() -> Self {
        Self {
            offsets: 0.01,
            texture: 0.03,
            translation: 0.3,
            rotation: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub adam: AdamConfig,
    pub scales: GroupScales,
    pub objective: ObjectiveConfig,
    pub max_iterations: usize,
    pub tau_f: f64,
    /// Also require the current silhouette loss below this to stop.
    pub max_silhouette_loss: Option<f64>,
    pub optimize_keyframe_poses: bool,
    /// Project the mesh onto its best-fit plane after every step.
    pub flat_prior: bool,
    pub record_history: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            adam: AdamConfig::default(),
            scales: GroupScales::default(),
            objective: ObjectiveConfig::default(),
            max_iterations: DEFAULT_MAX_ITERATIONS,
            tau_f: TAU_F_RGB,
            max_silhouette_loss: None,
            optimize_keyframe_poses: true,
            flat_prior: false,
            record_history: false,
        }
    }
}

/// ADAM moments of a pose.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseMoments {
    pub translation: AdamGroup,
    pub rotation: AdamGroup,
}

impl Default for PoseMoments {
    fn default() -> Self {
        Self {
            translation: AdamGroup::new(3),
            rotation: AdamGroup::new(4),
        }
    }
}

impl PoseMoments {
    fn step(
        &mut self,
        cfg: &OptimizerConfig,
        pose: &mut Pose,
        gt: &Vector3<f64>,
        gq: &crate::geometry::Vector4<f64>,
    ) -> Result<()> {
        self.translation.step(
            &cfg.adam,
            cfg.scales.translation,
            pose.translation.as_mut_slice(),
            gt.as_slice(),
        )?;
        self.rotation.step(
            &cfg.adam,
            cfg.scales.rotation,
            pose.rotation.as_mut_slice(),
            gq.as_slice(),
        )?;
        pose.normalize()
    }
}

/// Optimizer memory carried from frame to frame. The current-frame pose
/// moments follow the pose into the next frame; keyframes keep their own.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub offsets: AdamGroup,
    pub texture: AdamGroup,
    pub pose: PoseMoments,
    pub keyframes: BTreeMap<usize, PoseMoments>,
}

impl OptimizerState {
    pub fn new(mesh: &DeformableMesh, texture: &FeatureTexture) -> Self {
        Self {
            offsets: AdamGroup::new(mesh.vertex_count() * 3),
            texture: AdamGroup::new(texture.as_slice().len()),
            pose: PoseMoments::default(),
            keyframes: BTreeMap::new(),
        }
    }
}

/// Everything the optimizer may change.
pub struct Variables<'a> {
    pub mesh: &'a mut DeformableMesh,
    pub texture: &'a mut FeatureTexture,
    pub pose: &'a mut Pose,
    pub keyframes: &'a mut KeyframeSet,
    pub state: &'a mut OptimizerState,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub total: f64,
    pub terms: LossTerms,
    pub loss_f: f64,
    pub loss_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub converged: bool,
    pub failed: bool,
    /// Objective evaluations performed.
    pub iterations: usize,
    /// Current-frame appearance loss at the end.
    pub loss_f: f64,
    /// Current-frame silhouette loss at the end.
    pub loss_s: f64,
    pub total: f64,
    pub terms: LossTerms,
    pub diagnostic: Option<String>,
    pub history: Vec<IterationRecord>,
}

struct KeyframeObs {
    index: usize,
    features: Arc<FeatureImage>,
    mask: Arc<Mask>,
    dt: Arc<ScalarMap>,
}

fn keyframe_inputs<'a>(obs: &'a [KeyframeObs], poses: &'a [Pose]) -> Vec<FrameInput<'a>> {
    obs.iter()
        .zip(poses)
        .map(|(k, p)| FrameInput {
            index: k.index,
            pose: p,
            observation: Observation {
                features: &k.features,
                mask: &k.mask,
                dt: &k.dt,
                ignore: None,
            },
        })
        .collect()
}

/// Minimizes the objective for frame `frame_index` until the current-frame
/// appearance loss drops below `tau_f` or the iteration budget runs out.
///
/// Errors raised while optimizing are reported through
/// [`FrameResult::diagnostic`] as a failed frame.
pub fn optimize_frame(
    vars: Variables<'_>,
    frame_index: usize,
    observation: Observation<'_>,
    camera: &Camera,
    config: &OptimizerConfig,
) -> FrameResult {
    let mut history = Vec::new();
    match run(vars, frame_index, observation, camera, config, &mut history) {
        Ok(mut r) => {
            r.history = history;
            r
        }
        Err(e) => FrameResult {
            converged: false,
            failed: true,
            iterations: history.len(),
            loss_f: f64::NAN,
            loss_s: f64::NAN,
            total: f64::NAN,
            terms: LossTerms::default(),
            diagnostic: Some(e.to_string()),
            history,
        },
    }
}

fn run(
    vars: Variables<'_>,
    frame_index: usize,
    observation: Observation<'_>,
    camera: &Camera,
    config: &OptimizerConfig,
    history: &mut Vec<IterationRecord>,
) -> Result<FrameResult> {
    let Variables {
        mesh,
        texture,
        pose,
        keyframes,
        state,
    } = vars;
    let kf_obs: Vec<KeyframeObs> = keyframes
        .frames()
        .iter()
        .map(|k| KeyframeObs {
            index: k.index,
            features: k.features.clone(),
            mask: k.mask.clone(),
            dt: k.dt.clone(),
        })
        .collect();
    let mut kf_poses: Vec<Pose> = keyframes.frames().iter().map(|k| k.pose).collect();
    for k in &kf_obs {
        state.keyframes.entry(k.index).or_default();
    }

    let converged_on = |e: &Evaluation| {
        !e.current.degenerate
            && e.current.appearance < config.tau_f
            && config.max_silhouette_loss.is_none_or(|t| e.current.silhouette < t)
    };

    let mut offsets_buf = vec![0.0; mesh.vertex_count() * 3];
    let mut last: Option<Evaluation> = None;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iterations {
        let current = FrameInput {
            index: frame_index,
            pose,
            observation,
        };
        let frames = keyframe_inputs(&kf_obs, &kf_poses);
        let eval = evaluate(mesh, texture, camera, &config.objective, &current, &frames, true)?;
        iterations += 1;
        if config.record_history {
            history.push(IterationRecord {
                iteration: iterations - 1,
                total: eval.total,
                terms: eval.terms,
                loss_f: eval.current.appearance,
                loss_s: eval.current.silhouette,
            });
        }
        if converged_on(&eval) {
            converged = true;
            last = Some(eval);
            break;
        }
        let g = eval.gradients.as_ref().expect("gradients requested");

        for (dst, v) in offsets_buf.chunks_exact_mut(3).zip(&g.offsets) {
            dst.copy_from_slice(v.as_slice());
        }
        let mut params: Vec<f64> = mesh.offsets().iter().flat_map(|o| [o.x, o.y, o.z]).collect();
        state
            .offsets
            .step(&config.adam, config.scales.offsets, &mut params, &offsets_buf)?;
        for (o, p) in mesh.offsets_mut().iter_mut().zip(params.chunks_exact(3)) {
            *o = Vector3::new(p[0], p[1], p[2]);
        }
        state
            .texture
            .step(&config.adam, config.scales.texture, texture.as_mut_slice(), &g.texture)?;
        state.pose.step(config, pose, &g.translation, &g.rotation)?;
        if config.optimize_keyframe_poses {
            for (i, (k, kp)) in kf_obs.iter().zip(kf_poses.iter_mut()).enumerate() {
                let moments = state.keyframes.get_mut(&k.index).expect("moments allocated");
                moments.step(config, kp, &g.keyframe_translations[i], &g.keyframe_rotations[i])?;
            }
        }
        if config.flat_prior {
            crate::tracker::apply_flat_prior(mesh)?;
        }
        last = Some(eval);
    }

    for (kf, p) in keyframes.frames_mut().iter_mut().zip(&kf_poses) {
        kf.pose = *p;
    }

    // after a failed budget the parameters moved once more since the last
    // evaluation; report the losses of the final parameters
    let fin = if converged {
        last.expect("evaluated at least once")
    } else {
        let frames = keyframe_inputs(&kf_obs, &kf_poses);
        let current = FrameInput {
            index: frame_index,
            pose,
            observation,
        };
        evaluate(mesh, texture, camera, &config.objective, &current, &frames, false)?
    };
    Ok(FrameResult {
        converged,
        failed: !converged,
        iterations,
        loss_f: fin.current.appearance,
        loss_s: fin.current.silhouette,
        total: fin.total,
        terms: fin.terms,
        diagnostic: None,
        history: Vec::new(),
    })
}
