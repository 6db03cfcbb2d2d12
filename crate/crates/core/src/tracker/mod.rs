//! Causal per-frame pipeline: initialization, optimization, keyframe
//! maintenance and the fallback to the input mask on failure.

mod backproject;
mod flat;

pub use backproject::{backproject_rgb, BackProjection};
pub use flat::{apply_flat_prior, fit_plane, max_plane_deviation, project_onto_plane};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::features::FeatureImage;
use crate::geometry::{
    make_prototype_sphere, Camera, DeformableMesh, FeatureTexture, Pose, Vector3, DEFAULT_TEXTURE_SIZE,
};
use crate::image::Mask;
use crate::keyframes::{Keyframe, KeyframeCriteria, KeyframeSet, DEFAULT_CAPACITY};
use crate::loss::{distance_transform, LossWeights, MotionThresholds};
use crate::optim::{
    frame_losses, optimize_frame, AdamConfig, FrameResult, GroupScales, ObjectiveConfig, Observation, OptimizerConfig,
    OptimizerState, Variables, DEFAULT_MAX_ITERATIONS, TAU_F_RGB,
};
use crate::raster::RenderConfig;

/// Where the object starts laterally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitPlacement {
    /// On the ray through the image centre.
    #[default]
    ImageCenter,
    /// On the ray through the centroid of the first mask.
    MaskCentroid,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    pub tau_f: f64,
    pub keyframe_capacity: usize,
    pub max_iterations: usize,
    pub flat_prior: bool,
    pub texture_size: usize,
    pub sphere_segments: usize,
    pub sphere_rings: usize,
    pub placement: InitPlacement,
    /// The first frame must also reach this silhouette loss to stop early.
    pub init_max_silhouette_loss: Option<f64>,
    /// Silhouette level above which a pixel belongs to the output mask.
    pub segmentation_threshold: f64,
    pub optimize_keyframe_poses: bool,
    pub weights: LossWeights,
    pub motion: MotionThresholds,
    pub adam: AdamConfig,
    pub scales: GroupScales,
    pub silhouette_sigma: f64,
    pub silhouette_cutoff: f64,
    pub max_keyframe_silhouette_loss: f64,
    pub min_keyframe_rotation_deg: f64,
    pub min_keyframe_translation_fraction: f64,
    pub record_history: bool,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        let crit = KeyframeCriteria::default();
        let render = RenderConfig::default();
        Self {
            tau_f: TAU_F_RGB,
            keyframe_capacity: DEFAULT_CAPACITY,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            flat_prior: false,
            texture_size: DEFAULT_TEXTURE_SIZE,
            sphere_segments: 55,
            sphere_rings: 23,
            placement: InitPlacement::ImageCenter,
            init_max_silhouette_loss: Some(crit.max_silhouette_loss),
            segmentation_threshold: 0.5,
            optimize_keyframe_poses: true,
            weights: LossWeights::default(),
            motion: MotionThresholds::default(),
            adam: AdamConfig::default(),
            scales: GroupScales::default(),
            silhouette_sigma: render.sigma,
            silhouette_cutoff: render.cutoff,
            max_keyframe_silhouette_loss: crit.max_silhouette_loss,
            min_keyframe_rotation_deg: crit.min_rotation_deg,
            min_keyframe_translation_fraction: crit.min_translation_fraction,
            record_history: false,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if self.keyframe_capacity == 0 {
            return Err(Error::Config("keyframe capacity must be at least 1".into()));
        }
        if self.texture_size == 0 {
            return Err(Error::Config("texture size must be positive".into()));
        }
        if !(self.tau_f > 0.0) {
            return Err(Error::Config(format!("tau_f must be positive, got {}", self.tau_f)));
        }
        if !(self.silhouette_sigma > 0.0) || !(self.silhouette_cutoff > 0.0) {
            return Err(Error::Config("silhouette kernel parameters must be positive".into()));
        }
        Ok(())
    }

    pub fn render(&self) -> RenderConfig {
        RenderConfig {
            sigma: self.silhouette_sigma,
            cutoff: self.silhouette_cutoff,
            ..RenderConfig::default()
        }
    }

    pub fn criteria(&self) -> KeyframeCriteria {
        KeyframeCriteria {
            max_silhouette_loss: self.max_keyframe_silhouette_loss,
            tau_f: self.tau_f,
            min_rotation_deg: self.min_keyframe_rotation_deg,
            min_translation_fraction: self.min_keyframe_translation_fraction,
        }
    }

    pub fn objective(&self) -> ObjectiveConfig {
        ObjectiveConfig {
            weights: self.weights,
            motion: self.motion,
            render: self.render(),
        }
    }

    pub fn optimizer(&self) -> OptimizerConfig {
        OptimizerConfig {
            adam: self.adam,
            scales: self.scales,
            objective: self.objective(),
            max_iterations: self.max_iterations,
            tau_f: self.tau_f,
            max_silhouette_loss: None,
            optimize_keyframe_poses: self.optimize_keyframe_poses,
            flat_prior: self.flat_prior,
            record_history: self.record_history,
        }
    }
}

/// Result of tracking one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackOutput {
    pub index: usize,
    pub segmentation: Mask,
    pub pose: Pose,
    pub failed: bool,
    /// Keyframe indices after this frame.
    pub keyframes: Vec<usize>,
    pub result: FrameResult,
}

/// Model, poses and keyframes of one tracked sequence.
#[derive(Debug, Clone)]
pub struct TrackerState {
    camera: Camera,
    config: TrackerConfig,
    mesh: DeformableMesh,
    texture: FeatureTexture,
    pose: Pose,
    poses: Vec<Pose>,
    keyframes: KeyframeSet,
    optimizer: OptimizerState,
    results: Vec<FrameResult>,
}

/// Initial depth at which a unit-diameter object spans the image height.
pub fn initial_depth(camera: &Camera) -> f64 {
    0.5 / (0.5 * camera.fov_y_deg.to_radians()).tan()
}

/// Builds the initial model and tracks the first frame, which becomes the
/// first keyframe.
pub fn init_tracker(
    features: &FeatureImage,
    mask: &Mask,
    camera: Camera,
    config: TrackerConfig,
) -> Result<(TrackerState, TrackOutput)> {
    config.validate()?;
    check_frame(&camera, features, mask)?;
    if mask.is_empty() {
        return Err(Error::EmptyMask("the first mask has no foreground".into()));
    }
    let mut mesh = make_prototype_sphere(config.sphere_segments, config.sphere_rings)?;
    let texture = FeatureTexture::zeros(config.texture_size, config.texture_size, features.channels());
    let depth = initial_depth(&camera);
    let translation = match config.placement {
        InitPlacement::ImageCenter => Vector3::new(0.0, 0.0, -depth),
        InitPlacement::MaskCentroid => {
            let (u, v) = mask.centroid().expect("mask is not empty");
            camera.unproject(u, v, depth)
        }
    };
    if config.flat_prior {
        // start from the disk facing the camera
        project_onto_plane(&mut mesh, &Vector3::zeros(), &Vector3::z());
    }
    let optimizer = OptimizerState::new(&mesh, &texture);
    let mut state = TrackerState {
        camera,
        keyframes: KeyframeSet::new(config.keyframe_capacity)?,
        config,
        mesh,
        texture,
        pose: Pose::new(translation, crate::geometry::Vector4::new(1.0, 0.0, 0.0, 0.0)),
        poses: Vec::new(),
        optimizer,
        results: Vec::new(),
    };
    let out = state.step(features, mask, true)?;
    Ok((state, out))
}

fn check_frame(camera: &Camera, features: &FeatureImage, mask: &Mask) -> Result<()> {
    let expected = (camera.width, camera.height);
    if features.dims() != expected {
        return Err(Error::ResolutionMismatch {
            what: "feature image".into(),
            expected,
            found: features.dims(),
        });
    }
    if mask.dims() != expected {
        return Err(Error::ResolutionMismatch {
            what: "mask".into(),
            expected,
            found: mask.dims(),
        });
    }
    Ok(())
}

/// Tracks the next frame.
pub fn track_frame(state: &mut TrackerState, features: &FeatureImage, mask: &Mask) -> Result<TrackOutput> {
    if state.poses.is_empty() {
        return Err(Error::Uninitialized);
    }
    state.step(features, mask, false)
}

impl TrackerState {
    pub fn camera(&self) -> &Camera {
        &self.camera
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    pub fn mesh(&self) -> &DeformableMesh {
        &self.mesh
    }

    pub fn texture(&self) -> &FeatureTexture {
        &self.texture
    }

    /// Pose estimate of the latest frame.
    pub fn pose(&self) -> &Pose {
        &self.pose
    }

    /// Pose of every processed frame, as estimated when it was tracked.
    pub fn poses(&self) -> &[Pose] {
        &self.poses
    }

    pub fn keyframes(&self) -> &KeyframeSet {
        &self.keyframes
    }

    pub fn results(&self) -> &[FrameResult] {
        &self.results
    }

    pub fn frames_processed(&self) -> usize {
        self.poses.len()
    }

    fn step(&mut self, features: &FeatureImage, mask: &Mask, first: bool) -> Result<TrackOutput> {
        check_frame(&self.camera, features, mask)?;
        if features.channels() != self.texture.channels() {
            return Err(Error::ChannelMismatch {
                expected: self.texture.channels(),
                found: features.channels(),
            });
        }
        let index = self.poses.len();
        let dt = distance_transform(mask).map;
        let observation = Observation {
            features,
            mask,
            dt: &dt,
            ignore: None,
        };

        let initial_pose = self.pose;
        let snapshot = (!first).then(|| {
            (
                self.mesh.offsets().to_vec(),
                self.texture.clone(),
                self.keyframes.clone(),
                self.optimizer.clone(),
            )
        });

        let mut opt = self.config.optimizer();
        if first {
            opt.max_silhouette_loss = self.config.init_max_silhouette_loss;
        }
        let result = optimize_frame(
            Variables {
                mesh: &mut self.mesh,
                texture: &mut self.texture,
                pose: &mut self.pose,
                keyframes: &mut self.keyframes,
                state: &mut self.optimizer,
            },
            index,
            observation,
            &self.camera,
            &opt,
        );

        let failed = result.failed && !first;
        let segmentation;
        if failed {
            let (offsets, texture, keyframes, optimizer) = snapshot.expect("taken for later frames");
            self.mesh.set_offsets(offsets)?;
            self.texture = texture;
            self.keyframes = keyframes;
            self.optimizer = optimizer;
            self.pose = initial_pose;
            segmentation = mask.clone();
        } else {
            let objective = self.config.objective();
            let (_, render) = frame_losses(
                &self.mesh,
                &self.texture,
                &self.camera,
                &objective,
                &self.pose,
                &observation,
            )?;
            segmentation = render.soft_silhouette.threshold(self.config.segmentation_threshold);
            self.maintain_keyframes(index, features, mask, dt, &result, first)?;
        }

        self.poses.push(self.pose);
        self.results.push(result.clone());
        Ok(TrackOutput {
            index,
            segmentation,
            pose: self.pose,
            failed,
            keyframes: self.keyframes.indices(),
            result,
        })
    }

    fn maintain_keyframes(
        &mut self,
        index: usize,
        features: &FeatureImage,
        mask: &Mask,
        dt: crate::image::ScalarMap,
        result: &FrameResult,
        first: bool,
    ) -> Result<()> {
        let criteria = self.config.criteria();
        let objective = self.config.objective();
        let mut losses = Vec::with_capacity(self.keyframes.len());
        for kf in self.keyframes.frames() {
            let obs = Observation {
                features: &kf.features,
                mask: &kf.mask,
                dt: &kf.dt,
                ignore: None,
            };
            let (l, _) = frame_losses(&self.mesh, &self.texture, &self.camera, &objective, &kf.pose, &obs)?;
            losses.push((l.silhouette, l.appearance));
        }
        for gone in self.keyframes.evict_misaligned(&losses, &criteria)? {
            self.optimizer.keyframes.remove(&gone);
        }

        let admit = first
            || self
                .keyframes
                .admission_check(
                    &self.pose,
                    result.loss_s,
                    result.loss_f,
                    self.mesh.bounding_diameter(),
                    &criteria,
                )?
                .admit;
        if admit {
            let kf = Keyframe {
                index,
                features: Arc::new(features.clone()),
                mask: Arc::new(mask.clone()),
                dt: Arc::new(dt),
                pose: self.pose,
                loss_s: result.loss_s,
                loss_f: result.loss_f,
            };
            self.optimizer.keyframes.insert(index, self.optimizer.pose.clone());
            for gone in self.keyframes.push(kf)? {
                self.optimizer.keyframes.remove(&gone);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
