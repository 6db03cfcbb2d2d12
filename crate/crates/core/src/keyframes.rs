//! The dynamic set of past frames that anchor the optimization.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::features::FeatureImage;
use crate::geometry::{quaternion_angle_deg, Pose};
use crate::image::{Mask, ScalarMap};

pub const DEFAULT_CAPACITY: usize = 6;

/// Thresholds for keeping or admitting a keyframe.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct KeyframeCriteria {
    /// Per-frame silhouette loss must stay below this.
    pub max_silhouette_loss: f64,
    /// Per-frame appearance loss must stay below this.
    pub tau_f: f64,
    /// Minimum rotation to the latest keyframe, degrees.
    pub min_rotation_deg: f64,
    /// Minimum translation to the latest keyframe as a fraction of the object
    /// size.
    pub min_translation_fraction: f64,
}

impl Default for KeyframeCriteria {
    fn default() -> Self {
        Self {
            max_silhouette_loss: 0.3,
            tau_f: 0.2,
            min_rotation_deg: 45.0,
            min_translation_fraction: 0.5,
        }
    }
}

/// A past frame kept as an anchor. Its observations are shared and never
/// change; its pose keeps being refined.
#[derive(Debug, Clone)]
pub struct Keyframe {
    pub index: usize,
    pub features: Arc<FeatureImage>,
    pub mask: Arc<Mask>,
    pub dt: Arc<ScalarMap>,
    pub pose: Pose,
    pub loss_s: f64,
    pub loss_f: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    SilhouetteMisalignment,
    AppearanceMismatch,
    InsufficientViewpointChange,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::SilhouetteMisalignment => "silhouette misalignment",
            Self::AppearanceMismatch => "appearance mismatch",
            Self::InsufficientViewpointChange => "insufficient viewpoint change",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Admission {
    pub admit: bool,
    pub reasons: Vec<RejectReason>,
}

/// Ordered keyframes with strictly increasing frame indices.
#[derive(Debug, Clone)]
pub struct KeyframeSet {
    frames: Vec<Keyframe>,
    capacity: usize,
}

impl KeyframeSet {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("keyframe capacity must be at least 1".into()));
        }
        Ok(Self {
            frames: Vec::new(),
            capacity,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frames(&self) -> &[Keyframe] {
        &self.frames
    }

    pub fn frames_mut(&mut self) -> &mut [Keyframe] {
        &mut self.frames
    }

    pub fn latest(&self) -> Option<&Keyframe> {
        self.frames.last()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.frames.iter().map(|k| k.index).collect()
    }

    /// Checks a finished frame against the admission criteria.
    pub fn admission_check(
        &self,
        pose: &Pose,
        loss_s: f64,
        loss_f: f64,
        object_size: f64,
        criteria: &KeyframeCriteria,
    ) -> Result<Admission> {
        let mut reasons = Vec::new();
        if !(loss_s < criteria.max_silhouette_loss) {
            reasons.push(RejectReason::SilhouetteMisalignment);
        }
        if !(loss_f < criteria.tau_f) {
            reasons.push(RejectReason::AppearanceMismatch);
        }
        if let Some(last) = self.latest() {
            let moved =
                (pose.translation - last.pose.translation).norm() > criteria.min_translation_fraction * object_size;
            let turned = quaternion_angle_deg(&pose.rotation, &last.pose.rotation)? > criteria.min_rotation_deg;
            if !moved && !turned {
                reasons.push(RejectReason::InsufficientViewpointChange);
            }
        }
        Ok(Admission {
            admit: reasons.is_empty(),
            reasons,
        })
    }

    /// Drops keyframes whose re-evaluated losses violate the alignment
    /// criteria. `losses[i]` is `(loss_s, loss_f)` of `frames()[i]` under the
    /// current model. Returns the evicted frame indices.
    pub fn evict_misaligned(&mut self, losses: &[(f64, f64)], criteria: &KeyframeCriteria) -> Result<Vec<usize>> {
        if losses.len() != self.frames.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} keyframe evaluations for {} keyframes",
                losses.len(),
                self.frames.len()
            )));
        }
        let mut evicted = Vec::new();
        let mut kept = Vec::with_capacity(self.frames.len());
        for (mut kf, &(ls, lf)) in self.frames.drain(..).zip(losses) {
            kf.loss_s = ls;
            kf.loss_f = lf;
            if ls < criteria.max_silhouette_loss && lf < criteria.tau_f {
                kept.push(kf);
            } else {
                evicted.push(kf.index);
            }
        }
        self.frames = kept;
        Ok(evicted)
    }

    /// Appends a keyframe and drops the oldest ones beyond capacity. Returns
    /// the evicted frame indices.
    pub fn push(&mut self, keyframe: Keyframe) -> Result<Vec<usize>> {
        if let Some(last) = self.latest() {
            if keyframe.index <= last.index {
                return Err(Error::Config(format!(
                    "keyframe {} does not follow keyframe {}",
                    keyframe.index, last.index
                )));
            }
        }
        self.frames.push(keyframe);
        let excess = self.frames.len().saturating_sub(self.capacity);
        Ok(self.frames.drain(..excess).map(|k| k.index).collect())
    }
}
