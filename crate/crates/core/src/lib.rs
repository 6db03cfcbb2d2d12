//! Joint tracking, segmentation and reconstruction of a rigid object in a
//! monocular video by analysis-by-synthesis.
//!
//! A deformable sphere with a learned feature texture is rendered with a
//! differentiable rasterizer and fitted, frame by frame, to per-frame feature
//! maps and rough segmentation masks. Past frames that explain the object
//! well are kept as keyframes and anchor the optimization.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod eval;
pub mod features;
pub mod geometry;
pub mod image;
pub mod io;
pub mod keyframes;
pub mod loss;
pub mod optim;
pub mod raster;
pub mod tracker;

pub use error::{Error, Result};
pub use features::FeatureImage;
pub use geometry::{Camera, DeformableMesh, FeatureTexture, Pose};
pub use image::{Mask, ScalarMap};
pub use raster::{render, render_backward, RenderConfig, RenderGradients, RenderOutput};
pub use tracker::{init_tracker, track_frame, TrackOutput, TrackerConfig, TrackerState};
