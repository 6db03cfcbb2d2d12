use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::features::FeatureImage;
use crate::image::Mask;
use crate::tracker::{BackProjection, TrackerState};

use super::{create_dir, frame_file_name, save_mask, save_rgb, write_obj, write_trajectory, TrajectoryRecord};

/// Layout of an output directory.
#[derive(Debug, Clone)]
pub struct ExportPaths {
    pub root: PathBuf,
}

impl ExportPaths {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn trajectory(&self) -> PathBuf {
        self.root.join("trajectory.csv")
    }

    pub fn mesh(&self) -> PathBuf {
        self.root.join("mesh.obj")
    }

    pub fn texture(&self) -> PathBuf {
        self.root.join("texture.png")
    }

    pub fn masks_dir(&self) -> PathBuf {
        self.root.join("masks")
    }

    pub fn overlays_dir(&self) -> PathBuf {
        self.root.join("overlays")
    }

    pub fn mask(&self, index: usize) -> PathBuf {
        self.masks_dir().join(frame_file_name(index))
    }

    pub fn overlay(&self, index: usize) -> PathBuf {
        self.overlays_dir().join(frame_file_name(index))
    }

    /// Creates the directory tree.
    pub fn create(&self) -> Result<()> {
        create_dir(&self.root)?;
        create_dir(&self.masks_dir())?;
        create_dir(&self.overlays_dir())
    }

    /// Writes the output segmentation of one frame and, given the color
    /// frame, its overlay.
    pub fn write_frame(&self, index: usize, segmentation: &Mask, rgb: Option<&FeatureImage>) -> Result<()> {
        save_mask(self.mask(index), segmentation)?;
        if let Some(rgb) = rgb {
            save_rgb(self.overlay(index), &overlay(rgb, segmentation)?)?;
        }
        Ok(())
    }
}

/// Writes the trajectory, the reconstructed mesh and, if given, the
/// back-projected color texture.
pub fn export_outputs(
    paths: &ExportPaths,
    state: Option<&TrackerState>,
    trajectory: &[TrajectoryRecord],
    texture: Option<&BackProjection>,
) -> Result<()> {
    create_dir(&paths.root)?;
    write_trajectory(paths.trajectory(), trajectory)?;
    if let Some(state) = state {
        write_obj(paths.mesh(), state.mesh())?;
    }
    if let Some(bp) = texture {
        let t = &bp.texture;
        let img = FeatureImage::from_vec(t.width(), t.height(), t.channels(), t.as_slice().to_vec())?;
        save_rgb(paths.texture(), &img)?;
    }
    Ok(())
}

/// Color frame with the mask tinted and its boundary highlighted.
pub fn overlay(rgb: &FeatureImage, mask: &Mask) -> Result<FeatureImage> {
    if rgb.dims() != mask.dims() {
        return Err(Error::ResolutionMismatch {
            what: "overlay".into(),
            expected: rgb.dims(),
            found: mask.dims(),
        });
    }
    let (w, h) = rgb.dims();
    let mut out = rgb.clone();
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            let edge = x == 0
                || y == 0
                || x + 1 == w
                || y + 1 == h
                || !mask.get(x - 1, y)
                || !mask.get(x + 1, y)
                || !mask.get(x, y - 1)
                || !mask.get(x, y + 1);
            let px = out.pixel_mut(x, y);
            if edge {
                px.copy_from_slice(&[1.0, 1.0, 0.0]);
            } else {
                px[0] = 0.5 * px[0] + 0.5;
                px[1] *= 0.5;
                px[2] *= 0.5;
            }
        }
    }
    Ok(out)
}
