//! Sequence ingestion, exports and the synthetic sequence generator.

mod export;
mod manifest;
mod obj;
pub mod synth;
mod trajectory;

pub use export::{export_outputs, overlay, ExportPaths};
pub use manifest::{load_sequence, Manifest, ManifestFrame, Sequence};
pub use obj::{read_obj, write_obj, ObjMesh};
pub use trajectory::{read_trajectory, write_trajectory, TrajectoryRecord};

use std::path::Path;

use crate::error::{Error, Result};
use crate::features::{decode_identity, FeatureImage};
use crate::image::Mask;

/// Loads a mask image; pixels with luma at least 128 are foreground.
pub fn load_mask(path: impl AsRef<Path>) -> Result<Mask> {
    let path = path.as_ref();
    let img = image::open(path)
        .map_err(|e| Error::Image {
            path: path.to_path_buf(),
            source: e,
        })?
        .to_luma8();
    let (w, h) = img.dimensions();
    Mask::from_vec(w as usize, h as usize, img.pixels().map(|p| p.0[0] >= 128).collect())
}

/// Writes a mask as an 8-bit PNG with values 0 and 255.
pub fn save_mask(path: impl AsRef<Path>, mask: &Mask) -> Result<()> {
    let path = path.as_ref();
    let (w, h) = mask.dims();
    let img = image::GrayImage::from_raw(
        w as u32,
        h as u32,
        mask.as_slice().iter().map(|&m| if m { 255 } else { 0 }).collect(),
    )
    .expect("buffer matches dimensions");
    img.save(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Writes a three-channel feature image as an RGB PNG.
pub fn save_rgb(path: impl AsRef<Path>, image: &FeatureImage) -> Result<()> {
    let path = path.as_ref();
    if image.channels() != 3 {
        return Err(Error::ChannelMismatch {
            expected: 3,
            found: image.channels(),
        });
    }
    decode_identity(image).save(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        source: e,
    })
}

pub(crate) fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// File name of frame `index` in per-frame image folders.
pub fn frame_file_name(index: usize) -> String {
    format!("{index:05}.png")
}
