use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{encode_identity, load_feature_map, FeatureImage};
use crate::geometry::{Camera, DEFAULT_FOV_Y_DEG};
use crate::image::Mask;

/// On-disk description of a sequence. Paths are relative to the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub id: String,
    #[serde(default = "default_fov")]
    pub fov_y_deg: f64,
    pub frames: Vec<ManifestFrame>,
}

fn default_fov() -> f64 {
    DEFAULT_FOV_Y_DEG
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFrame {
    pub image: PathBuf,
    pub mask: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<PathBuf>,
}

/// A validated sequence with absolute frame paths.
#[derive(Debug, Clone)]
pub struct Sequence {
    pub id: String,
    pub camera: Camera,
    pub frames: Vec<ManifestFrame>,
}

impl Manifest {
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Reads and validates a manifest: every referenced file exists and every
/// image and mask shares the resolution of the first frame.
pub fn load_sequence(path: impl AsRef<Path>) -> Result<Sequence> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    if manifest.frames.is_empty() {
        return Err(Error::EmptySequence);
    }
    let root = path.parent().unwrap_or(Path::new("."));
    let mut frames = Vec::with_capacity(manifest.frames.len());
    let mut dims = None;
    for f in &manifest.frames {
        let frame = ManifestFrame {
            image: root.join(&f.image),
            mask: root.join(&f.mask),
            features: f.features.as_ref().map(|p| root.join(p)),
        };
        for p in [&frame.image, &frame.mask] {
            let d = image::image_dimensions(p).map_err(|e| match e {
                image::ImageError::IoError(io) => Error::io(p, io),
                other => Error::Image {
                    path: p.clone(),
                    source: other,
                },
            })?;
            let d = (d.0 as usize, d.1 as usize);
            match dims {
                None => dims = Some(d),
                Some(expected) if expected != d => {
                    return Err(Error::ResolutionMismatch {
                        what: p.display().to_string(),
                        expected,
                        found: d,
                    })
                }
                _ => {}
            }
        }
        if let Some(p) = &frame.features {
            if !p.exists() {
                return Err(Error::io(p, std::io::Error::from(std::io::ErrorKind::NotFound)));
            }
        }
        frames.push(frame);
    }
    let (w, h) = dims.expect("at least one frame");
    Ok(Sequence {
        id: manifest.id,
        camera: Camera {
            width: w,
            height: h,
            fov_y_deg: manifest.fov_y_deg,
        },
        frames,
    })
}

impl Sequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// RGB frame as identity features in `[0, 1]`.
    pub fn load_rgb(&self, index: usize) -> Result<FeatureImage> {
        let p = &self.frames[index].image;
        let img = image::open(p)
            .map_err(|e| Error::Image {
                path: p.clone(),
                source: e,
            })?
            .to_rgb8();
        Ok(encode_identity(&img))
    }

    pub fn load_mask(&self, index: usize) -> Result<Mask> {
        super::load_mask(&self.frames[index].mask)
    }

    /// Precomputed feature map of a frame. Maps at a different resolution
    /// are resampled to the image size.
    pub fn load_features(&self, index: usize) -> Result<FeatureImage> {
        let p = self.frames[index]
            .features
            .as_ref()
            .ok_or_else(|| Error::FeatureFormat {
                path: self.frames[index].image.clone(),
                reason: "frame has no feature map".into(),
            })?;
        let f = load_feature_map(p)?;
        if f.dims() != (self.camera.width, self.camera.height) {
            return Ok(f.resize_bilinear(self.camera.width, self.camera.height));
        }
        Ok(f)
    }
}
