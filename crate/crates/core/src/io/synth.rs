//! Synthetic sequences with exact ground truth, rendered with the same
//! rasterizer the tracker uses.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureImage;
use crate::geometry::{
    make_prototype_sphere, quaternion_from_axis_angle, quaternion_multiply, Camera, DeformableMesh, FeatureTexture,
    Pose, Vector3, DEFAULT_FOV_Y_DEG,
};
use crate::image::Mask;
use crate::raster::{render, RenderConfig};

use super::{
    create_dir, frame_file_name, save_mask, save_rgb, write_trajectory, Manifest, ManifestFrame, TrajectoryRecord,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeSpec {
    Ellipsoid {
        radii: [f64; 3],
    },
    /// Axis-aligned box; a cube has equal half extents, a card one small one.
    Box {
        half_extents: [f64; 3],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TextureSpec {
    pub size: usize,
    /// Checker cells along each texture axis.
    pub cells: usize,
}

impl Default for TextureSpec {
    fn default() -> Self {
        Self { size: 256, cells: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Background {
    Checker { cell: usize, colors: [[f64; 3]; 2] },
    Constant { color: [f64; 3] },
}

impl Default for Background {
    fn default() -> Self {
        Background::Checker {
            cell: 8,
            colors: [[0.35, 0.35, 0.35], [0.6, 0.6, 0.6]],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PoseScript {
    /// Spin about an object axis at a constant rate in front of the camera.
    Turntable {
        degrees_per_frame: f64,
        #[serde(default = "default_axis")]
        axis: [f64; 3],
        /// Fixed tilt towards the camera about the camera x axis.
        #[serde(default)]
        tilt_deg: f64,
        /// Object centre in camera coordinates.
        center: [f64; 3],
    },
}

fn default_axis() -> [f64; 3] {
    [0.0, 1.0, 0.0]
}

/// Morphological corruption of the ground-truth silhouette used as input
/// mask. Positive values dilate, negative values erode, by that many pixels.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaskNoise {
    pub grow_px: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    #[serde(default = "default_id")]
    pub id: String,
    pub width: usize,
    pub height: usize,
    #[serde(default = "default_fov")]
    pub fov_y_deg: f64,
    pub frames: usize,
    pub shape: ShapeSpec,
    #[serde(default)]
    pub texture: TextureSpec,
    #[serde(default)]
    pub background: Background,
    pub script: PoseScript,
    #[serde(default)]
    pub mask_noise: MaskNoise,
    #[serde(default)]
    pub seed: u64,
    /// Tessellation of the ground-truth mesh, `(segments, rings)`.
    #[serde(default = "default_tessellation")]
    pub tessellation: (usize, usize),
}

fn default_id() -> String {
    "synthetic".into()
}

fn default_fov() -> f64 {
    DEFAULT_FOV_Y_DEG
}

fn default_tessellation() -> (usize, usize) {
    (48, 24)
}

impl SyntheticSpec {
    /// A textured convex object spinning about its vertical axis.
    pub fn turntable(width: usize, height: usize, frames: usize, degrees_per_frame: f64) -> Self {
        Self {
            id: "turntable".into(),
            width,
            height,
            fov_y_deg: DEFAULT_FOV_Y_DEG,
            frames,
            shape: ShapeSpec::Ellipsoid {
                radii: [0.45, 0.35, 0.3],
            },
            texture: TextureSpec::default(),
            background: Background::default(),
            script: PoseScript::Turntable {
                degrees_per_frame,
                axis: default_axis(),
                tilt_deg: 20.0,
                center: [0.0, 0.0, -2.0],
            },
            mask_noise: MaskNoise::default(),
            seed: 7,
            tessellation: default_tessellation(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config("image size must be positive".into()));
        }
        if self.frames == 0 {
            return Err(Error::EmptySequence);
        }
        if self.texture.size == 0 || self.texture.cells == 0 {
            return Err(Error::Config("texture size and cell count must be positive".into()));
        }
        let PoseScript::Turntable {
            degrees_per_frame,
            axis,
            tilt_deg,
            center,
        } = &self.script;
        if !degrees_per_frame.is_finite() || !tilt_deg.is_finite() {
            return Err(Error::Config("pose script angles must be finite".into()));
        }
        if Vector3::from(*axis).norm() == 0.0 {
            return Err(Error::Config("pose script axis must be nonzero".into()));
        }
        if !(center[2] < -0.5) || !center.iter().all(|c| c.is_finite()) {
            return Err(Error::Config(
                "pose script places the object behind or at the camera".into(),
            ));
        }
        match &self.shape {
            ShapeSpec::Ellipsoid { radii: e } | ShapeSpec::Box { half_extents: e } => {
                if !e.iter().all(|&r| r > 0.0 && r.is_finite()) {
                    return Err(Error::Config("shape extents must be positive".into()));
                }
            }
        }
        Ok(())
    }

    pub fn camera(&self) -> Camera {
        Camera {
            width: self.width,
            height: self.height,
            fov_y_deg: self.fov_y_deg,
        }
    }

    /// Ground-truth pose of frame `n`.
    pub fn pose(&self, n: usize) -> Pose {
        let PoseScript::Turntable {
            degrees_per_frame,
            axis,
            tilt_deg,
            center,
        } = &self.script;
        let spin = quaternion_from_axis_angle(&Vector3::from(*axis), (degrees_per_frame * n as f64).to_radians());
        let tilt = quaternion_from_axis_angle(&Vector3::x(), tilt_deg.to_radians());
        Pose::new(Vector3::from(*center), quaternion_multiply(&tilt, &spin))
    }
}

/// One rendered frame.
#[derive(Debug, Clone)]
pub struct SyntheticFrame {
    pub rgb: FeatureImage,
    /// Tracker input mask.
    pub mask: Mask,
    pub gt_mask: Mask,
}

#[derive(Debug, Clone)]
pub struct SyntheticSequence {
    pub spec: SyntheticSpec,
    pub camera: Camera,
    pub mesh: DeformableMesh,
    pub texture: FeatureTexture,
    pub frames: Vec<SyntheticFrame>,
    pub gt_poses: Vec<Pose>,
}

/// Ground-truth mesh: the prototype sphere mapped onto the requested shape.
pub fn shape_mesh(shape: &ShapeSpec, tessellation: (usize, usize)) -> Result<DeformableMesh> {
    let sphere = make_prototype_sphere(tessellation.0, tessellation.1)?;
    let verts: Vec<Vector3<f64>> = sphere
        .prototype()
        .iter()
        .map(|p| {
            let d = p.normalize();
            match shape {
                ShapeSpec::Ellipsoid { radii } => Vector3::new(d.x * radii[0], d.y * radii[1], d.z * radii[2]),
                ShapeSpec::Box { half_extents: e } => {
                    // scale the direction until it meets the box surface
                    let t = (0..3)
                        .filter(|&k| d[k] != 0.0)
                        .map(|k| e[k] / d[k].abs())
                        .fold(f64::INFINITY, f64::min);
                    d * t
                }
            }
        })
        .collect();
    sphere.with_prototype(verts)
}

/// Checker texture whose cells alternate between dark and bright shades of
/// random hues.
pub fn checker_texture(spec: &TextureSpec, seed: u64) -> FeatureTexture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.cells;
    let colors: Vec<[f64; 3]> = (0..n * n)
        .map(|i| {
            let hue: f64 = rng.gen_range(0.0..1.0);
            let bright = if (i / n + i % n).is_multiple_of(2) { 1.0 } else { 0.3 };
            let base = hue_to_rgb(hue);
            [base[0] * bright, base[1] * bright, base[2] * bright]
        })
        .collect();
    let size = spec.size;
    FeatureTexture::from_fn(size, size, 3, |x, y, t| {
        let cx = (x * n / size).min(n - 1);
        let cy = (y * n / size).min(n - 1);
        t.copy_from_slice(&colors[cy * n + cx]);
    })
}

fn hue_to_rgb(h: f64) -> [f64; 3] {
    let f = |k: f64| {
        let k = (k + h * 6.0) % 6.0;
        1.0 - (k.min(4.0 - k).clamp(0.0, 1.0)) * 0.8
    };
    [f(5.0), f(3.0), f(1.0)]
}

fn background_image(bg: &Background, width: usize, height: usize) -> FeatureImage {
    let mut img = FeatureImage::zeros(width, height, 3);
    for y in 0..height {
        for x in 0..width {
            let c = match bg {
                Background::Checker { cell, colors } => {
                    let cell = (*cell).max(1);
                    colors[(x / cell + y / cell) % 2]
                }
                Background::Constant { color } => *color,
            };
            img.pixel_mut(x, y).copy_from_slice(&c);
        }
    }
    img
}

/// Renders every frame of the script.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticSequence> {
    spec.validate()?;
    let camera = spec.camera();
    let mesh = shape_mesh(&spec.shape, spec.tessellation)?;
    let texture = checker_texture(&spec.texture, spec.seed);
    let background = background_image(&spec.background, spec.width, spec.height);
    let cfg = RenderConfig::default();
    let mut frames = Vec::with_capacity(spec.frames);
    let mut gt_poses = Vec::with_capacity(spec.frames);
    for n in 0..spec.frames {
        let pose = spec.pose(n);
        let out = render(&mesh, &texture, &pose, &camera, &cfg)?;
        let gt_mask = out.coverage();
        let mut rgb = background.clone();
        for y in 0..spec.height {
            for x in 0..spec.width {
                if gt_mask.get(x, y) {
                    rgb.pixel_mut(x, y).copy_from_slice(out.feature_image.pixel(x, y));
                }
            }
        }
        let g = spec.mask_noise.grow_px;
        let mask = if g > 0.0 {
            gt_mask.dilate(g)
        } else if g < 0.0 {
            gt_mask.erode(-g)
        } else {
            gt_mask.clone()
        };
        frames.push(SyntheticFrame { rgb, mask, gt_mask });
        gt_poses.push(pose);
    }
    Ok(SyntheticSequence {
        spec: spec.clone(),
        camera,
        mesh,
        texture,
        frames,
        gt_poses,
    })
}

/// Writes frames, input masks and the manifest under `dir`, and the
/// ground-truth masks and trajectory under `dir/gt`.
pub fn write_synthetic(seq: &SyntheticSequence, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    for sub in ["rgb", "masks", "gt/masks"] {
        create_dir(&dir.join(sub))?;
    }
    let mut manifest = Manifest {
        id: seq.spec.id.clone(),
        fov_y_deg: seq.camera.fov_y_deg,
        frames: Vec::with_capacity(seq.frames.len()),
    };
    let mut gt = Vec::with_capacity(seq.frames.len());
    for (n, (f, pose)) in seq.frames.iter().zip(&seq.gt_poses).enumerate() {
        let name = frame_file_name(n);
        save_rgb(dir.join("rgb").join(&name), &f.rgb)?;
        save_mask(dir.join("masks").join(&name), &f.mask)?;
        save_mask(dir.join("gt/masks").join(&name), &f.gt_mask)?;
        manifest.frames.push(ManifestFrame {
            image: Path::new("rgb").join(&name),
            mask: Path::new("masks").join(&name),
            features: None,
        });
        gt.push(TrajectoryRecord::new(n, pose, false, Vec::new(), 0.0, 0.0));
    }
    manifest.write(dir.join("manifest.json"))?;
    write_trajectory(dir.join("gt/trajectory.csv"), &gt)
}
