//! Geometry, pose, camera and texture types.
//!
//! Coordinate conventions: right-handed world and camera frames; the camera
//! sits at the origin looking down `-z` with `+y` up. Image pixel rows grow
//! downwards, pixel centres are at `i + 0.5`.

mod camera;
mod mesh;
mod pose;
mod texture;

pub use camera::{Camera, Projection, DEFAULT_FOV_Y_DEG};
pub use mesh::{make_prototype_sphere, uniform_laplacian, Adjacency, DeformableMesh};
pub use pose::{
    normalize_quaternion, pose_to_matrix, quaternion_angle_deg, quaternion_from_axis_angle, quaternion_multiply,
    rotation_matrix, rotation_matrix_vjp, tangent_project, Pose,
};
pub use texture::{BilinearFootprint, FeatureTexture, DEFAULT_TEXTURE_SIZE};

pub use nalgebra::{Matrix3, Matrix4, Vector2, Vector3, Vector4};
