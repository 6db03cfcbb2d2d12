use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{Vector2, Vector3};

use crate::error::{Error, Result};

/// One-ring vertex adjacency in compressed row form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
}

impl Adjacency {
    /// Unique edge neighbours of every vertex, sorted by index.
    pub fn from_faces(vertex_count: usize, faces: &[[u32; 3]]) -> Self {
        let mut lists: Vec<Vec<u32>> = vec![Vec::new(); vertex_count];
        for f in faces {
            for k in 0..3 {
                let a = f[k] as usize;
                let b = f[(k + 1) % 3];
                let c = f[(k + 2) % 3];
                lists[a].push(b);
                lists[a].push(c);
            }
        }
        let mut offsets = Vec::with_capacity(vertex_count + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for mut l in lists {
            l.sort_unstable();
            l.dedup();
            neighbors.extend(l);
            offsets.push(neighbors.len());
        }
        Self { offsets, neighbors }
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }
}

/// Uniform graph Laplacian `delta_i = v_i - mean(one-ring of i)`.
pub fn uniform_laplacian(adjacency: &Adjacency, vertices: &[Vector3<f64>]) -> Result<Vec<Vector3<f64>>> {
    if vertices.len() != adjacency.vertex_count() {
        return Err(Error::ShapeMismatch(format!(
            "{} vertices for a {}-vertex adjacency",
            vertices.len(),
            adjacency.vertex_count()
        )));
    }
    (0..vertices.len())
        .map(|i| {
            let nb = adjacency.neighbors(i);
            if nb.is_empty() {
                return Err(Error::IsolatedVertex(i));
            }
            let sum: Vector3<f64> = nb.iter().map(|&j| vertices[j as usize]).sum();
            Ok(vertices[i] - sum / nb.len() as f64)
        })
        .collect()
}

/// A fixed-topology triangle mesh deformed by per-vertex offsets.
///
/// Texture coordinates are face-varying: `face_uvs[f][k]` indexes `uvs` for
/// corner `k` of face `f`, so seam vertices can carry two coordinates.
#[derive(Debug, Clone)]
pub struct DeformableMesh {
    prototype: Arc<Vec<Vector3<f64>>>,
    faces: Arc<Vec<[u32; 3]>>,
    uvs: Arc<Vec<Vector2<f64>>>,
    face_uvs: Arc<Vec<[u32; 3]>>,
    adjacency: Arc<Adjacency>,
    offsets: Vec<Vector3<f64>>,
}

impl DeformableMesh {
    pub fn new(
        prototype: Vec<Vector3<f64>>,
        faces: Vec<[u32; 3]>,
        uvs: Vec<Vector2<f64>>,
        face_uvs: Vec<[u32; 3]>,
    ) -> Result<Self> {
        let n = prototype.len();
        if faces.len() != face_uvs.len() {
            return Err(Error::InvalidMesh(format!(
                "{} faces but {} uv faces",
                faces.len(),
                face_uvs.len()
            )));
        }
        let mut used = vec![false; n];
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                let v = v as usize;
                if v >= n {
                    return Err(Error::InvalidMesh(format!("face {fi} references vertex {v}")));
                }
                used[v] = true;
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidMesh(format!("face {fi} repeats a vertex")));
            }
        }
        if let Some(v) = used.iter().position(|&u| !u) {
            return Err(Error::InvalidMesh(format!("vertex {v} belongs to no face")));
        }
        for (fi, f) in face_uvs.iter().enumerate() {
            if f.iter().any(|&t| t as usize >= uvs.len()) {
                return Err(Error::InvalidMesh(format!("uv face {fi} out of range")));
            }
        }
        if prototype.iter().any(|p| !p.iter().all(|c| c.is_finite()))
            || uvs.iter().any(|t| !t.iter().all(|c| c.is_finite()))
        {
            return Err(Error::NonFinite("mesh".into()));
        }
        let adjacency = Adjacency::from_faces(n, &faces);
        Ok(Self {
            offsets: vec![Vector3::zeros(); n],
            prototype: Arc::new(prototype),
            faces: Arc::new(faces),
            uvs: Arc::new(uvs),
            face_uvs: Arc::new(face_uvs),
            adjacency: Arc::new(adjacency),
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.prototype.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn prototype(&self) -> &[Vector3<f64>] {
        &self.prototype
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn uvs(&self) -> &[Vector2<f64>] {
        &self.uvs
    }

    pub fn face_uvs(&self) -> &[[u32; 3]] {
        &self.face_uvs
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    pub fn offsets(&self) -> &[Vector3<f64>] {
        &self.offsets
    }

    pub fn offsets_mut(&mut self) -> &mut [Vector3<f64>] {
        &mut self.offsets
    }

    pub fn set_offsets(&mut self, offsets: Vec<Vector3<f64>>) -> Result<()> {
        if offsets.len() != self.prototype.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} offsets for {} vertices",
                offsets.len(),
                self.prototype.len()
            )));
        }
        self.offsets = offsets;
        Ok(())
    }

    /// `prototype[i] + offsets[i]` for every vertex.
    pub fn deformed_vertices(&self) -> Vec<Vector3<f64>> {
        self.prototype.iter().zip(&self.offsets).map(|(p, o)| p + o).collect()
    }

    /// Same topology and uv layout with a different prototype shape.
    pub fn with_prototype(&self, prototype: Vec<Vector3<f64>>) -> Result<Self> {
        if prototype.len() != self.prototype.len() {
            return Err(Error::ShapeMismatch("prototype vertex count changed".into()));
        }
        Ok(Self {
            prototype: Arc::new(prototype),
            offsets: vec![Vector3::zeros(); self.offsets.len()],
            ..self.clone()
        })
    }

    /// Diameter of the centroid-centred sphere enclosing the deformed vertices.
    pub fn bounding_diameter(&self) -> f64 {
        let v = self.deformed_vertices();
        let c: Vector3<f64> = v.iter().sum::<Vector3<f64>>() / v.len() as f64;
        2.0 * v.iter().map(|p| (p - c).norm()).fold(0.0, f64::max)
    }
}

/// Latitude/longitude sphere of unit diameter centred at the origin, `+y`
/// through the poles.
///
/// Vertex layout: north pole, `rings - 1` latitude circles of `segments`
/// vertices each (north to south), south pole. The seam column at `u = 1`
/// duplicates texture coordinates but not vertices, so the vertex count is
/// `(rings - 1) * segments + 2`. Faces wind counter-clockwise seen from
/// outside.
pub fn make_prototype_sphere(segments: usize, rings: usize) -> Result<DeformableMesh> {
    if segments < 3 || rings < 3 {
        return Err(Error::InvalidTessellation { segments, rings });
    }
    let r = 0.5;
    let mut vertices = Vec::with_capacity((rings - 1) * segments + 2);
    vertices.push(Vector3::new(0.0, r, 0.0));
    for i in 1..rings {
        let theta = PI * i as f64 / rings as f64;
        let (st, ct) = theta.sin_cos();
        for j in 0..segments {
            let phi = 2.0 * PI * j as f64 / segments as f64;
            let (sp, cp) = phi.sin_cos();
            vertices.push(Vector3::new(r * st * cp, r * ct, -r * st * sp));
        }
    }
    let south = vertices.len() as u32;
    vertices.push(Vector3::new(0.0, -r, 0.0));

    // uv layout: north pole, (rings - 1) rows of (segments + 1) columns, south pole
    let mut uvs = Vec::with_capacity((rings - 1) * (segments + 1) + 2);
    uvs.push(Vector2::new(0.5, 0.0));
    for i in 1..rings {
        for j in 0..=segments {
            uvs.push(Vector2::new(j as f64 / segments as f64, i as f64 / rings as f64));
        }
    }
    let south_uv = uvs.len() as u32;
    uvs.push(Vector2::new(0.5, 1.0));

    let vid = |i: usize, j: usize| (1 + (i - 1) * segments + j % segments) as u32;
    let tid = |i: usize, j: usize| (1 + (i - 1) * (segments + 1) + j) as u32;

    let mut faces = Vec::new();
    let mut face_uvs = Vec::new();
    for j in 0..segments {
        faces.push([0, vid(1, j), vid(1, j + 1)]);
        face_uvs.push([0, tid(1, j), tid(1, j + 1)]);
    }
    for i in 1..rings - 1 {
        for j in 0..segments {
            let (a, b, c, d) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            let (ta, tb, tc, td) = (tid(i, j), tid(i + 1, j), tid(i + 1, j + 1), tid(i, j + 1));
            faces.push([a, b, c]);
            face_uvs.push([ta, tb, tc]);
            faces.push([a, c, d]);
            face_uvs.push([ta, tc, td]);
        }
    }
    for j in 0..segments {
        faces.push([vid(rings - 1, j), south, vid(rings - 1, j + 1)]);
        face_uvs.push([tid(rings - 1, j), south_uv, tid(rings - 1, j + 1)]);
    }
    DeformableMesh::new(vertices, faces, uvs, face_uvs)
}
