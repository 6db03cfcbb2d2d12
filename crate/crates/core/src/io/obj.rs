use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{DeformableMesh, Vector2, Vector3};

/// Geometry read back from an OBJ file.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjMesh {
    pub vertices: Vec<Vector3<f64>>,
    pub uvs: Vec<Vector2<f64>>,
    pub faces: Vec<[u32; 3]>,
    pub face_uvs: Vec<[u32; 3]>,
}

/// Writes the deformed mesh with texture coordinates. OBJ places the `v`
/// origin at the bottom of the image, so `v` is flipped.
pub fn write_obj(path: impl AsRef<Path>, mesh: &DeformableMesh) -> Result<()> {
    let path = path.as_ref();
    let mut s = String::new();
    for v in mesh.deformed_vertices() {
        writeln!(s, "v {} {} {}", v.x, v.y, v.z).expect("string write");
    }
    for t in mesh.uvs() {
        writeln!(s, "vt {} {}", t.x, 1.0 - t.y).expect("string write");
    }
    for (f, t) in mesh.faces().iter().zip(mesh.face_uvs()) {
        writeln!(
            s,
            "f {}/{} {}/{} {}/{}",
            f[0] + 1,
            t[0] + 1,
            f[1] + 1,
            t[1] + 1,
            f[2] + 1,
            t[2] + 1
        )
        .expect("string write");
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// Reads triangle OBJ files with `v`, `vt` and `f v/vt` records. Other
/// records are ignored.
pub fn read_obj(path: impl AsRef<Path>) -> Result<ObjMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |line: usize, what: &str| Error::Parse {
        path: path.to_path_buf(),
        reason: format!("line {}: {what}", line + 1),
    };
    let mut mesh = ObjMesh {
        vertices: Vec::new(),
        uvs: Vec::new(),
        faces: Vec::new(),
        face_uvs: Vec::new(),
    };
    for (ln, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it
                    .map(|t| t.parse().map_err(|_| bad(ln, "bad coordinate")))
                    .collect::<Result<_>>()?;
                if c.len() < 3 {
                    return Err(bad(ln, "vertex needs three coordinates"));
                }
                mesh.vertices.push(Vector3::new(c[0], c[1], c[2]));
            }
            Some("vt") => {
                let c: Vec<f64> = it
                    .map(|t| t.parse().map_err(|_| bad(ln, "bad coordinate")))
                    .collect::<Result<_>>()?;
                if c.len() < 2 {
                    return Err(bad(ln, "texture coordinate needs two values"));
                }
                mesh.uvs.push(Vector2::new(c[0], 1.0 - c[1]));
            }
            Some("f") => {
                let corners: Vec<&str> = it.collect();
                if corners.len() != 3 {
                    return Err(bad(ln, "only triangles are supported"));
                }
                let mut f = [0u32; 3];
                let mut t = [0u32; 3];
                for (k, c) in corners.iter().enumerate() {
                    let mut parts = c.split('/');
                    let vi: u32 = parts
                        .next()
                        .and_then(|p| p.parse().ok())
                        .ok_or_else(|| bad(ln, "bad face index"))?;
                    let ti: u32 = parts
                        .next()
                        .and_then(|p| p.parse().ok())
                        .ok_or_else(|| bad(ln, "face corner lacks a texture index"))?;
                    if vi == 0 || ti == 0 {
                        return Err(bad(ln, "indices are 1-based"));
                    }
                    f[k] = vi - 1;
                    t[k] = ti - 1;
                }
                mesh.faces.push(f);
                mesh.face_uvs.push(t);
            }
            _ => {}
        }
    }
    Ok(mesh)
}
