use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::geometry::{DeformableMesh, Matrix3, Vector3};

/// Least-squares plane through `points`: `(centroid, unit normal)`.
///
/// Fails when the points do not span at least a line-independent pair of
/// directions.
pub fn fit_plane(points: &[Vector3<f64>]) -> Result<(Vector3<f64>, Vector3<f64>)> {
    if points.len() < 3 {
        return Err(Error::DegenerateGeometry(format!(
            "{} points cannot define a plane",
            points.len()
        )));
    }
    let c: Vector3<f64> = points.iter().sum::<Vector3<f64>>() / points.len() as f64;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - c;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let largest = eig.eigenvalues[order[2]];
    let middle = eig.eigenvalues[order[1]];
    if !(largest > 0.0) || middle <= 1e-12 * largest {
        return Err(Error::DegenerateGeometry("vertices are collinear or coincident".into()));
    }
    let n = eig.eigenvectors.column(order[0]).into_owned();
    Ok((c, n.normalize()))
}

/// Projects every deformed vertex orthogonally onto the best-fit plane of
/// the deformed mesh and rewrites the offsets accordingly.
pub fn apply_flat_prior(mesh: &mut DeformableMesh) -> Result<()> {
    let verts = mesh.deformed_vertices();
    let (c, n) = fit_plane(&verts)?;
    project_onto_plane(mesh, &c, &n);
    Ok(())
}

/// Projects the deformed vertices onto the plane through `point` with unit
/// normal `normal`.
pub fn project_onto_plane(mesh: &mut DeformableMesh, point: &Vector3<f64>, normal: &Vector3<f64>) {
    let verts = mesh.deformed_vertices();
    let proto = mesh.prototype().to_vec();
    for ((o, v), p) in mesh.offsets_mut().iter_mut().zip(&verts).zip(&proto) {
        let q = v - normal * (v - point).dot(normal);
        *o = q - p;
    }
}

/// Largest distance of a deformed vertex from the best-fit plane.
pub fn max_plane_deviation(mesh: &DeformableMesh) -> Result<f64> {
    let verts = mesh.deformed_vertices();
    let (c, n) = fit_plane(&verts)?;
    Ok(verts.iter().map(|v| (v - c).dot(&n).abs()).fold(0.0, f64::max))
}
