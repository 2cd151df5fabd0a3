//! Principal curvatures from a local height-function fit in the tangent space of S³.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::chart::principal_from_forms;
use super::{CurvatureSource, SurfaceMesh};
use crate::error::{Error, Result};
use crate::s3::{orthogonal_complement, Vec4};

const MIN_NEIGHBORS: usize = 5;
const CUBIC_NEIGHBORS: usize = 12;

/// Fill in curvatures by local fitting unless the mesh already carries exact ones.
pub fn estimate_curvatures(mesh: &SurfaceMesh) -> Result<SurfaceMesh> {
    if mesh.curvature == CurvatureSource::Analytic {
        return Ok(mesh.clone());
    }
    fit_curvatures(mesh)
}

/// Vertex adjacency lists, sorted.
pub fn vertex_neighbors(mesh: &SurfaceMesh) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); mesh.len()];
    for f in &mesh.faces {
        for k in 0..3 {
            adj[f[k]].push(f[(k + 1) % 3]);
            adj[f[k]].push(f[(k + 2) % 3]);
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    adj
}

/// Fit curvatures at every vertex from its one- and two-ring, regardless of
/// any analytic data present.
///
/// Neighbor offsets `y − x` are expressed in the frame `(e₁, e₂, N)` of the
/// tangent space of S³ at `x` and fitted by a height function
/// `z = dX + eY + aX² + bXY + cY² (+ cubic terms when enough neighbors)`.
/// The cubic terms remove the first-order bias of the quadric fit on
/// asymmetric neighborhoods.
pub fn fit_curvatures(mesh: &SurfaceMesh) -> Result<SurfaceMesh> {
    let rings = two_rings(mesh);
    let results: Vec<Result<(f64, f64)>> = (0..mesh.len())
        .into_par_iter()
        .map(|i| {
            fit_at(i, mesh.vertices[i].coords(), &mesh.normals[i], &rings[i], |j| *mesh.vertices[j].coords())
        })
        .collect();
    let mut k1 = Vec::with_capacity(mesh.len());
    let mut k2 = Vec::with_capacity(mesh.len());
    for r in results {
        let (a, b) = r?;
        k1.push(a);
        k2.push(b);
    }
    let mut out = mesh.clone();
    out.k1 = k1;
    out.k2 = k2;
    out.curvature = CurvatureSource::Estimated;
    Ok(out)
}

/// One- plus two-ring of every vertex, sorted, without the vertex itself.
pub fn two_rings(mesh: &SurfaceMesh) -> Vec<Vec<usize>> {
    let adj = vertex_neighbors(mesh);
    (0..mesh.len())
        .map(|i| {
            let mut ring: Vec<usize> = adj[i].clone();
            for &j in &adj[i] {
                ring.extend_from_slice(&adj[j]);
            }
            ring.sort_unstable();
            ring.dedup();
            ring.retain(|&j| j != i);
            ring
        })
        .collect()
}

/// Fit at a vertex at `x` with normal `n` from the neighbor positions `pos(j)`, `j ∈ ring`.
pub(crate) fn fit_at(
    vertex: usize,
    x: &Vec4,
    n: &Vec4,
    ring: &[usize],
    pos: impl Fn(usize) -> Vec4,
) -> Result<(f64, f64)> {
    let e1 = orthogonal_complement(&[*x, *n]);
    let e2 = orthogonal_complement(&[*x, *n, e1]);
    let pts: Vec<(f64, f64, f64)> = ring
        .iter()
        .map(|&j| {
            let d: Vec4 = pos(j) - x;
            (d.dot(&e1), d.dot(&e2), d.dot(n))
        })
        .collect();
    let scale = pts.iter().map(|p| p.0.hypot(p.1)).fold(0.0, f64::max);
    let independent = count_independent(&pts, scale);
    if independent < MIN_NEIGHBORS {
        return Err(Error::UnderDeterminedFit { vertex, neighbors: independent });
    }
    let cubic = independent >= CUBIC_NEIGHBORS;
    let cols = if cubic { 9 } else { 5 };
    let mut a = DMatrix::<f64>::zeros(pts.len(), cols);
    let mut z = DVector::<f64>::zeros(pts.len());
    for (r, &(px, py, pz)) in pts.iter().enumerate() {
        // scaled coordinates keep the system well conditioned
        let (u, v) = (px / scale, py / scale);
        let row = [u, v, u * u, u * v, v * v, u * u * u, u * u * v, u * v * v, v * v * v];
        for c in 0..cols {
            a[(r, c)] = row[c];
        }
        z[r] = pz / scale;
    }
    let svd = a.svd(true, true);
    let coef = svd
        .solve(&z, 1e-12)
        .map_err(|e| Error::InconsistentCurvature(e.to_string()))?;
    let (d, e) = (coef[0], coef[1]);
    let (qa, qb, qc) = (coef[2] / scale, coef[3] / scale, coef[4] / scale);
    let w = (1.0 + d * d + e * e).sqrt();
    principal_from_forms(1.0 + d * d, d * e, 1.0 + e * e, 2.0 * qa / w, qb / w, 2.0 * qc / w)
}

/// Number of neighbor offsets that are distinct in the tangent plane.
fn count_independent(pts: &[(f64, f64, f64)], scale: f64) -> usize {
    let tol = 1e-9 * scale.max(1e-300);
    let mut seen: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        if p.0.hypot(p.1) <= tol {
            continue;
        }
        if !seen.iter().any(|q| (q.0 - p.0).hypot(q.1 - p.1) <= tol) {
            seen.push((p.0, p.1));
        }
    }
    seen.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::s3::SpherePoint;
    use crate::surface::{make_flat_torus, make_geodesic_sphere};
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn max_sphere_error(res: usize) -> f64 {
        let m = make_geodesic_sphere(SpherePoint::basis(3), PI / 3.0, res).unwrap();
        let f = fit_curvatures(&m).unwrap();
        let k = 1.0 / (PI / 3.0).tan();
        (0..f.len()).map(|i| (f.k1[i] - k).abs().max((f.k2[i] - k).abs())).fold(0.0, f64::max)
    }

    #[test]
    fn sphere_fit_accuracy() {
        let e = max_sphere_error(96);
        assert!(e <= 2e-2, "{e}");
    }

    #[test]
    fn sphere_fit_converges_at_second_order() {
        let (a, b) = (max_sphere_error(24), max_sphere_error(48));
        assert!(b <= 0.35 * a, "{a} {b}");
    }

    #[test]
    fn clifford_fit_is_minimal() {
        let m = make_flat_torus(FRAC_1_SQRT_2, 128).unwrap();
        let f = fit_curvatures(&m).unwrap();
        let h = (0..f.len()).map(|i| f.mean_curvature(i).abs()).fold(0.0, f64::max);
        assert!(h <= 1e-2, "{h}");
        assert_eq!(estimate_curvatures(&m).unwrap().curvature, CurvatureSource::Analytic);
    }

    #[test]
    fn too_few_neighbors_is_an_error() {
        // a tetrahedron on S³ only has three neighbors per vertex
        let s = 1.0 / 3f64.sqrt();
        let p = [[s, s, s, 0.0], [s, -s, -s, 0.0], [-s, s, -s, 0.0], [-s, -s, s, 0.0]];
        let v: Vec<SpherePoint> = p.iter().map(|c| SpherePoint::from_array(*c).unwrap()).collect();
        let n = vec![Vec4::new(0.0, 0.0, 0.0, 1.0); 4];
        let faces = vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]];
        let m = SurfaceMesh::new(v, faces, n, vec![], vec![], CurvatureSource::None).unwrap();
        assert!(matches!(fit_curvatures(&m), Err(Error::UnderDeterminedFit { .. })));
    }
}
