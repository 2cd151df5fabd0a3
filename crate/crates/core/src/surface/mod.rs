//! Closed oriented triangulated surfaces in S³.

pub mod chart;
pub mod curvature;
pub mod generators;
pub mod io;

use std::collections::HashSet;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::s3::{SpherePoint, TangentVector, Vec4};

pub use chart::{Chart, FlatTorusChart, Frame, GeodesicSphereChart, Jet, RevolutionTorusChart};
pub use curvature::{estimate_curvatures, fit_curvatures};
pub use generators::{
    make_flat_torus, make_geodesic_sphere, make_revolution_torus, GeneratorRegistry, Params,
    SurfaceGenerator,
};

/// Where the per-vertex principal curvatures came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurvatureSource {
    Analytic,
    Estimated,
    None,
}

/// Link from mesh vertices back to the chart that produced them.
#[derive(Debug, Clone)]
pub struct ChartLink {
    pub chart: Arc<dyn Chart>,
    pub uv: Vec<[f64; 2]>,
}

/// Oriented closed triangle mesh on S³ with per-vertex curvature data.
///
/// `normals[i]` points into `A*`; faces are ordered so that
/// `det(a+b+c, b−a, c−a, N) > 0`.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    pub vertices: Vec<SpherePoint>,
    pub faces: Vec<[usize; 3]>,
    pub normals: Vec<Vec4>,
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
    pub vertex_area: Vec<f64>,
    pub genus: usize,
    pub curvature: CurvatureSource,
    pub chart: Option<ChartLink>,
}

impl SurfaceMesh {
    /// Assemble a mesh, computing vertex areas and genus. Curvature arrays may
    /// be empty, in which case the source is `None`.
    pub fn new(
        vertices: Vec<SpherePoint>,
        faces: Vec<[usize; 3]>,
        normals: Vec<Vec4>,
        k1: Vec<f64>,
        k2: Vec<f64>,
        curvature: CurvatureSource,
    ) -> Result<Self> {
        let nv = vertices.len();
        if normals.len() != nv {
            return Err(invalid("one normal per vertex required"));
        }
        if faces.iter().flatten().any(|&i| i >= nv) {
            return Err(invalid("face index out of range"));
        }
        let (k1, k2, curvature) = if curvature == CurvatureSource::None {
            (vec![0.0; nv], vec![0.0; nv], CurvatureSource::None)
        } else {
            if k1.len() != nv || k2.len() != nv {
                return Err(invalid("one curvature pair per vertex required"));
            }
            (k1, k2, curvature)
        };
        let chi = euler_characteristic(nv, &faces);
        if chi > 2 || (2 - chi) % 2 != 0 {
            return Err(invalid(format!("Euler characteristic {chi} is not that of a closed orientable surface")));
        }
        let vertex_area = mixed_vertex_areas(&vertices, &faces);
        Ok(SurfaceMesh {
            vertices,
            faces,
            normals,
            k1,
            k2,
            vertex_area,
            genus: ((2 - chi) / 2) as usize,
            curvature,
            chart: None,
        })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn normal(&self, i: usize) -> TangentVector {
        TangentVector { base: self.vertices[i], dir: self.normals[i] }
    }

    pub fn mean_curvature(&self, i: usize) -> f64 {
        0.5 * (self.k1[i] + self.k2[i])
    }

    pub fn has_curvature(&self) -> bool {
        self.curvature != CurvatureSource::None
    }

    pub fn euler_characteristic(&self) -> i64 {
        euler_characteristic(self.vertices.len(), &self.faces)
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = unique_edges(&self.faces).into_iter().collect();
        e.sort_unstable();
        e
    }

    pub fn triangle(&self, f: usize) -> [Vec4; 3] {
        let [a, b, c] = self.faces[f];
        [*self.vertices[a].coords(), *self.vertices[b].coords(), *self.vertices[c].coords()]
    }

    pub fn mean_edge_length(&self) -> f64 {
        let e = self.edges();
        e.iter()
            .map(|&(a, b)| (self.vertices[a].coords() - self.vertices[b].coords()).norm())
            .sum::<f64>()
            / e.len().max(1) as f64
    }

    /// Negate normals and curvatures and reverse every face, swapping `A` and `A*`.
    pub fn flip_orientation(&self) -> SurfaceMesh {
        let mut m = self.clone();
        for n in &mut m.normals {
            *n = -*n;
        }
        let (k1, k2) = (m.k1.clone(), m.k2.clone());
        m.k1 = k2.iter().map(|k| -k).collect();
        m.k2 = k1.iter().map(|k| -k).collect();
        for f in &mut m.faces {
            f.swap(1, 2);
        }
        if let Some(link) = &m.chart {
            m.chart = Some(ChartLink { chart: Arc::new(Flipped(link.chart.clone())), uv: link.uv.clone() });
        }
        m
    }

    /// Structural checks: unit vertices, unit tangent normals, consistent
    /// orientation and positive areas.
    pub fn validate(&self) -> Result<()> {
        for (i, (x, n)) in self.vertices.iter().zip(&self.normals).enumerate() {
            if (x.coords().norm() - 1.0).abs() > 1e-10
                || x.coords().dot(n).abs() > 1e-10
                || (n.norm() - 1.0).abs() > 1e-10
            {
                return Err(invalid(format!("vertex {i}: point or normal off the sphere bundle")));
            }
        }
        let mut directed = HashSet::with_capacity(self.faces.len() * 3);
        for f in &self.faces {
            for k in 0..3 {
                if !directed.insert((f[k], f[(k + 1) % 3])) {
                    return Err(invalid(format!("directed edge {:?} repeated", (f[k], f[(k + 1) % 3]))));
                }
            }
        }
        for &(a, b) in &directed {
            if !directed.contains(&(b, a)) {
                return Err(invalid(format!("edge ({a},{b}) is a boundary edge or inconsistently oriented")));
            }
        }
        if self.vertex_area.iter().any(|&a| !(a > 0.0)) {
            return Err(invalid("non-positive vertex area"));
        }
        Ok(())
    }

    /// Reorient every face so that its 4D orientation agrees with the mean of
    /// its vertex normals.
    pub(crate) fn orient_faces_by_normals(&mut self) {
        let (verts, normals) = (&self.vertices, &self.normals);
        self.faces.par_iter_mut().for_each(|f| {
            let (a, b, c) = (verts[f[0]].coords(), verts[f[1]].coords(), verts[f[2]].coords());
            let n = normals[f[0]] + normals[f[1]] + normals[f[2]];
            if face_orientation(a, b, c, &n) < 0.0 {
                f.swap(1, 2);
            }
        });
    }

    pub(crate) fn recompute_areas(&mut self) {
        self.vertex_area = mixed_vertex_areas(&self.vertices, &self.faces);
    }
}

#[derive(Debug)]
struct Flipped(Arc<dyn Chart>);

impl Chart for Flipped {
    fn name(&self) -> &'static str {
        self.0.name()
    }
    fn jet(&self, u: f64, v: f64) -> Jet {
        let mut j = self.0.jet(u, v);
        j.orient = -j.orient;
        j
    }
    fn periods(&self) -> [Option<f64>; 2] {
        self.0.periods()
    }
    fn frame(&self, u: f64, v: f64) -> Result<Frame> {
        let f = self.0.frame(u, v)?;
        Ok(Frame { x: f.x, n: -f.n, k1: -f.k2, k2: -f.k1 })
    }
    fn foot(&self, z: &Vec4, init: [f64; 2]) -> Option<[f64; 2]> {
        self.0.foot(z, init)
    }
}

/// Sign of the 4D orientation of triangle `abc` relative to the normal `n`.
pub fn face_orientation(a: &Vec4, b: &Vec4, c: &Vec4, n: &Vec4) -> f64 {
    chart::det4(&(a + b + c), &(b - a), &(c - a), n)
}

fn unique_edges(faces: &[[usize; 3]]) -> HashSet<(usize, usize)> {
    let mut e = HashSet::with_capacity(faces.len() * 3 / 2 + 1);
    for f in faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            e.insert((a.min(b), a.max(b)));
        }
    }
    e
}

pub fn euler_characteristic(nv: usize, faces: &[[usize; 3]]) -> i64 {
    nv as i64 - unique_edges(faces).len() as i64 + faces.len() as i64
}

/// Mixed Voronoi areas; triangles with an obtuse angle split their area in thirds.
pub fn mixed_vertex_areas(vertices: &[SpherePoint], faces: &[[usize; 3]]) -> Vec<f64> {
    let mut area = vec![0.0; vertices.len()];
    for f in faces {
        let p = [vertices[f[0]].coords(), vertices[f[1]].coords(), vertices[f[2]].coords()];
        let contrib = triangle_vertex_areas(p[0], p[1], p[2]);
        for k in 0..3 {
            area[f[k]] += contrib[k];
        }
    }
    area
}

/// Area of a triangle in R⁴.
pub fn triangle_area(a: &Vec4, b: &Vec4, c: &Vec4) -> f64 {
    let (u, v) = (b - a, c - a);
    let g = u.norm_squared() * v.norm_squared() - u.dot(&v).powi(2);
    0.5 * g.max(0.0).sqrt()
}

pub(crate) fn triangle_vertex_areas(a: &Vec4, b: &Vec4, c: &Vec4) -> [f64; 3] {
    let total = triangle_area(a, b, c);
    let pts = [a, b, c];
    let mut dots = [0.0; 3];
    for k in 0..3 {
        let (p, q, r) = (pts[k], pts[(k + 1) % 3], pts[(k + 2) % 3]);
        dots[k] = (q - p).dot(&(r - p));
    }
    if dots.iter().any(|&d| d < 0.0) || total <= 0.0 {
        return [total / 3.0; 3];
    }
    // cot of the angle at vertex k = dot / (2·area)
    let cot: Vec<f64> = dots.iter().map(|d| d / (2.0 * total)).collect();
    let mut out = [0.0; 3];
    for k in 0..3 {
        let (p, q, r) = (pts[k], pts[(k + 1) % 3], pts[(k + 2) % 3]);
        out[k] = ((r - p).norm_squared() * cot[(k + 1) % 3] + (q - p).norm_squared() * cot[(k + 2) % 3]) / 8.0;
    }
    out
}

/// Total area `Σ vertex_area`.
pub fn area(mesh: &SurfaceMesh) -> f64 {
    mesh.vertex_area.iter().sum()
}

/// Quadrature `Σ f(v)·vertex_area(v)`.
pub fn integrate(mesh: &SurfaceMesh, f: &[f64]) -> f64 {
    assert_eq!(f.len(), mesh.len(), "one value per vertex");
    f.iter().zip(&mesh.vertex_area).map(|(a, b)| a * b).sum()
}

/// Sum of triangle areas, independent of the vertex split.
pub fn triangle_area_sum(mesh: &SurfaceMesh) -> f64 {
    (0..mesh.faces.len())
        .map(|f| {
            let [a, b, c] = mesh.triangle(f);
            triangle_area(&a, &b, &c)
        })
        .sum()
}

/// `∫(1 + k₁k₂) dΣ − 2π·χ`, which vanishes for exact curvature data.
pub fn gauss_bonnet_defect(mesh: &SurfaceMesh) -> Result<f64> {
    if !mesh.has_curvature() {
        return Err(invalid("gauss_bonnet_defect needs curvature data"));
    }
    let k: Vec<f64> = (0..mesh.len()).map(|i| 1.0 + mesh.k1[i] * mesh.k2[i]).collect();
    let chi = 2.0 - 2.0 * mesh.genus as f64;
    Ok(integrate(mesh, &k) - 2.0 * std::f64::consts::PI * chi)
}

/// Faces incident to each vertex.
pub fn vertex_faces(mesh: &SurfaceMesh) -> Vec<Vec<usize>> {
    let mut vf = vec![Vec::new(); mesh.len()];
    for (k, f) in mesh.faces.iter().enumerate() {
        for &i in f {
            vf[i].push(k);
        }
    }
    vf
}

pub(crate) fn require_curvature(mesh: &SurfaceMesh) -> Result<()> {
    if mesh.has_curvature() {
        Ok(())
    } else {
        Err(Error::InvalidInput("mesh carries no curvature data".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn areas_partition_triangles() {
        let m = make_flat_torus(0.6, 24).unwrap();
        let tri = triangle_area_sum(&m);
        assert!((area(&m) - tri).abs() <= 1e-10 * tri);
        m.validate().unwrap();
        assert_eq!(m.genus, 1);
        assert_eq!(integrate(&m, &vec![0.0; m.len()]), 0.0);
        assert_eq!(integrate(&m, &vec![1.0; m.len()]), area(&m));
    }

    #[test]
    fn clifford_area() {
        let m = make_flat_torus(FRAC_1_SQRT_2, 128).unwrap();
        assert!((area(&m) / (2.0 * PI * PI) - 1.0).abs() < 5e-3);
        let h = (0..m.len()).map(|i| m.mean_curvature(i).abs()).fold(0.0, f64::max);
        assert!(h < 1e-12);
    }

    #[test]
    fn flip_swaps_sides() {
        let m = make_geodesic_sphere(SpherePoint::basis(0), 1.0, 8).unwrap();
        let f = m.flip_orientation();
        f.validate().unwrap();
        assert!((f.k1[0] + m.k2[0]).abs() < 1e-15);
        assert!((f.normals[3] + m.normals[3]).norm() < 1e-15);
        assert!((gauss_bonnet_defect(&f).unwrap() - gauss_bonnet_defect(&m).unwrap()).abs() < 1e-12);
    }
}
