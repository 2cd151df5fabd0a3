//! Mesh generators for the standard test surfaces and a name-keyed registry.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, TAU};
use std::sync::Arc;

use rayon::prelude::*;

use super::chart::{Chart, FlatTorusChart, GeodesicSphereChart, RevolutionTorusChart};
use super::{ChartLink, CurvatureSource, SurfaceMesh};
use crate::error::{invalid, Result};
use crate::s3::{SpherePoint, Vec4};

/// Named real parameters of a generator.
pub type Params = BTreeMap<String, f64>;

/// Mesh a doubly periodic chart on a `res × res` grid over `[0, 2π)²`.
pub fn mesh_periodic_chart(chart: Arc<dyn Chart>, res: usize) -> Result<SurfaceMesh> {
    if res < 3 {
        return Err(invalid("torus resolution must be at least 3"));
    }
    let h = TAU / res as f64;
    let uv: Vec<[f64; 2]> = (0..res * res).map(|k| [(k / res) as f64 * h, (k % res) as f64 * h]).collect();
    let frames = uv
        .par_iter()
        .map(|p| chart.frame(p[0], p[1]))
        .collect::<Result<Vec<_>>>()?;
    let idx = |i: usize, j: usize| (i % res) * res + (j % res);
    let mut faces = Vec::with_capacity(2 * res * res);
    for i in 0..res {
        for j in 0..res {
            let q = [idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)];
            faces.extend(split_quad(q, |a, b| (frames[a].x - frames[b].x).norm()));
        }
    }
    let vertices = frames.iter().map(|f| SpherePoint::normalize(f.x)).collect();
    let normals = frames.iter().map(|f| f.n).collect();
    let k1 = frames.iter().map(|f| f.k1).collect();
    let k2 = frames.iter().map(|f| f.k2).collect();
    let mut m = SurfaceMesh::new(vertices, faces, normals, k1, k2, CurvatureSource::Analytic)?;
    m.orient_faces_by_normals();
    m.chart = Some(ChartLink { chart, uv });
    Ok(m)
}

/// Split quad `q` (cyclic order) along its shorter diagonal; equal diagonals
/// go to the one whose sorted index pair is smaller.
fn split_quad(q: [usize; 4], dist: impl Fn(usize, usize) -> f64) -> [[usize; 3]; 2] {
    let (d0, d1) = (dist(q[0], q[2]), dist(q[1], q[3]));
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    let first = if (d0 - d1).abs() <= 1e-12 * d0.max(d1) {
        key(q[0], q[2]) <= key(q[1], q[3])
    } else {
        d0 < d1
    };
    if first {
        [[q[0], q[1], q[2]], [q[0], q[2], q[3]]]
    } else {
        [[q[0], q[1], q[3]], [q[1], q[2], q[3]]]
    }
}

/// Product torus of radii `(a, √(1−a²))`; the Clifford torus at `a = 1/√2`.
pub fn make_flat_torus(a: f64, res: usize) -> Result<SurfaceMesh> {
    mesh_periodic_chart(Arc::new(FlatTorusChart::new(a)?), res)
}

/// Torus of revolution with radii `(R, r)` pulled back to S³ from the pole `e₄`.
pub fn make_revolution_torus(major: f64, minor: f64, res: usize) -> Result<SurfaceMesh> {
    mesh_periodic_chart(Arc::new(RevolutionTorusChart::new(major, minor)?), res)
}

/// Boundary of the geodesic ball `B_r(p)`, meshed as an equiangular cube-sphere
/// with `res × res` quads per cube face. Normals point into the ball.
pub fn make_geodesic_sphere(p: SpherePoint, r: f64, res: usize) -> Result<SurfaceMesh> {
    let chart = GeodesicSphereChart::new(p, r)?;
    if res < 1 {
        return Err(invalid("sphere resolution must be at least 1"));
    }
    let n = res as i64;
    let mut index: HashMap<[i64; 3], usize> = HashMap::new();
    let mut keys: Vec<[i64; 3]> = Vec::new();
    let mut id = |k: [i64; 3]| -> usize {
        *index.entry(k).or_insert_with(|| {
            keys.push(k);
            keys.len() - 1
        })
    };
    let mut quads = Vec::with_capacity(6 * res * res);
    for axis in 0..3 {
        for side in [0, n] {
            let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
            for i in 0..n {
                for j in 0..n {
                    let corner = |di: i64, dj: i64| {
                        let mut k = [0i64; 3];
                        k[axis] = side;
                        k[a] = i + di;
                        k[b] = j + dj;
                        k
                    };
                    quads.push([id(corner(0, 0)), id(corner(1, 0)), id(corner(1, 1)), id(corner(0, 1))]);
                }
            }
        }
    }
    let dirs: Vec<[f64; 3]> = keys
        .iter()
        .map(|k| {
            let t: Vec<f64> = k.iter().map(|&c| (FRAC_PI_4 * (2.0 * c as f64 / n as f64 - 1.0)).tan()).collect();
            let l = (t[0] * t[0] + t[1] * t[1] + t[2] * t[2]).sqrt();
            [t[0] / l, t[1] / l, t[2] / l]
        })
        .collect();
    let pts: Vec<Vec4> = dirs.iter().map(|y| chart.point(*y)).collect();
    let mut faces = Vec::with_capacity(2 * quads.len());
    for q in quads {
        faces.extend(split_quad(q, |a, b| (pts[a] - pts[b]).norm()));
    }
    let k = chart.curvature();
    let nv = pts.len();
    let vertices = pts.iter().map(|x| SpherePoint::normalize(*x)).collect();
    let normals = dirs.iter().map(|y| chart.inward_normal(*y)).collect();
    let mut m = SurfaceMesh::new(vertices, faces, normals, vec![k; nv], vec![k; nv], CurvatureSource::Analytic)?;
    m.orient_faces_by_normals();
    let uv = pts.iter().map(|x| chart.polar(x)).collect();
    m.chart = Some(ChartLink { chart: Arc::new(chart), uv });
    Ok(m)
}

/// A named surface family that can be meshed from real parameters.
pub trait SurfaceGenerator: Send + Sync {
    fn name(&self) -> &'static str;

    fn aliases(&self) -> &'static [&'static str] {
        &[]
    }

    /// Parameter names with their defaults (`None` when required).
    fn parameters(&self) -> &'static [(&'static str, Option<f64>)];

    fn build(&self, params: &Params, res: usize) -> Result<SurfaceMesh>;
}

fn param(gen: &dyn SurfaceGenerator, params: &Params, key: &str) -> Result<f64> {
    if let Some(v) = params.get(key) {
        return Ok(*v);
    }
    gen.parameters()
        .iter()
        .find(|(k, _)| *k == key)
        .and_then(|(_, d)| *d)
        .ok_or_else(|| invalid(format!("generator '{}' needs parameter '{key}'", gen.name())))
}

struct FlatTorusGen;

impl SurfaceGenerator for FlatTorusGen {
    fn name(&self) -> &'static str {
        "flat"
    }
    fn aliases(&self) -> &'static [&'static str] {
        &["clifford"]
    }
    fn parameters(&self) -> &'static [(&'static str, Option<f64>)] {
        &[("a", Some(FRAC_1_SQRT_2))]
    }
    fn build(&self, params: &Params, res: usize) -> Result<SurfaceMesh> {
        make_flat_torus(param(self, params, "a")?, res)
    }
}

struct GeodesicSphereGen;

impl SurfaceGenerator for GeodesicSphereGen {
    fn name(&self) -> &'static str {
        "gsphere"
    }
    fn aliases(&self) -> &'static [&'static str] {
        &["sphere"]
    }
    fn parameters(&self) -> &'static [(&'static str, Option<f64>)] {
        &[("r", None), ("c1", Some(0.0)), ("c2", Some(0.0)), ("c3", Some(0.0)), ("c4", Some(1.0))]
    }
    fn build(&self, params: &Params, res: usize) -> Result<SurfaceMesh> {
        let c = ["c1", "c2", "c3", "c4"]
            .iter()
            .map(|k| param(self, params, k))
            .collect::<Result<Vec<_>>>()?;
        let p = SpherePoint::from_array([c[0], c[1], c[2], c[3]])?;
        make_geodesic_sphere(p, param(self, params, "r")?, res)
    }
}

struct RevolutionGen;

impl SurfaceGenerator for RevolutionGen {
    fn name(&self) -> &'static str {
        "revolution"
    }
    fn parameters(&self) -> &'static [(&'static str, Option<f64>)] {
        &[("R", None), ("r", Some(1.0))]
    }
    fn build(&self, params: &Params, res: usize) -> Result<SurfaceMesh> {
        make_revolution_torus(param(self, params, "R")?, param(self, params, "r")?, res)
    }
}

/// Surface generators looked up by name or alias.
pub struct GeneratorRegistry {
    entries: Vec<Box<dyn SurfaceGenerator>>,
}

impl Default for GeneratorRegistry {
    fn default() -> Self {
        let mut r = GeneratorRegistry { entries: Vec::new() };
        r.register(Box::new(FlatTorusGen));
        r.register(Box::new(GeodesicSphereGen));
        r.register(Box::new(RevolutionGen));
        r
    }
}

impl GeneratorRegistry {
    pub fn empty() -> Self {
        GeneratorRegistry { entries: Vec::new() }
    }

    /// Add a generator; a later registration shadows an earlier one of the same name.
    pub fn register(&mut self, g: Box<dyn SurfaceGenerator>) {
        self.entries.retain(|e| e.name() != g.name());
        self.entries.push(g);
    }

    pub fn get(&self, name: &str) -> Option<&dyn SurfaceGenerator> {
        self.entries
            .iter()
            .rev()
            .find(|g| g.name() == name || g.aliases().contains(&name))
            .map(|g| g.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|g| g.name()).collect()
    }

    pub fn build(&self, name: &str, params: &Params, res: usize) -> Result<SurfaceMesh> {
        let g = self
            .get(name)
            .ok_or_else(|| invalid(format!("unknown surface '{name}' (known: {})", self.names().join(", "))))?;
        g.build(params, res)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{area, gauss_bonnet_defect};
    use std::f64::consts::PI;

    #[test]
    fn cube_sphere_counts_and_area() {
        let m = make_geodesic_sphere(SpherePoint::basis(3), PI / 2.0, 64).unwrap();
        assert_eq!(m.len(), 6 * 64 * 64 + 2);
        assert_eq!(m.genus, 0);
        m.validate().unwrap();
        assert!((area(&m) / (4.0 * PI) - 1.0).abs() < 5e-3);
        let q = make_geodesic_sphere(SpherePoint::basis(0), PI / 4.0, 64).unwrap();
        assert!((area(&q) / (2.0 * PI) - 1.0).abs() < 5e-3);
        assert!(gauss_bonnet_defect(&q).unwrap().abs() < 0.05 * 4.0 * PI);
    }

    #[test]
    fn torus_meshes_are_valid() {
        for m in [make_flat_torus(0.6, 32).unwrap(), make_revolution_torus(2.0, 1.0, 32).unwrap()] {
            m.validate().unwrap();
            assert_eq!(m.genus, 1);
            assert_eq!(m.len(), 32 * 32);
        }
        assert!(make_flat_torus(1.0, 8).is_err());
        assert!(make_flat_torus(0.0, 8).is_err());
    }

    #[test]
    fn registry_lookup() {
        let r = GeneratorRegistry::default();
        assert_eq!(r.get("clifford").unwrap().name(), "flat");
        let mut p = Params::new();
        assert!(r.build("gsphere", &p, 4).is_err());
        p.insert("r".into(), 1.0);
        assert_eq!(r.build("gsphere", &p, 4).unwrap().genus, 0);
        assert!(r.build("klein", &p, 4).is_err());
    }
}
