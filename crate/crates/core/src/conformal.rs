//! Centered dilations `F_v` of S³, tubular coordinates and the collapse map `T`.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::s3::{SpherePoint, TangentVector, Vec4};
use crate::spatial::SignedDistance;
use crate::surface::{fit_curvatures, CurvatureSource, SurfaceMesh};

/// Parameter `v ∈ B⁴` of the conformal map `F_v(x) = (1−|v|²)(x−v)/|x−v|² − v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConformalParameter {
    v: Vec4,
}

pub const BALL_MARGIN: f64 = 1e-9;

impl ConformalParameter {
    pub fn new(v: Vec4) -> Result<Self> {
        let n = v.norm();
        if !n.is_finite() || n >= 1.0 - BALL_MARGIN {
            return Err(invalid(format!("conformal parameter |v| = {n} must be < 1")));
        }
        Ok(ConformalParameter { v })
    }

    pub fn zero() -> Self {
        ConformalParameter { v: Vec4::zeros() }
    }

    pub fn vector(&self) -> &Vec4 {
        &self.v
    }

    pub fn is_zero(&self) -> bool {
        self.v == Vec4::zeros()
    }

    /// `F_{−v}`, which inverts `F_v`.
    pub fn inverse(&self) -> Self {
        ConformalParameter { v: -self.v }
    }

    pub fn apply(&self, x: &SpherePoint) -> SpherePoint {
        SpherePoint::normalize(self.apply_raw(x.coords()))
    }

    pub fn apply_raw(&self, x: &Vec4) -> Vec4 {
        let d = x - self.v;
        d * ((1.0 - self.v.norm_squared()) / d.norm_squared()) - self.v
    }

    /// Conformal factor `λ = (1−|v|²)/|x−v|²` of `F_v` at `x`.
    pub fn conformal_factor(&self, x: &Vec4) -> f64 {
        (1.0 - self.v.norm_squared()) / (x - self.v).norm_squared()
    }

    /// Differential `DF_v|_x(h)`.
    pub fn differential(&self, x: &Vec4, h: &Vec4) -> Vec4 {
        let d = x - self.v;
        let d2 = d.norm_squared();
        (h - d * (2.0 * d.dot(h) / d2)) * ((1.0 - self.v.norm_squared()) / d2)
    }

    /// Unit normal of `F_v(Σ)` at `F_v(x)`: `N + 2⟨N,v⟩(x−v)/|x−v|²`.
    pub fn pushforward_normal(&self, x: &SpherePoint, n: &TangentVector) -> Result<TangentVector> {
        let xc = x.coords();
        if xc.dot(&n.dir).abs() > 1e-10 || !n.is_unit() {
            return Err(invalid("pushforward_normal needs a unit tangent normal"));
        }
        let out = self.pushforward_normal_raw(xc, &n.dir);
        let y = self.apply(x);
        // strip the rounding-level component along the image point
        let out = out - y.coords() * y.coords().dot(&out);
        Ok(TangentVector { base: y, dir: out / out.norm() })
    }

    pub fn pushforward_normal_raw(&self, x: &Vec4, n: &Vec4) -> Vec4 {
        let d = x - self.v;
        n + d * (2.0 * n.dot(&self.v) / d.norm_squared())
    }

    /// Principal curvature of `F_v(Σ)` from that of `Σ`: `(k − ∂_N log λ)/λ`.
    pub fn push_curvature(&self, x: &Vec4, n: &Vec4, k: f64) -> f64 {
        let d2 = (x - self.v).norm_squared();
        let lam = (1.0 - self.v.norm_squared()) / d2;
        (k - 2.0 * n.dot(&self.v) / d2) / lam
    }
}

/// `Σ_v = F_v(Σ)`: vertices by `F_v`, normals pushed forward, areas recomputed.
/// Exact curvature data is transported by the conformal factor; otherwise the
/// curvatures are refitted on the image mesh.
pub fn transform_mesh(v: &ConformalParameter, mesh: &SurfaceMesh) -> Result<SurfaceMesh> {
    if v.is_zero() {
        return Ok(mesh.clone());
    }
    let mut out = mesh.clone();
    out.chart = None;
    let data: Vec<(SpherePoint, Vec4, f64, f64)> = (0..mesh.len())
        .into_par_iter()
        .map(|i| {
            let x = mesh.vertices[i].coords();
            let n = &mesh.normals[i];
            let y = v.apply(&mesh.vertices[i]);
            let m = v.pushforward_normal_raw(x, n);
            let m = m - y.coords() * y.coords().dot(&m);
            let m = m / m.norm();
            let (k1, k2) = (v.push_curvature(x, n, mesh.k1[i]), v.push_curvature(x, n, mesh.k2[i]));
            (y, m, k1, k2)
        })
        .collect();
    for (i, (y, m, k1, k2)) in data.into_iter().enumerate() {
        out.vertices[i] = y;
        out.normals[i] = m;
        out.k1[i] = k1;
        out.k2[i] = k2;
    }
    out.recompute_areas();
    match mesh.curvature {
        CurvatureSource::Analytic => Ok(out),
        _ => fit_curvatures(&out),
    }
}

/// `Λ(p,s) = (1−s₁)(cos s₂ p + sin s₂ N)`.
pub fn lambda_build(p: &SpherePoint, n: &TangentVector, s: [f64; 2]) -> Vec4 {
    (p.coords() * s[1].cos() + n.dir * s[1].sin()) * (1.0 - s[0])
}

/// Tubular coordinates `(p, s)` of a point near `Σ`.
#[derive(Debug, Clone, Copy)]
pub struct TubularCoord {
    pub p: SpherePoint,
    pub normal: Vec4,
    pub s: [f64; 2],
    pub eps: f64,
}

impl TubularCoord {
    pub fn norm(&self) -> f64 {
        self.s[0].hypot(self.s[1])
    }
}

/// Cubic smoothstep on `[ε, 2ε]`: 0 below, 1 above.
pub fn phi(r: f64, eps: f64) -> f64 {
    let t = ((r - eps) / eps).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// A surface with its tube half-width `ε` and closest-point structure.
#[derive(Debug, Clone)]
pub struct Tube {
    pub mesh: SurfaceMesh,
    pub eps: f64,
    pub distance: SignedDistance,
}

impl Tube {
    /// Build with `ε = 0.4·min(1/max|k|, medial distance)`.
    pub fn new(mesh: &SurfaceMesh) -> Result<Self> {
        let distance = SignedDistance::new(mesh);
        let eps = default_eps(mesh, &distance)?;
        Ok(Tube { mesh: mesh.clone(), eps, distance })
    }

    pub fn with_eps(mesh: &SurfaceMesh, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(invalid("tube half-width must be positive"));
        }
        Ok(Tube { mesh: mesh.clone(), eps, distance: SignedDistance::new(mesh) })
    }

    /// Foot point and unit normal of the point of `Σ` closest to `z ∈ S³`.
    /// Chart-backed meshes refine the mesh foot by Newton iteration on the chart.
    pub fn foot(&self, z: &SpherePoint) -> (SpherePoint, Vec4) {
        let c = self.distance.bvh().closest(z.coords()).expect("mesh has faces");
        let f = self.mesh.faces[c.face];
        if let Some(link) = &self.mesh.chart {
            let init = interpolate_uv(link.chart.periods(), [link.uv[f[0]], link.uv[f[1]], link.uv[f[2]]], c.bary);
            if let Some(uv) = link.chart.foot(z.coords(), init) {
                if let Ok(fr) = link.chart.frame(uv[0], uv[1]) {
                    return (SpherePoint::normalize(fr.x), fr.n);
                }
            }
        }
        let p = SpherePoint::normalize(c.point);
        let n = self.mesh.normals[f[0]] * c.bary[0] + self.mesh.normals[f[1]] * c.bary[1] + self.mesh.normals[f[2]] * c.bary[2];
        let n = n - p.coords() * p.coords().dot(&n);
        (p, n / n.norm())
    }

    /// Inverse of `Λ`: recover `(p, s)` for a point of the closed ball.
    pub fn invert(&self, y: &Vec4) -> Result<TubularCoord> {
        let r = y.norm();
        let limit = 3.0 * self.eps;
        if r > 1.0 + 1e-12 {
            return Err(invalid("point lies outside the closed unit ball"));
        }
        let s1 = (1.0 - r).max(0.0);
        if s1 >= limit || r < 1e-12 {
            return Err(Error::OutOfTube { norm: s1, limit });
        }
        let z = SpherePoint::normalize(*y);
        let (p, n) = self.foot(&z);
        let s2 = z.coords().dot(&n).atan2(z.coords().dot(p.coords()));
        let norm = s1.hypot(s2);
        if norm >= limit {
            return Err(Error::OutOfTube { norm, limit });
        }
        Ok(TubularCoord { p, normal: n, s: [s1, s2], eps: self.eps })
    }

    pub fn build(&self, p: &SpherePoint, n: &Vec4, s: [f64; 2]) -> Result<Vec4> {
        if s[0] < 0.0 || s[0].hypot(s[1]) >= 3.0 * self.eps {
            return Err(Error::OutOfTube { norm: s[0].hypot(s[1]), limit: 3.0 * self.eps });
        }
        Ok(lambda_build(p, &TangentVector { base: *p, dir: *n }, s))
    }

    /// `T(Λ(p,s)) = Λ(p, φ(|s|)s)` inside `Ω_{3ε}`, identity elsewhere.
    pub fn retraction(&self, y: &Vec4) -> Vec4 {
        match self.invert(y) {
            Ok(tc) => {
                let f = phi(tc.norm(), self.eps);
                lambda_build(&tc.p, &TangentVector { base: tc.p, dir: tc.normal }, [f * tc.s[0], f * tc.s[1]])
            }
            Err(_) => *y,
        }
    }
}

fn interpolate_uv(periods: [Option<f64>; 2], uv: [[f64; 2]; 3], bary: [f64; 3]) -> [f64; 2] {
    let mut out = [0.0; 2];
    for k in 0..2 {
        let base = uv[0][k];
        let mut acc = 0.0;
        for i in 0..3 {
            let mut d = uv[i][k] - base;
            if let Some(p) = periods[k] {
                d -= p * (d / p).round();
            }
            acc += bary[i] * d;
        }
        out[k] = base + acc;
    }
    out
}

fn default_eps(mesh: &SurfaceMesh, dist: &SignedDistance) -> Result<f64> {
    let kmax = if mesh.has_curvature() {
        mesh.k1.iter().chain(&mesh.k2).fold(0.0f64, |a, k| a.max(k.abs()))
    } else {
        0.0
    };
    let focal = if kmax > 0.0 { 1.0 / kmax } else { f64::INFINITY };
    let medial = medial_distance(mesh, dist);
    let e = 0.4 * focal.min(medial);
    if !(e > 0.0 && e.is_finite()) {
        return Err(Error::InconsistentCurvature("could not determine a tube width".into()));
    }
    Ok(e)
}

/// Smallest distance along a normal geodesic at which the closest point of the
/// mesh stops being the starting vertex, over a vertex subsample.
pub fn medial_distance(mesh: &SurfaceMesh, dist: &SignedDistance) -> f64 {
    let h = mesh.mean_edge_length();
    let stride = (mesh.len() / 2000).max(1);
    (0..mesh.len())
        .into_par_iter()
        .filter(|i| i % stride == 0)
        .map(|i| {
            let x = mesh.vertices[i].coords();
            let n = mesh.normals[i];
            let mut best = std::f64::consts::FRAC_PI_2;
            for sign in [1.0, -1.0] {
                let stays = |tau: f64| {
                    let z = x * tau.cos() + n * (sign * tau.sin());
                    let c = dist.bvh().closest(&z).expect("mesh has faces");
                    (c.point - x).norm() <= 0.5 * tau + 2.0 * h
                };
                let (mut lo, mut hi) = (0.0, std::f64::consts::FRAC_PI_2);
                if stays(hi) {
                    continue;
                }
                for _ in 0..30 {
                    let mid = 0.5 * (lo + hi);
                    if stays(mid) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                best = best.min(lo);
            }
            best
        })
        .reduce(|| std::f64::consts::FRAC_PI_2, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::s3::{random_point, random_tangent};
    use crate::surface::chart::{frame_from_jet, Chart, Jet, RevolutionTorusChart};
    use crate::surface::make_flat_torus;
    use rand::SeedableRng;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn inverse_and_fixed_points() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let v = random_point(&mut rng).coords() * 0.8;
            let f = ConformalParameter::new(v).unwrap();
            let x = random_point(&mut rng);
            let back = f.inverse().apply(&f.apply(&x));
            assert!((back.coords() - x.coords()).norm() < 1e-12);
            let u = SpherePoint::normalize(v);
            assert!((f.apply(&u).coords() - u.coords()).norm() < 1e-12);
            assert!((f.apply(&u.antipode()).coords() + u.coords()).norm() < 1e-12);
            assert!((f.apply_raw(x.coords()).norm() - 1.0).abs() < 1e-12);
        }
        assert!(ConformalParameter::new(Vec4::new(1.0, 0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn pushforward_matches_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let f = ConformalParameter::new(random_point(&mut rng).coords() * 0.7).unwrap();
            let x = random_point(&mut rng);
            let n = random_tangent(&x, &mut rng);
            let h: f64 = 1e-6;
            let a = f.apply_raw(&(x.coords() * h.cos() + n.dir * h.sin()));
            let b = f.apply_raw(&(x.coords() * h.cos() - n.dir * h.sin()));
            let fd = (a - b).normalize();
            let pn = f.pushforward_normal(&x, &n).unwrap();
            assert!((pn.dir - fd).norm() < 1e-6);
            assert!(pn.dir.dot(pn.base.coords()).abs() < 1e-10 && pn.is_unit());
        }
    }

    #[test]
    fn curvature_transport_matches_composed_chart() {
        // jets of F_v ∘ chart by finite differences, compared with the transported curvatures
        let c = RevolutionTorusChart::new(2.0, 1.0).unwrap();
        let f = ConformalParameter::new(Vec4::new(0.3, -0.2, 0.4, 0.1)).unwrap();
        let (u, v) = (0.8, 2.3);
        let g = |a: f64, b: f64| f.apply_raw(&c.jet(a, b).x);
        let h = 1e-4;
        let j = Jet {
            x: g(u, v),
            xu: (g(u + h, v) - g(u - h, v)) / (2.0 * h),
            xv: (g(u, v + h) - g(u, v - h)) / (2.0 * h),
            xuu: (g(u + h, v) - g(u, v) * 2.0 + g(u - h, v)) / (h * h),
            xvv: (g(u, v + h) - g(u, v) * 2.0 + g(u, v - h)) / (h * h),
            xuv: (g(u + h, v + h) - g(u + h, v - h) - g(u - h, v + h) + g(u - h, v - h)) / (4.0 * h * h),
            orient: f.pushforward_normal_raw(&c.jet(u, v).x, &frame_from_jet(&c.jet(u, v)).unwrap().n),
        };
        let fd = frame_from_jet(&j).unwrap();
        let base = c.frame(u, v).unwrap();
        let k1 = f.push_curvature(&base.x, &base.n, base.k1);
        let k2 = f.push_curvature(&base.x, &base.n, base.k2);
        assert!((fd.k1 - k1).abs() < 1e-5 && (fd.k2 - k2).abs() < 1e-5, "{:?} {k1} {k2}", (fd.k1, fd.k2));
    }

    #[test]
    fn lambda_round_trip_and_retraction() {
        let m = make_flat_torus(FRAC_1_SQRT_2, 64).unwrap();
        let tube = Tube::new(&m).unwrap();
        assert!(tube.eps > 0.1 && tube.eps <= 0.4, "{}", tube.eps);
        let link = m.chart.as_ref().unwrap();
        for (i, s) in [(5usize, [0.01, 0.02]), (700, [0.0, -0.05]), (1234, [0.03, 0.0])] {
            let p = m.vertices[i];
            let n = TangentVector { base: p, dir: m.normals[i] };
            let y = tube.build(&p, &n.dir, s).unwrap();
            let tc = tube.invert(&y).unwrap();
            assert!((tc.p.coords() - p.coords()).norm() < 1e-8);
            assert!((tc.s[0] - s[0]).abs() < 1e-8 && (tc.s[1] - s[1]).abs() < 1e-8);
            let _ = link;
        }
        let p = m.vertices[10];
        let n = m.normals[10];
        let inner = lambda_build(&p, &TangentVector { base: p, dir: n }, [0.2 * tube.eps, 0.5 * tube.eps]);
        assert!((tube.retraction(&inner) - p.coords()).norm() < 1e-8);
        let s = [0.0, 2.0 * tube.eps];
        let edge = lambda_build(&p, &TangentVector { base: p, dir: n }, s);
        assert!((tube.retraction(&edge) - edge).norm() < 1e-8);
        let far = Vec4::new(0.0, 0.0, 0.0, 0.1);
        assert_eq!(tube.retraction(&far), far);
        assert!(matches!(tube.invert(&far), Err(Error::OutOfTube { .. })));
    }

    #[test]
    fn transform_identity_and_area_drop() {
        let m = make_flat_torus(FRAC_1_SQRT_2, 128).unwrap();
        let same = transform_mesh(&ConformalParameter::zero(), &m).unwrap();
        assert_eq!(same.vertices, m.vertices);
        let w = Vec4::new(0.3, 0.0, 0.0, 0.0);
        let t = transform_mesh(&ConformalParameter::new(w).unwrap(), &m).unwrap();
        let drop = crate::surface::area(&m) - crate::surface::area(&t);
        let f: Vec<f64> = (0..m.len())
            .map(|i| {
                let x = m.vertices[i].coords();
                4.0 * m.normals[i].dot(&w).powi(2) / (x - w).norm_squared().powi(2)
            })
            .collect();
        let predicted = crate::surface::integrate(&m, &f);
        assert!(drop > 0.0);
        assert!((drop / predicted - 1.0).abs() < 0.01, "{drop} {predicted}");
    }
}
