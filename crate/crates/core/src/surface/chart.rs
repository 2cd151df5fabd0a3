//! Parametric charts with exact first and second derivatives.

use std::f64::consts::TAU;
use std::fmt::Debug;

use nalgebra::{Matrix2, Matrix3, Vector2};

use crate::error::{invalid, Error, Result};
use crate::s3::{orthogonal_complement, SpherePoint, Vec4};

/// Position and derivatives of a chart at one parameter value, plus a vector
/// whose inner product with the oriented normal is positive.
#[derive(Debug, Clone, Copy)]
pub struct Jet {
    pub x: Vec4,
    pub xu: Vec4,
    pub xv: Vec4,
    pub xuu: Vec4,
    pub xuv: Vec4,
    pub xvv: Vec4,
    pub orient: Vec4,
}

/// Oriented unit normal and principal curvatures (`k1 ≥ k2`) at a point.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    pub x: Vec4,
    pub n: Vec4,
    pub k1: f64,
    pub k2: f64,
}

pub trait Chart: Send + Sync + Debug {
    fn name(&self) -> &'static str;

    fn jet(&self, u: f64, v: f64) -> Jet;

    /// Period of each parameter, `None` when the parameter is not periodic.
    fn periods(&self) -> [Option<f64>; 2] {
        [Some(TAU), Some(TAU)]
    }

    /// Exact frame at `(u, v)`; charts with closed-form curvature override this.
    fn frame(&self, u: f64, v: f64) -> Result<Frame> {
        frame_from_jet(&self.jet(u, v))
    }

    /// Parameters of the point of the surface closest to `z ∈ S³`, by Newton
    /// iteration on `⟨z, x(u,v)⟩` started at `init`.
    fn foot(&self, z: &Vec4, init: [f64; 2]) -> Option<[f64; 2]> {
        newton_foot(self, z, init)
    }
}

pub(crate) fn newton_foot<C: Chart + ?Sized>(c: &C, z: &Vec4, init: [f64; 2]) -> Option<[f64; 2]> {
    let mut uv = Vector2::new(init[0], init[1]);
    for _ in 0..60 {
        let j = c.jet(uv[0], uv[1]);
        let g = Vector2::new(z.dot(&j.xu), z.dot(&j.xv));
        let h = Matrix2::new(z.dot(&j.xuu), z.dot(&j.xuv), z.dot(&j.xuv), z.dot(&j.xvv));
        let step = match h.try_inverse() {
            Some(hi) if h.determinant() > 0.0 && h[(0, 0)] < 0.0 => -(hi * g),
            _ => g * 0.1,
        };
        let step = if step.norm() > 0.5 { step * (0.5 / step.norm()) } else { step };
        uv += step;
        if step.norm() < 1e-15 {
            break;
        }
    }
    let j = c.jet(uv[0], uv[1]);
    let g = Vector2::new(z.dot(&j.xu), z.dot(&j.xv));
    let scale = j.xu.norm().max(j.xv.norm());
    if g.norm() <= 1e-9 * scale.max(1.0) {
        Some(wrap(c.periods(), [uv[0], uv[1]]))
    } else {
        None
    }
}

fn wrap(periods: [Option<f64>; 2], uv: [f64; 2]) -> [f64; 2] {
    let mut out = uv;
    for k in 0..2 {
        if let Some(p) = periods[k] {
            out[k] = uv[k].rem_euclid(p);
        }
    }
    out
}

/// Unit vector orthogonal to three vectors of R⁴ (generalized cross product).
pub fn cross4(a: &Vec4, b: &Vec4, c: &Vec4) -> Vec4 {
    let m = |i: usize| {
        let cols: Vec<usize> = (0..4).filter(|&k| k != i).collect();
        Matrix3::new(
            a[cols[0]], a[cols[1]], a[cols[2]],
            b[cols[0]], b[cols[1]], b[cols[2]],
            c[cols[0]], c[cols[1]], c[cols[2]],
        )
        .determinant()
    };
    Vec4::new(-m(0), m(1), -m(2), m(3))
}

/// 4×4 determinant of the columns `a, b, c, d`.
pub fn det4(a: &Vec4, b: &Vec4, c: &Vec4, d: &Vec4) -> f64 {
    cross4(a, b, c).dot(d)
}

/// Normal and principal curvatures from a jet: the shape operator `I⁻¹ II`
/// with `II` measured against the oriented normal.
pub fn frame_from_jet(j: &Jet) -> Result<Frame> {
    let mut n = cross4(&j.x, &j.xu, &j.xv);
    let nn = n.norm();
    if nn < 1e-14 {
        return Err(Error::InconsistentCurvature("degenerate chart jet".into()));
    }
    n /= nn;
    if n.dot(&j.orient) < 0.0 {
        n = -n;
    }
    let (e, f, g) = (j.xu.dot(&j.xu), j.xu.dot(&j.xv), j.xv.dot(&j.xv));
    let (l, m, nn2) = (j.xuu.dot(&n), j.xuv.dot(&n), j.xvv.dot(&n));
    let (k1, k2) = principal_from_forms(e, f, g, l, m, nn2)?;
    Ok(Frame { x: j.x, n, k1, k2 })
}

/// Eigenvalues (descending) of `I⁻¹ II` for first form `(E,F,G)` and second form `(L,M,N)`.
pub fn principal_from_forms(e: f64, f: f64, g: f64, l: f64, m: f64, n: f64) -> Result<(f64, f64)> {
    let det_i = e * g - f * f;
    if det_i <= 0.0 {
        return Err(Error::InconsistentCurvature("degenerate first fundamental form".into()));
    }
    let h = (e * n - 2.0 * f * m + g * l) / (2.0 * det_i);
    let k = (l * n - m * m) / det_i;
    let disc = (h * h - k).max(0.0).sqrt();
    Ok((h + disc, h - disc))
}

/// The product torus `(a cos u, a sin u, b cos v, b sin v)`, `b = √(1−a²)`.
///
/// The normal points into the solid torus `{|x₁₂| < a}` around the `b`-circle,
/// which is therefore `A*`; principal curvatures are `b/a` and `−a/b`.
#[derive(Debug, Clone, Copy)]
pub struct FlatTorusChart {
    pub a: f64,
    pub b: f64,
}

impl FlatTorusChart {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(invalid(format!("flat torus radius a = {a} outside (0, 1)")));
        }
        Ok(FlatTorusChart { a, b: (1.0 - a * a).sqrt() })
    }

    pub fn normal(&self, u: f64, v: f64) -> Vec4 {
        Vec4::new(-self.b * u.cos(), -self.b * u.sin(), self.a * v.cos(), self.a * v.sin())
    }
}

impl Chart for FlatTorusChart {
    fn name(&self) -> &'static str {
        "flat"
    }

    fn jet(&self, u: f64, v: f64) -> Jet {
        let (a, b) = (self.a, self.b);
        let (cu, su, cv, sv) = (u.cos(), u.sin(), v.cos(), v.sin());
        Jet {
            x: Vec4::new(a * cu, a * su, b * cv, b * sv),
            xu: Vec4::new(-a * su, a * cu, 0.0, 0.0),
            xv: Vec4::new(0.0, 0.0, -b * sv, b * cv),
            xuu: Vec4::new(-a * cu, -a * su, 0.0, 0.0),
            xuv: Vec4::zeros(),
            xvv: Vec4::new(0.0, 0.0, -b * cv, -b * sv),
            orient: self.normal(u, v),
        }
    }

    fn frame(&self, u: f64, v: f64) -> Result<Frame> {
        let j = self.jet(u, v);
        Ok(Frame { x: j.x, n: self.normal(u, v), k1: self.b / self.a, k2: -self.a / self.b })
    }

    fn foot(&self, z: &Vec4, _init: [f64; 2]) -> Option<[f64; 2]> {
        let (r1, r2) = (z[0].hypot(z[1]), z[2].hypot(z[3]));
        if r1 < 1e-15 || r2 < 1e-15 {
            return None;
        }
        Some([z[1].atan2(z[0]).rem_euclid(TAU), z[3].atan2(z[2]).rem_euclid(TAU)])
    }
}

/// Torus of revolution in R³ pulled back to S³ by inverse stereographic
/// projection from `e₄`. `u` is the tube angle, `v` the angle about the axis.
/// The normal is the image of the outward normal of the R³ torus.
#[derive(Debug, Clone, Copy)]
pub struct RevolutionTorusChart {
    pub major: f64,
    pub minor: f64,
}

impl RevolutionTorusChart {
    pub fn new(major: f64, minor: f64) -> Result<Self> {
        if !(minor > 0.0) || !major.is_finite() {
            return Err(invalid("torus radii must be positive and finite"));
        }
        if major <= minor {
            return Err(Error::SelfIntersecting { major, minor });
        }
        Ok(RevolutionTorusChart { major, minor })
    }
}

/// First and second derivatives of `σ(w) = e₄ + 2(w − e₄)/(1+|w|²)`.
struct InvStereo {
    w: Vec4,
    g: f64,
}

impl InvStereo {
    fn new(w: Vec4) -> Self {
        InvStereo { w, g: 1.0 / (1.0 + w.norm_squared()) }
    }
    fn e4() -> Vec4 {
        Vec4::new(0.0, 0.0, 0.0, 1.0)
    }
    fn value(&self) -> Vec4 {
        Self::e4() + (self.w - Self::e4()) * (2.0 * self.g)
    }
    fn dg(&self, h: &Vec4) -> f64 {
        -2.0 * self.w.dot(h) * self.g * self.g
    }
    fn d(&self, h: &Vec4) -> Vec4 {
        h * (2.0 * self.g) + (self.w - Self::e4()) * (2.0 * self.dg(h))
    }
    fn d2(&self, h: &Vec4, k: &Vec4) -> Vec4 {
        let g2 = self.g * self.g;
        let ddg = -2.0 * h.dot(k) * g2 + 8.0 * self.w.dot(h) * self.w.dot(k) * g2 * self.g;
        h * (2.0 * self.dg(k)) + k * (2.0 * self.dg(h)) + (self.w - Self::e4()) * (2.0 * ddg)
    }
}

impl Chart for RevolutionTorusChart {
    fn name(&self) -> &'static str {
        "revolution"
    }

    fn jet(&self, u: f64, v: f64) -> Jet {
        let (big, r) = (self.major, self.minor);
        let (cu, su, cv, sv) = (u.cos(), u.sin(), v.cos(), v.sin());
        let rho = big + r * cu;
        let x = Vec4::new(rho * cv, rho * sv, r * su, 0.0);
        let xu = Vec4::new(-r * su * cv, -r * su * sv, r * cu, 0.0);
        let xv = Vec4::new(-rho * sv, rho * cv, 0.0, 0.0);
        let xuu = Vec4::new(-r * cu * cv, -r * cu * sv, -r * su, 0.0);
        let xuv = Vec4::new(r * su * sv, -r * su * cv, 0.0, 0.0);
        let xvv = Vec4::new(-rho * cv, -rho * sv, 0.0, 0.0);
        let outward = Vec4::new(cu * cv, cu * sv, su, 0.0);
        let s = InvStereo::new(x);
        Jet {
            x: s.value(),
            xu: s.d(&xu),
            xv: s.d(&xv),
            xuu: s.d2(&xu, &xu) + s.d(&xuu),
            xuv: s.d2(&xu, &xv) + s.d(&xuv),
            xvv: s.d2(&xv, &xv) + s.d(&xvv),
            orient: s.d(&outward),
        }
    }
}

/// Geodesic sphere `∂B_r(p)` in spherical coordinates about an orthonormal
/// frame of `p⊥`. The normal points into the ball, giving `k₁ = k₂ = cot r`.
#[derive(Debug, Clone, Copy)]
pub struct GeodesicSphereChart {
    pub center: SpherePoint,
    pub radius: f64,
    pub basis: [Vec4; 3],
}

impl GeodesicSphereChart {
    pub fn new(center: SpherePoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius < std::f64::consts::PI) {
            return Err(invalid(format!("geodesic sphere radius {radius} outside (0, pi)")));
        }
        let p = *center.coords();
        let e1 = orthogonal_complement(&[p]);
        let e2 = orthogonal_complement(&[p, e1]);
        let e3 = orthogonal_complement(&[p, e1, e2]);
        Ok(GeodesicSphereChart { center, radius, basis: [e1, e2, e3] })
    }

    /// Point of the sphere in the direction of the unit 3-vector `y`.
    pub fn point(&self, y: [f64; 3]) -> Vec4 {
        let (c, s) = (self.radius.cos(), self.radius.sin());
        self.center.coords() * c + self.lift(y) * s
    }

    pub fn inward_normal(&self, y: [f64; 3]) -> Vec4 {
        let (c, s) = (self.radius.cos(), self.radius.sin());
        self.center.coords() * s - self.lift(y) * c
    }

    fn lift(&self, y: [f64; 3]) -> Vec4 {
        self.basis[0] * y[0] + self.basis[1] * y[1] + self.basis[2] * y[2]
    }

    pub fn curvature(&self) -> f64 {
        1.0 / self.radius.tan()
    }

    pub fn polar(&self, x: &Vec4) -> [f64; 2] {
        let y = [x.dot(&self.basis[0]), x.dot(&self.basis[1]), x.dot(&self.basis[2])];
        let r = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt().max(1e-300);
        [(y[2] / r).clamp(-1.0, 1.0).acos(), y[1].atan2(y[0]).rem_euclid(TAU)]
    }
}

impl Chart for GeodesicSphereChart {
    fn name(&self) -> &'static str {
        "gsphere"
    }

    fn periods(&self) -> [Option<f64>; 2] {
        [None, Some(TAU)]
    }

    fn jet(&self, u: f64, v: f64) -> Jet {
        let s = self.radius.sin();
        let (cu, su, cv, sv) = (u.cos(), u.sin(), v.cos(), v.sin());
        let y = [su * cv, su * sv, cu];
        let l = |a: [f64; 3]| self.lift(a) * s;
        Jet {
            x: self.point(y),
            xu: l([cu * cv, cu * sv, -su]),
            xv: l([-su * sv, su * cv, 0.0]),
            xuu: l([-su * cv, -su * sv, -cu]),
            xuv: l([-cu * sv, cu * cv, 0.0]),
            xvv: l([-su * cv, -su * sv, 0.0]),
            orient: self.inward_normal(y),
        }
    }

    fn frame(&self, u: f64, v: f64) -> Result<Frame> {
        let y = [u.sin() * v.cos(), u.sin() * v.sin(), u.cos()];
        let k = self.curvature();
        Ok(Frame { x: self.point(y), n: self.inward_normal(y), k1: k, k2: k })
    }

    fn foot(&self, z: &Vec4, _init: [f64; 2]) -> Option<[f64; 2]> {
        let y = [z.dot(&self.basis[0]), z.dot(&self.basis[1]), z.dot(&self.basis[2])];
        if (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt() < 1e-15 {
            return None;
        }
        Some(self.polar(z))
    }
}
