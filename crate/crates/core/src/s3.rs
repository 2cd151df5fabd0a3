//! Geometry of the round unit 3-sphere S³ ⊂ R⁴.

use nalgebra::Vector4;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};

pub type Vec4 = Vector4<f64>;

const NORM_TOL: f64 = 1e-12;
const SAMPLE_CHUNK: usize = 4096;

/// A point of S³. Construction renormalizes, so small float drift is absorbed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint(Vec4);

impl SpherePoint {
    pub fn new(coords: Vec4) -> Result<Self> {
        let n = coords.norm();
        if !n.is_finite() || n < 1e-300 {
            return Err(invalid("cannot normalize a zero or non-finite vector onto S3"));
        }
        Ok(SpherePoint(coords / n))
    }

    /// Like [`SpherePoint::new`] for inputs already known to be far from zero.
    pub fn normalize(coords: Vec4) -> Self {
        SpherePoint(coords / coords.norm())
    }

    pub fn from_array(c: [f64; 4]) -> Result<Self> {
        Self::new(Vec4::from(c))
    }

    /// Standard basis vector `e_{i+1}`.
    pub fn basis(i: usize) -> Self {
        let mut c = Vec4::zeros();
        c[i] = 1.0;
        SpherePoint(c)
    }

    pub fn coords(&self) -> &Vec4 {
        &self.0
    }

    pub fn antipode(&self) -> Self {
        SpherePoint(-self.0)
    }
}

/// A vector in the tangent space of S³ at `base`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentVector {
    pub base: SpherePoint,
    pub dir: Vec4,
}

impl TangentVector {
    pub fn new(base: SpherePoint, dir: Vec4) -> Result<Self> {
        let dot = base.coords().dot(&dir);
        if dot.abs() > 1e-10 * dir.norm().max(1.0) {
            return Err(invalid(format!("vector is not tangent (<x,N> = {dot:e})")));
        }
        Ok(TangentVector { base, dir })
    }

    /// A unit tangent vector; the tangent component of `dir` is kept and normalized.
    pub fn unit_projected(base: SpherePoint, dir: Vec4) -> Result<Self> {
        let x = base.coords();
        let t = dir - x * x.dot(&dir);
        let n = t.norm();
        if n < 1e-14 {
            return Err(invalid("tangent projection vanishes"));
        }
        Ok(TangentVector { base, dir: t / n })
    }

    pub fn is_unit(&self) -> bool {
        (self.dir.norm() - 1.0).abs() <= 1e-10
    }
}

/// Open geodesic ball `{x : d(x, center) < radius}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicBall {
    pub center: SpherePoint,
    pub radius: f64,
}

impl GeodesicBall {
    pub fn new(center: SpherePoint, radius: f64) -> Result<Self> {
        if !(0.0..=std::f64::consts::PI).contains(&radius) {
            return Err(invalid(format!("geodesic radius {radius} outside [0, pi]")));
        }
        Ok(GeodesicBall { center, radius })
    }

    pub fn contains(&self, x: &SpherePoint) -> bool {
        geodesic_distance(&self.center, x) < self.radius
    }

    /// Euclidean radius of the 4-ball cutting this geodesic ball out of S³.
    pub fn chord(&self) -> f64 {
        2.0 * (0.5 * self.radius).sin()
    }

    pub fn volume(&self) -> f64 {
        let r = self.radius;
        std::f64::consts::PI * (2.0 * r - (2.0 * r).sin())
    }
}

/// Geodesic distance on S³.
///
/// Evaluated as `2 atan2(|p−q|, |p+q|)`, which equals `arccos⟨p,q⟩` but stays
/// accurate near 0 and π.
pub fn geodesic_distance(p: &SpherePoint, q: &SpherePoint) -> f64 {
    let a = (p.0 - q.0).norm();
    let b = (p.0 + q.0).norm();
    2.0 * a.atan2(b)
}

/// Point reached after arclength `t` along the great circle through `p` with direction `n`.
pub fn exp_point(p: &SpherePoint, n: &TangentVector, t: f64) -> Result<SpherePoint> {
    if !n.is_unit() {
        return Err(invalid("exp_point needs a unit direction"));
    }
    if p.coords().dot(&n.dir).abs() > 1e-10 || (n.base.0 - p.0).norm() > 1e-10 {
        return Err(invalid("exp_point direction is not tangent at p"));
    }
    Ok(SpherePoint::normalize(p.0 * t.cos() + n.dir * t.sin()))
}

/// Euclidean chord length `2 sin(r/2)` of a geodesic radius `r ∈ [0, π]`.
pub fn chord_radius(r: f64) -> Result<f64> {
    if !(0.0..=std::f64::consts::PI).contains(&r) {
        return Err(invalid(format!("geodesic radius {r} outside [0, pi]")));
    }
    Ok(2.0 * (0.5 * r).sin())
}

/// Inverse of [`chord_radius`]: geodesic radius from a chord in `[0, 2]`.
pub fn geodesic_radius_from_chord(c: f64) -> Result<f64> {
    if !(0.0..=2.0).contains(&c) {
        return Err(invalid(format!("chord {c} outside [0, 2]")));
    }
    Ok(2.0 * (0.5 * c).asin())
}

/// Stereographic projection from the pole `x` onto the hyperplane `{x}⊥`.
pub fn stereographic(x: &SpherePoint, p: &SpherePoint) -> Result<Vec4> {
    let denom = 1.0 - p.0.dot(&x.0);
    if (p.0 - x.0).norm() <= NORM_TOL || denom <= 0.0 {
        return Err(Error::Pole);
    }
    let w = x.0 + (p.0 - x.0) / denom;
    // remove round-off along x
    Ok(w - x.0 * w.dot(&x.0))
}

/// Inverse stereographic projection `w ↦ 2/(1+|w|²)(w−x) + x` for `w ⊥ x`.
pub fn inverse_stereographic(x: &SpherePoint, w: &Vec4) -> SpherePoint {
    let w2 = w.norm_squared();
    SpherePoint::normalize((w - x.0) * (2.0 / (1.0 + w2)) + x.0)
}

/// `n` points uniformly distributed on S³ by normalizing 4D standard Gaussians.
///
/// The stream is cut into fixed-size chunks, each with its own ChaCha8 state
/// seeded from `(seed, chunk index)`, so the output does not depend on the
/// number of worker threads.
pub fn uniform_sample_s3(n: usize, seed: u64) -> Result<Vec<SpherePoint>> {
    if n == 0 {
        return Err(invalid("sample count must be at least 1"));
    }
    let chunks = n.div_ceil(SAMPLE_CHUNK);
    let out: Vec<Vec<SpherePoint>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, c as u64);
            let len = SAMPLE_CHUNK.min(n - c * SAMPLE_CHUNK);
            let mut v = Vec::with_capacity(len);
            while v.len() < len {
                let g = Vec4::from_fn(|_, _| StandardNormal.sample(&mut rng));
                let nrm = g.norm();
                if nrm > 1e-12 {
                    v.push(SpherePoint(g / nrm));
                }
            }
            v
        })
        .collect();
    Ok(out.into_iter().flatten().collect())
}

/// Deterministic generator for worker/chunk `index` derived from a base seed.
pub fn chunk_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A unit vector orthogonal to every column given, by Gram–Schmidt against the basis.
pub fn orthogonal_complement(vs: &[Vec4]) -> Vec4 {
    let mut best = Vec4::zeros();
    for i in 0..4 {
        let mut e = Vec4::zeros();
        e[i] = 1.0;
        for v in vs {
            let vn = v.norm_squared();
            if vn > 0.0 {
                e -= v * (v.dot(&e) / vn);
            }
        }
        if e.norm() > best.norm() {
            best = e;
        }
    }
    best / best.norm()
}

/// Random unit tangent vector at `p`.
pub fn random_tangent<R: rand::Rng>(p: &SpherePoint, rng: &mut R) -> TangentVector {
    loop {
        let g = Vec4::from_fn(|_, _| StandardNormal.sample(rng));
        if let Ok(t) = TangentVector::unit_projected(*p, g) {
            return t;
        }
    }
}

/// Random point of S³ from an explicit generator.
pub fn random_point<R: rand::Rng>(rng: &mut R) -> SpherePoint {
    loop {
        let g: Vec4 = Vec4::from_fn(|_, _| StandardNormal.sample(rng));
        if g.norm() > 1e-9 {
            return SpherePoint::normalize(g);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn distance_special_cases() {
        let p = SpherePoint::basis(0);
        assert_eq!(geodesic_distance(&p, &p), 0.0);
        assert!((geodesic_distance(&p, &p.antipode()) - PI).abs() < 1e-15);
        assert!((geodesic_distance(&p, &SpherePoint::basis(1)) - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn exp_point_cases() {
        let p = SpherePoint::basis(0);
        let n = TangentVector::new(p, Vec4::new(0.0, 1.0, 0.0, 0.0)).unwrap();
        assert!((exp_point(&p, &n, 0.0).unwrap().coords() - p.coords()).norm() < 1e-15);
        assert!((exp_point(&p, &n, PI).unwrap().coords() + p.coords()).norm() < 1e-15);
        let q = exp_point(&p, &n, FRAC_PI_2).unwrap();
        assert!((q.coords() - SpherePoint::basis(1).coords()).norm() < 1e-15);
        let bad = TangentVector { base: p, dir: Vec4::new(1.0, 0.0, 0.0, 0.0) };
        assert!(exp_point(&p, &bad, 1.0).is_err());
    }

    #[test]
    fn chord_values() {
        assert!((chord_radius(FRAC_PI_2).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((chord_radius(PI).unwrap() - 2.0).abs() < 1e-15);
        assert!(chord_radius(-0.1).is_err());
        assert!(chord_radius(3.2).is_err());
        // r̄_0 = π/2 pairs with R̄_0 = √2
        let rbar0 = FRAC_PI_2 - 0f64.atan();
        let big_r0 = (2.0f64 * (1.0 - 0.0)).sqrt();
        assert!((chord_radius(rbar0).unwrap() - big_r0).abs() < 1e-15);
    }

    #[test]
    fn stereographic_cases() {
        let x = SpherePoint::basis(3);
        let w = stereographic(&x, &x.antipode()).unwrap();
        assert!(w.norm() < 1e-15);
        let back = inverse_stereographic(&x, &Vec4::zeros());
        assert!((back.coords() + x.coords()).norm() < 1e-15);
        assert!(matches!(stereographic(&x, &x), Err(Error::Pole)));
    }

    #[test]
    fn sampling_is_deterministic_and_rejects_zero() {
        let a = uniform_sample_s3(5000, 11).unwrap();
        let b = uniform_sample_s3(5000, 11).unwrap();
        assert_eq!(a, b);
        assert!(uniform_sample_s3(0, 1).is_err());
    }

    #[test]
    fn sampling_symmetry() {
        let n = 1_000_000;
        let s = uniform_sample_s3(n, 2024).unwrap();
        let mut mean = Vec4::zeros();
        let mut upper = 0usize;
        let mut inside = 0usize;
        let p = SpherePoint::from_array([0.5, -0.5, 0.5, 0.5]).unwrap();
        for x in &s {
            mean += x.coords();
            if x.coords()[3] > 0.0 {
                upper += 1;
            }
            if geodesic_distance(&p, x) < FRAC_PI_2 {
                inside += 1;
            }
        }
        mean /= n as f64;
        assert!(mean.amax() < 0.005);
        assert!((upper as f64 / n as f64 - 0.5).abs() < 0.002);
        assert!((inside as f64 / n as f64 - 0.5).abs() < 0.002);
    }
}
