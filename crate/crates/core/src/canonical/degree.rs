//! The extended Gauss map `Q̄_{p,k}` and the degree of the collapse map.

use std::f64::consts::{FRAC_PI_2, PI};
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use serde::Serialize;

use super::region::{RegionOracle, RegionSample};
use crate::error::{invalid, Error, Result};
use crate::s3::{SpherePoint, Vec4};
use crate::surface::{gauss_bonnet_defect, integrate, require_curvature, SurfaceMesh};

/// `Q̄_{p,k} = −k/√(1+k²)·p − 1/√(1+k²)·N`, with `k = ±∞` allowed.
pub fn extended_gauss(p: &SpherePoint, n: &Vec4, k: f64) -> SpherePoint {
    extended_gauss_theta(p, n, k.atan())
}

/// `r̄_k = π/2 − arctan k`.
pub fn rbar(k: f64) -> f64 {
    rbar_theta(k.atan())
}

/// [`extended_gauss`] in the angle `θ = arctan k ∈ [−π/2, π/2]`: `−sin θ·p − cos θ·N`.
pub fn extended_gauss_theta(p: &SpherePoint, n: &Vec4, theta: f64) -> SpherePoint {
    SpherePoint::normalize(-(p.coords() * theta.sin()) - n * theta.cos())
}

pub fn rbar_theta(theta: f64) -> f64 {
    FRAC_PI_2 - theta
}

#[derive(Debug, Clone, Serialize)]
pub struct DegreeReport {
    pub degree: f64,
    pub genus: usize,
    pub euler_characteristic: i64,
    /// `∫_{Σ×[−ε,ε]} Q*(dV)` by Gauss–Legendre in `t` and vertex quadrature on `Σ`.
    pub tube_integral: f64,
    /// `−π²χ`.
    pub tube_closed_form: f64,
    /// `−(π/2)∫(K−1) − (π/2)area` from the mesh curvatures.
    pub tube_curvature_form: f64,
    pub vol_a: RegionSample,
    pub vol_a_star: RegionSample,
    pub gauss_bonnet_defect: f64,
    pub eps: f64,
}

/// Gauss–Legendre nodes used for the `t` integral.
pub const DEGREE_QUADRATURE_POINTS: usize = 64;

/// Per-point `t` integral of the pulled-back volume form,
/// `−∫_{−ε}^{ε} ε⁻²(k₁k₂√(ε²−t²) − (k₁+k₂)t + t²/√(ε²−t²)) dt`, after the
/// substitution `t = ε sin θ`, which removes the endpoint singularity and
/// makes the value independent of `ε`.
pub fn tube_fiber_integral(rule: &GaussLegendre, k1: f64, k2: f64) -> f64 {
    -rule.integrate(-FRAC_PI_2, FRAC_PI_2, |th| {
        let (s, c) = th.sin_cos();
        k1 * k2 * c * c - (k1 + k2) * s * c + s * s
    })
}

/// Degree of the collapse map `Q̄`:
/// `[vol(A) + vol(A*) + ∫_{Σ×[−ε,ε]} Q*(dV)] / 2π²`.
///
/// The volumes are sampled with the ray-parity indicator; the tube term is
/// integrated numerically and compared with `−π²χ`. A Gauss–Bonnet defect
/// above `gb_tol · 4π(1+g)` is reported as inconsistent curvature.
pub fn degree_gauss_map(
    mesh: &SurfaceMesh,
    eps: f64,
    samples: &[SpherePoint],
    gb_tol: f64,
) -> Result<DegreeReport> {
    require_curvature(mesh)?;
    if !(eps > 0.0 && eps < FRAC_PI_2) {
        return Err(invalid("tube half-width must lie in (0, pi/2)"));
    }
    if samples.is_empty() {
        return Err(invalid("degree computation needs volume samples"));
    }
    let defect = gauss_bonnet_defect(mesh)?;
    let scale = 4.0 * PI * (1.0 + mesh.genus as f64);
    if defect.abs() > gb_tol * scale {
        return Err(Error::InconsistentCurvature(format!(
            "Gauss-Bonnet defect {defect:.3e} exceeds {:.3e} for genus {}",
            gb_tol * scale,
            mesh.genus
        )));
    }
    let rule = GaussLegendre::new(NonZeroUsize::new(DEGREE_QUADRATURE_POINTS).expect("nonzero"));
    let fiber: Vec<f64> = (0..mesh.len()).map(|i| tube_fiber_integral(&rule, mesh.k1[i], mesh.k2[i])).collect();
    let tube = integrate(mesh, &fiber);
    let k_minus_one: Vec<f64> = (0..mesh.len()).map(|i| mesh.k1[i] * mesh.k2[i]).collect();
    let curvature_form = -FRAC_PI_2 * integrate(mesh, &k_minus_one) - FRAC_PI_2 * mesh.vertex_area.iter().sum::<f64>();
    let chi = mesh.euler_characteristic();
    let oracle = RegionOracle::new(mesh);
    let inside_a = samples.iter().filter(|x| oracle.in_a(x)).count();
    let vol_a = RegionSample::from_count(inside_a, samples.len());
    let vol_a_star = RegionSample::from_count(samples.len() - inside_a, samples.len());
    let full = vol_a.volume + vol_a_star.volume;
    Ok(DegreeReport {
        degree: (full + tube) / (2.0 * PI * PI),
        genus: mesh.genus,
        euler_characteristic: chi,
        tube_integral: tube,
        tube_closed_form: -PI * PI * chi as f64,
        tube_curvature_form: curvature_form,
        vol_a,
        vol_a_star,
        gauss_bonnet_defect: defect,
        eps,
    })
}

/// `(2π² + π²(2g−2)) / 2π²`, the degree identity at integer genus.
pub fn degree_identity(genus: usize) -> f64 {
    (2.0 * PI * PI + PI * PI * (2.0 * genus as f64 - 2.0)) / (2.0 * PI * PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::s3::uniform_sample_s3;
    use crate::surface::{make_flat_torus, make_geodesic_sphere, make_revolution_torus};
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

    #[test]
    fn gauss_map_special_values() {
        let p = SpherePoint::basis(0);
        let n = Vec4::new(0.0, 0.0, 1.0, 0.0);
        assert!((extended_gauss(&p, &n, 0.0).coords() + n).norm() < 1e-15);
        assert!((extended_gauss(&p, &n, f64::INFINITY).coords() + p.coords()).norm() < 1e-15);
        assert_eq!(rbar(f64::INFINITY), 0.0);
        let q = extended_gauss(&p, &n, 1.0);
        assert!((q.coords() + (p.coords() + n) * FRAC_1_SQRT_2).norm() < 1e-15);
        assert!((rbar(1.0) - FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn gauss_map_is_continuous_in_theta() {
        let p = SpherePoint::basis(1);
        let n = Vec4::new(0.6, 0.0, 0.0, 0.8);
        let m = 2000;
        for i in 0..m {
            let a = -FRAC_PI_2 + PI * i as f64 / m as f64;
            let b = a + PI / m as f64;
            let d = (extended_gauss_theta(&p, &n, a).coords() - extended_gauss_theta(&p, &n, b).coords()).norm();
            assert!(d <= 2.0 * (b - a));
            assert!((rbar_theta(a) - rbar_theta(b)).abs() <= 2.0 * (b - a));
        }
    }

    #[test]
    fn fiber_integral_matches_closed_form() {
        let rule = GaussLegendre::new(NonZeroUsize::new(DEGREE_QUADRATURE_POINTS).unwrap());
        for (k1, k2) in [(1.0, -1.0), (0.3, 2.0), (-4.0, 0.5)] {
            assert!((tube_fiber_integral(&rule, k1, k2) + FRAC_PI_2 * (k1 * k2 + 1.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn degree_identity_at_integer_genus() {
        for g in 0..4 {
            assert_eq!(degree_identity(g), g as f64);
        }
    }

    #[test]
    fn degrees_of_generators() {
        let pts = uniform_sample_s3(5000, 1).unwrap();
        let m = make_flat_torus(FRAC_1_SQRT_2, 64).unwrap();
        let r = degree_gauss_map(&m, 0.1, &pts, 0.05).unwrap();
        assert!((r.degree - 1.0).abs() < 0.02, "{r:?}");
        assert!(r.tube_integral.abs() < 0.01 * 2.0 * PI * PI);
        let m = make_revolution_torus(2f64.sqrt(), 1.0, 96).unwrap();
        let r = degree_gauss_map(&m, 0.1, &pts, 0.05).unwrap();
        assert!((r.degree - 1.0).abs() < 0.05, "{r:?}");
        let m = make_geodesic_sphere(SpherePoint::basis(3), PI / 3.0, 32).unwrap();
        let r = degree_gauss_map(&m, 0.1, &pts, 0.05).unwrap();
        assert!(r.degree.abs() < 0.02, "{r:?}");
        assert!((r.tube_integral - r.tube_closed_form).abs() < 0.01 * r.tube_closed_form.abs());
        assert!((r.tube_integral - r.tube_curvature_form).abs() < 1e-9);
    }

    #[test]
    fn wrong_curvature_is_rejected() {
        let mut m = make_geodesic_sphere(SpherePoint::basis(3), 1.0, 16).unwrap();
        m.k1.iter_mut().for_each(|k| *k = 0.0);
        m.k2.iter_mut().for_each(|k| *k = 0.0);
        let pts = uniform_sample_s3(100, 1).unwrap();
        assert!(matches!(degree_gauss_map(&m, 0.1, &pts, 0.05), Err(Error::InconsistentCurvature(_))));
    }
}
