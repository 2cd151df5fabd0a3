//! Sublevel regions `A_(v,t) = {d_v < t}` by indicator sampling, and the
//! boundary blow-up diagnostics for `v` approaching S³.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::Serialize;

use super::degree::{extended_gauss_theta, rbar_theta};
use crate::conformal::{lambda_build, transform_mesh, ConformalParameter};
use crate::error::{invalid, Result};
use crate::s3::{GeodesicBall, SpherePoint, TangentVector, Vec4};
use crate::spatial::SignedDistance;
use crate::surface::SurfaceMesh;

/// Signed distance to a mesh `Σ_v`; negative inside `A_v`.
pub fn signed_distance(mesh_v: &SurfaceMesh, x: &SpherePoint) -> f64 {
    SignedDistance::new(mesh_v).signed(x)
}

/// Monte Carlo estimate of a volume in S³.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionSample {
    pub volume: f64,
    pub std_err: f64,
    pub inside: usize,
    pub total: usize,
}

impl RegionSample {
    pub fn from_count(inside: usize, total: usize) -> Self {
        let f = inside as f64 / total.max(1) as f64;
        let vol = 2.0 * PI * PI;
        RegionSample { volume: vol * f, std_err: vol * (f * (1.0 - f) / total.max(1) as f64).sqrt(), inside, total }
    }
}

/// Largest standard error of a Monte Carlo volume with `n` samples:
/// `2π²·√(1/(4n))`, attained at fraction one half.
pub fn mc_noise_floor(n: usize) -> f64 {
    2.0 * PI * PI * (0.25 / n.max(1) as f64).sqrt()
}

/// Membership in `A_(v,t)` for a fixed surface.
///
/// At `t = 0` the test is pulled back through the conformal map,
/// `x ∈ A_v ⇔ F_{−v}(x) ∈ A`, and only the original mesh is used. Other `t`
/// build the mesh `Σ_v` and compare its signed distance with `t`, which is
/// only as good as the resolution of `Σ_v`.
#[derive(Debug, Clone)]
pub struct RegionOracle {
    pub mesh: SurfaceMesh,
    pub distance: SignedDistance,
}

impl RegionOracle {
    pub fn new(mesh: &SurfaceMesh) -> Self {
        RegionOracle { mesh: mesh.clone(), distance: SignedDistance::new(mesh) }
    }

    /// `x ∈ A` for the original surface.
    pub fn in_a(&self, x: &SpherePoint) -> bool {
        !self.distance.in_a_star(x)
    }

    pub fn indicator(&self, v: &ConformalParameter, t: f64, samples: &[SpherePoint]) -> Result<Vec<bool>> {
        if t <= -PI {
            return Ok(vec![false; samples.len()]);
        }
        if t >= PI {
            return Ok(vec![true; samples.len()]);
        }
        if t == 0.0 {
            let back = v.inverse();
            return Ok(samples.par_iter().map(|x| self.in_a(&back.apply(x))).collect());
        }
        let mv = transform_mesh(v, &self.mesh)?;
        let d = SignedDistance::new(&mv);
        Ok(samples.par_iter().map(|x| d.signed(x) < t).collect())
    }
}

/// Volume of `A_(v,t)`: `2π² ×` the fraction of samples with `d_v < t`.
pub fn region_volume(
    oracle: &RegionOracle,
    v: &ConformalParameter,
    t: f64,
    samples: &[SpherePoint],
) -> Result<RegionSample> {
    let ind = oracle.indicator(v, t, samples)?;
    Ok(RegionSample::from_count(ind.iter().filter(|&&b| b).count(), samples.len()))
}

/// Approach of `v` to a point `p ∈ Σ` along `Λ(p, (s₁, s₂))` with `s₂/s₁ → k`,
/// where `k = tan θ` so that `θ = ±π/2` encodes the normal approaches.
#[derive(Debug, Clone, PartialEq)]
pub struct BlowupApproach {
    pub p: SpherePoint,
    pub normal: Vec4,
    pub theta: f64,
    pub s_sequence: Vec<f64>,
}

impl BlowupApproach {
    pub fn new(p: SpherePoint, normal: Vec4, theta: f64, s_sequence: Vec<f64>) -> Result<Self> {
        if p.coords().dot(&normal).abs() > 1e-10 || (normal.norm() - 1.0).abs() > 1e-10 {
            return Err(invalid("approach normal must be a unit tangent vector at p"));
        }
        if !(theta.abs() <= FRAC_PI_2) {
            return Err(invalid(format!("approach angle {theta} outside [-pi/2, pi/2]")));
        }
        check_sequence(&s_sequence)?;
        Ok(BlowupApproach { p, normal, theta, s_sequence })
    }

    pub fn is_normal(&self) -> bool {
        FRAC_PI_2 - self.theta.abs() < 1e-12
    }

    /// `Λ(p, (s, ks))` for finite `k`; `Λ(p, (s², ±s))` for `k = ±∞`.
    pub fn parameter(&self, s: f64) -> Vec4 {
        let n = TangentVector { base: self.p, dir: self.normal };
        if self.is_normal() {
            lambda_build(&self.p, &n, [s * s, self.theta.signum() * s])
        } else {
            lambda_build(&self.p, &n, [s, self.theta.tan() * s])
        }
    }

    /// The predicted limit ball `B_{r̄_k + t}(Q̄_{p,k})`, radius clamped to `[0, π]`.
    pub fn predicted(&self, t: f64) -> GeodesicBall {
        let q = extended_gauss_theta(&self.p, &self.normal, self.theta);
        GeodesicBall { center: q, radius: (rbar_theta(self.theta) + t).clamp(0.0, PI) }
    }
}

fn check_sequence(s: &[f64]) -> Result<()> {
    if s.is_empty() || s.iter().any(|&x| !(x > 0.0 && x < 1.0)) || s.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("s sequence must be decreasing values in (0, 1)"));
    }
    Ok(())
}

/// The three limit regimes of `A_(v_n, t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum BlowupCase {
    /// `v_n = v + s·direction → v ∈ B⁴`: limit `A_(v,t)`.
    Interior { v: Vec4, direction: Vec4, s_sequence: Vec<f64> },
    /// `v_n = (1−s)p` with `p ∈ A`: limit `B_{π+t}(p)`.
    Radial { p: SpherePoint, s_sequence: Vec<f64> },
    /// `v_n → p ∈ Σ` along an approach: limit `B_{r̄_k+t}(Q̄_{p,k})`.
    Boundary(BlowupApproach),
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowupReport {
    pub s: Vec<f64>,
    pub residual: Vec<f64>,
    pub std_err: Vec<f64>,
    pub noise_floor: f64,
    pub monotone: bool,
}

impl BlowupReport {
    /// Last residual within `factor ×` the noise floor.
    pub fn reaches_floor(&self, factor: f64) -> bool {
        self.residual.last().is_some_and(|&r| r <= factor * self.noise_floor)
    }
}

/// Monte Carlo volume of `A_(v_n,t) Δ (predicted limit)` along the sequence.
pub fn blowup_residual(
    oracle: &RegionOracle,
    case: &BlowupCase,
    t: f64,
    samples: &[SpherePoint],
) -> Result<BlowupReport> {
    if samples.is_empty() {
        return Err(invalid("blow-up residual needs samples"));
    }
    let (seq, params, limit): (Vec<f64>, Vec<Vec4>, Vec<bool>) = match case {
        BlowupCase::Interior { v, direction, s_sequence } => {
            check_sequence(s_sequence)?;
            let v0 = ConformalParameter::new(*v)?;
            let lim = oracle.indicator(&v0, t, samples)?;
            (s_sequence.clone(), s_sequence.iter().map(|s| v + direction * *s).collect(), lim)
        }
        BlowupCase::Radial { p, s_sequence } => {
            check_sequence(s_sequence)?;
            if !oracle.in_a(p) {
                return Err(invalid("radial blow-up needs p in A"));
            }
            let ball = GeodesicBall { center: *p, radius: (PI + t).clamp(0.0, PI) };
            let lim = samples.par_iter().map(|x| ball_contains_closed(&ball, x)).collect();
            (s_sequence.clone(), s_sequence.iter().map(|s| p.coords() * (1.0 - s)).collect(), lim)
        }
        BlowupCase::Boundary(a) => {
            let ball = a.predicted(t);
            let lim = samples.par_iter().map(|x| ball_contains_closed(&ball, x)).collect();
            (a.s_sequence.clone(), a.s_sequence.iter().map(|s| a.parameter(*s)).collect(), lim)
        }
    };
    let mut residual = Vec::with_capacity(seq.len());
    let mut std_err = Vec::with_capacity(seq.len());
    for v in &params {
        let vp = ConformalParameter::new(*v)?;
        let ind = oracle.indicator(&vp, t, samples)?;
        let diff = ind.iter().zip(&limit).filter(|(a, b)| a != b).count();
        let r = RegionSample::from_count(diff, samples.len());
        residual.push(r.volume);
        std_err.push(r.std_err);
    }
    let monotone = residual.windows(2).all(|w| w[1] <= w[0]);
    Ok(BlowupReport { s: seq, residual, std_err, noise_floor: mc_noise_floor(samples.len()), monotone })
}

fn ball_contains_closed(b: &GeodesicBall, x: &SpherePoint) -> bool {
    b.radius >= PI || b.contains(x)
}
