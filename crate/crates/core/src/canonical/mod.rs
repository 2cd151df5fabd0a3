//! The five-parameter family `Σ_(v,t)`: normal flow of the conformal images
//! `Σ_v = F_v(Σ)`, its Jacobian area bound, and sweeps over `(v, t)` grids.

pub mod concentration;
pub mod degree;
pub mod region;

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::conformal::{transform_mesh, ConformalParameter};
use crate::error::{invalid, Result};
use crate::s3::{SpherePoint, TangentVector, Vec4};
use crate::surface::{require_curvature, SurfaceMesh};
use crate::willmore::{fmt12, willmore_energy};

pub use concentration::{mass_concentration, ConcentrationReport};
pub use degree::{degree_gauss_map, extended_gauss, rbar, DegreeReport};
pub use region::{
    blowup_residual, mc_noise_floor, region_volume, BlowupApproach, BlowupCase, BlowupReport, RegionOracle,
    RegionSample,
};

/// A parameter `(v, t) ∈ B⁴ × [−π, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyPoint {
    pub v: ConformalParameter,
    pub t: f64,
}

impl FamilyPoint {
    pub fn new(v: ConformalParameter, t: f64) -> Result<Self> {
        if !(-PI..=PI).contains(&t) {
            return Err(invalid(format!("t = {t} outside [-pi, pi]")));
        }
        Ok(FamilyPoint { v, t })
    }
}

/// `P_(v,t)(x) = cos t·F_v(x) + sin t·N_v(x)`.
pub fn p_map(v: &ConformalParameter, t: f64, x: &SpherePoint, n: &TangentVector) -> Result<SpherePoint> {
    let nv = v.pushforward_normal(x, n)?;
    Ok(SpherePoint::normalize(nv.base.coords() * t.cos() + nv.dir * t.sin()))
}

/// Area Jacobian of the normal flow: `(cos t − k₁ sin t)(cos t − k₂ sin t)`.
pub fn jacobian_psi(k1: f64, k2: f64, t: f64) -> f64 {
    let (c, s) = (t.cos(), t.sin());
    (c - k1 * s) * (c - k2 * s)
}

/// The same Jacobian expanded: `(1+H²) − (sin t + H cos t)² − (k₁−k₂)² sin²t / 4`.
pub fn jacobian_psi_expanded(k1: f64, k2: f64, t: f64) -> f64 {
    let h = 0.5 * (k1 + k2);
    let (c, s) = (t.cos(), t.sin());
    (1.0 + h * h) - (s + h * c).powi(2) - 0.25 * (k1 - k2).powi(2) * s * s
}

/// `∫ max(Jac, 0) dΣ_v` on an already transformed mesh `Σ_v`.
pub fn area_upper_bound_image(mesh_v: &SurfaceMesh, t: f64) -> Result<f64> {
    require_curvature(mesh_v)?;
    Ok((0..mesh_v.len())
        .map(|i| jacobian_psi(mesh_v.k1[i], mesh_v.k2[i], t).max(0.0) * mesh_v.vertex_area[i])
        .sum())
}

/// Upper bound for `area(Σ_(v,t))`: `∫_{Jac ≥ 0} Jac dΣ_v`.
pub fn area_upper_bound(mesh: &SurfaceMesh, v: &ConformalParameter, t: f64) -> Result<f64> {
    area_upper_bound_image(&transform_mesh(v, mesh)?, t)
}

/// `n⁴` points with coordinates evenly spaced in `[−half, half]`.
pub fn cube_v_grid(n: usize, half: f64) -> Result<Vec<Vec4>> {
    if n == 0 || 2.0 * half * half >= 1.0 {
        return Err(invalid("v grid needs n ≥ 1 and 2·half² < 1 so every point lies in the unit ball"));
    }
    let axis = linspace(-half, half, n);
    let mut out = Vec::with_capacity(n.pow(4));
    for &a in &axis {
        for &b in &axis {
            for &c in &axis {
                for &d in &axis {
                    out.push(Vec4::new(a, b, c, d));
                }
            }
        }
    }
    Ok(out)
}

/// `n` evenly spaced values of `t` in `[−π, π]`.
pub fn t_grid(n: usize) -> Vec<f64> {
    linspace(-PI, PI, n)
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.5 * (a + b)],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RosRow {
    pub v: [f64; 4],
    pub t: f64,
    pub bound: f64,
    pub rhs: f64,
    pub slack: f64,
}

/// Result of checking `area bound ≤ W(Σ) − (sin²t/2)∫|Å|²` on a grid.
#[derive(Debug, Clone, Serialize)]
pub struct RosReport {
    pub willmore: f64,
    pub traceless_sq_integral: f64,
    pub rows: Vec<RosRow>,
    pub min_slack: f64,
    pub argmin: ([f64; 4], f64),
    pub tol_slack: f64,
    pub pass: bool,
}

impl RosReport {
    pub fn csv(&self) -> String {
        let mut s = String::from("v1,v2,v3,v4,t,bound,rhs,slack\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                fmt12(r.v[0]),
                fmt12(r.v[1]),
                fmt12(r.v[2]),
                fmt12(r.v[3]),
                fmt12(r.t),
                fmt12(r.bound),
                fmt12(r.rhs),
                fmt12(r.slack)
            );
        }
        s
    }
}

/// For every `(v, t)` compute `slack = W(Σ) − (sin²t/2)∫|Å|² − ∫_{Jac≥0} Jac dΣ_v`.
/// Passes when the smallest slack is at least `−tol_slack`.
pub fn verify_ros_inequality(
    mesh: &SurfaceMesh,
    v_grid: &[Vec4],
    t_grid: &[f64],
    tol_slack: f64,
) -> Result<RosReport> {
    if v_grid.is_empty() || t_grid.is_empty() {
        return Err(invalid("empty sweep grid"));
    }
    if t_grid.iter().any(|t| !t.is_finite()) {
        return Err(invalid("non-finite t in sweep grid"));
    }
    let e = willmore_energy(mesh)?;
    let params: Vec<ConformalParameter> = v_grid.iter().map(|v| ConformalParameter::new(*v)).collect::<Result<_>>()?;
    let rows: Vec<Vec<RosRow>> = params
        .par_iter()
        .map(|v| {
            let mv = transform_mesh(v, mesh)?;
            t_grid
                .iter()
                .map(|&t| {
                    let bound = area_upper_bound_image(&mv, t)?;
                    let rhs = e.willmore - 0.5 * t.sin().powi(2) * e.traceless_sq_integral;
                    Ok(RosRow { v: (*v.vector()).into(), t, bound, rhs, slack: rhs - bound })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let rows: Vec<RosRow> = rows.into_iter().flatten().collect();
    // first row wins ties so the report does not depend on scheduling
    let worst = rows.iter().fold(rows[0], |a, r| if r.slack < a.slack { *r } else { a });
    Ok(RosReport {
        willmore: e.willmore,
        traceless_sq_integral: e.traceless_sq_integral,
        min_slack: worst.slack,
        argmin: (worst.v, worst.t),
        tol_slack,
        pass: worst.slack >= -tol_slack,
        rows,
    })
}
