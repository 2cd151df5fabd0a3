//! Willmore energy, conformal invariance residuals and energy descent.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::conformal::{transform_mesh, ConformalParameter};
use crate::error::{invalid, Error, Result};
use crate::s3::{chunk_rng, SpherePoint, Vec4};
use crate::surface::chart::{cross4, Chart, FlatTorusChart, RevolutionTorusChart};
use crate::surface::curvature::{fit_at, two_rings, vertex_neighbors};
use crate::surface::{
    fit_curvatures, generators::mesh_periodic_chart, integrate, require_curvature, triangle_vertex_areas,
    vertex_faces, CurvatureSource, SurfaceMesh,
};

/// Area, `∫(1+H²)`, `∫|Å|²` and `max|H|` of a surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    pub area: f64,
    pub willmore: f64,
    pub traceless_sq_integral: f64,
    pub max_h: f64,
}

pub fn willmore_energy(mesh: &SurfaceMesh) -> Result<EnergyReport> {
    require_curvature(mesh)?;
    let n = mesh.len();
    let w: Vec<f64> = (0..n).map(|i| 1.0 + mesh.mean_curvature(i).powi(2)).collect();
    let t: Vec<f64> = (0..n).map(|i| 0.5 * (mesh.k1[i] - mesh.k2[i]).powi(2)).collect();
    let max_h = (0..n).map(|i| mesh.mean_curvature(i).abs()).fold(0.0, f64::max);
    Ok(EnergyReport {
        area: mesh.vertex_area.iter().sum(),
        willmore: integrate(mesh, &w),
        traceless_sq_integral: integrate(mesh, &t),
        max_h,
    })
}

/// `W` of the product torus with radii `(a, √(1−a²))`: `π²/(a√(1−a²))`.
pub fn flat_torus_energy_closed_form(a: f64) -> Result<f64> {
    if !(a > 0.0 && a < 1.0) {
        return Err(invalid(format!("flat torus radius a = {a} outside (0, 1)")));
    }
    Ok(PI * PI / (a * (1.0 - a * a).sqrt()))
}

/// `|W(F_v Σ) − W(Σ)|`.
pub fn conformal_invariance_residual(mesh: &SurfaceMesh, v: &ConformalParameter) -> Result<f64> {
    if v.is_zero() {
        return Ok(0.0);
    }
    let before = willmore_energy(mesh)?.willmore;
    let after = willmore_energy(&transform_mesh(v, mesh)?)?.willmore;
    Ok((after - before).abs())
}

/// Energy of a doubly periodic chart by the `n × n` trapezoid rule, which
/// converges spectrally for smooth periodic integrands.
pub fn chart_energy(chart: &dyn Chart, n: usize) -> Result<EnergyReport> {
    let h = TAU / n as f64;
    let rows: Vec<Result<(f64, f64, f64, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = (0.0, 0.0, 0.0, 0.0f64);
            for j in 0..n {
                let (u, v) = (i as f64 * h, j as f64 * h);
                let jet = chart.jet(u, v);
                let f = chart.frame(u, v)?;
                let da = (jet.xu.norm_squared() * jet.xv.norm_squared() - jet.xu.dot(&jet.xv).powi(2)).sqrt() * h * h;
                let hm = 0.5 * (f.k1 + f.k2);
                acc.0 += da;
                acc.1 += (1.0 + hm * hm) * da;
                acc.2 += 0.5 * (f.k1 - f.k2).powi(2) * da;
                acc.3 = acc.3.max(hm.abs());
            }
            Ok(acc)
        })
        .collect();
    let mut r = EnergyReport { area: 0.0, willmore: 0.0, traceless_sq_integral: 0.0, max_h: 0.0 };
    for row in rows {
        let (a, w, t, m) = row?;
        r.area += a;
        r.willmore += w;
        r.traceless_sq_integral += t;
        r.max_h = r.max_h.max(m);
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerMode {
    Parametric,
    Mesh,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OptimizerConfig {
    pub step: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub mode: OptimizerMode,
}

impl OptimizerConfig {
    pub fn new(step: f64, max_iters: usize, grad_tol: f64, mode: OptimizerMode) -> Result<Self> {
        if !(step > 0.0) || !(grad_tol > 0.0) {
            return Err(invalid("optimizer step and gradient tolerance must be positive"));
        }
        Ok(OptimizerConfig { step, max_iters, grad_tol, mode })
    }
}

/// One accepted optimizer iterate.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryRow {
    pub iter: usize,
    pub report: EnergyReport,
    pub grad_norm: f64,
    pub params: Vec<f64>,
}

pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let mut s = String::from("iter,area,willmore,traceless_sq,max_H,grad_norm\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.iter,
            fmt12(r.report.area),
            fmt12(r.report.willmore),
            fmt12(r.report.traceless_sq_integral),
            fmt12(r.report.max_h),
            fmt12(r.grad_norm)
        );
    }
    s
}

/// A float with 12 significant digits.
pub fn fmt12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{:.11e}", x);
    let v: f64 = s.parse().unwrap_or(x);
    format!("{v}")
}

/// A finite-dimensional family of surfaces whose energy can be descended.
pub trait EnergyFamily: Send + Sync {
    fn name(&self) -> &'static str;

    /// Names of the free parameters.
    fn parameter_names(&self) -> &'static [&'static str];

    /// Clamp a parameter vector into the admissible box.
    fn clamp(&self, p: &[f64]) -> Vec<f64>;

    fn chart(&self, p: &[f64]) -> Result<Arc<dyn Chart>>;

    fn energy(&self, p: &[f64]) -> Result<EnergyReport> {
        chart_energy(self.chart(p)?.as_ref(), 96)
    }
}

/// Product tori `a ∈ [0.05, 0.95]`.
pub struct FlatFamily;

impl EnergyFamily for FlatFamily {
    fn name(&self) -> &'static str {
        "flat"
    }
    fn parameter_names(&self) -> &'static [&'static str] {
        &["a"]
    }
    fn clamp(&self, p: &[f64]) -> Vec<f64> {
        vec![p[0].clamp(0.05, 0.95)]
    }
    fn chart(&self, p: &[f64]) -> Result<Arc<dyn Chart>> {
        Ok(Arc::new(FlatTorusChart::new(p[0])?))
    }
}

/// Tori of revolution with the tube radius `r` frozen; the free parameter is `R`.
pub struct RevolutionFamily {
    pub minor: f64,
}

impl EnergyFamily for RevolutionFamily {
    fn name(&self) -> &'static str {
        "revolution"
    }
    fn parameter_names(&self) -> &'static [&'static str] {
        &["R"]
    }
    fn clamp(&self, p: &[f64]) -> Vec<f64> {
        vec![p[0].max(self.minor * 1.001)]
    }
    fn chart(&self, p: &[f64]) -> Result<Arc<dyn Chart>> {
        Ok(Arc::new(RevolutionTorusChart::new(p[0], self.minor)?))
    }
}

/// Parametric families keyed by name.
pub struct FamilyRegistry {
    entries: BTreeMap<&'static str, Box<dyn Fn(&BTreeMap<String, f64>) -> Box<dyn EnergyFamily> + Send + Sync>>,
}

impl Default for FamilyRegistry {
    fn default() -> Self {
        let mut r = FamilyRegistry { entries: BTreeMap::new() };
        r.register("flat", Box::new(|_| Box::new(FlatFamily)));
        r.register(
            "revolution",
            Box::new(|p| Box::new(RevolutionFamily { minor: p.get("r").copied().unwrap_or(1.0) })),
        );
        r
    }
}

impl FamilyRegistry {
    pub fn register(
        &mut self,
        name: &'static str,
        make: Box<dyn Fn(&BTreeMap<String, f64>) -> Box<dyn EnergyFamily> + Send + Sync>,
    ) {
        self.entries.insert(name, make);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn make(&self, name: &str, fixed: &BTreeMap<String, f64>) -> Result<Box<dyn EnergyFamily>> {
        let name = if name == "clifford" { "flat" } else { name };
        self.entries
            .get(name)
            .map(|f| f(fixed))
            .ok_or_else(|| invalid(format!("unknown family '{name}' (known: {})", self.names().join(", "))))
    }
}

/// Result of an optimizer run: accepted iterates and the final surface.
#[derive(Debug, Clone)]
pub struct OptimizeResult {
    pub trajectory: Vec<TrajectoryRow>,
    pub params: Vec<f64>,
    pub mesh: SurfaceMesh,
}

fn stall(iterations: usize, reason: &str, trajectory: &[TrajectoryRow]) -> Error {
    Error::OptimizerStall { iterations, reason: format!("{reason}; trajectory: {}", trajectory_csv(trajectory)) }
}

/// Gradient descent on a parametric family with central-difference gradients
/// and halving backtracking (up to 30 halvings, strict decrease).
pub fn optimize_parametric(
    family: &dyn EnergyFamily,
    start: &[f64],
    cfg: &OptimizerConfig,
    mesh_res: usize,
) -> Result<OptimizeResult> {
    let mut p = family.clamp(start);
    let mut e = family.energy(&p)?;
    let mut traj = Vec::new();
    let mut alpha = cfg.step;
    let grad = |p: &[f64]| -> Result<Vec<f64>> {
        (0..p.len())
            .map(|k| {
                let h = 1e-5 * p[k].abs().max(1.0);
                let (mut a, mut b) = (p.to_vec(), p.to_vec());
                a[k] += h;
                b[k] -= h;
                Ok((family.energy(&a)?.willmore - family.energy(&b)?.willmore) / (2.0 * h))
            })
            .collect()
    };
    for iter in 0..=cfg.max_iters {
        let g = grad(&p)?;
        let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        traj.push(TrajectoryRow { iter, report: e, grad_norm: gn, params: p.clone() });
        if gn < cfg.grad_tol || iter == cfg.max_iters {
            break;
        }
        let mut accepted = false;
        let mut best_trial = f64::INFINITY;
        for _ in 0..=30 {
            let trial = family.clamp(&p.iter().zip(&g).map(|(x, d)| x - alpha * d).collect::<Vec<_>>());
            let et = family.energy(&trial)?;
            best_trial = best_trial.min(et.willmore);
            if et.willmore < e.willmore {
                p = trial;
                e = et;
                accepted = true;
                alpha *= 2.0;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            // flat to rounding: treat as converged
            if (best_trial - e.willmore).abs() <= 1e-13 * e.willmore.abs() {
                break;
            }
            return Err(stall(iter, "energy did not decrease after 30 halvings", &traj));
        }
    }
    let mesh = mesh_periodic_chart(family.chart(&p)?, mesh_res)?;
    Ok(OptimizeResult { trajectory: traj, params: p, mesh })
}

/// Perturb every vertex along its normal by `amplitude·U(−1,1)` radians.
pub fn perturb_normal(mesh: &SurfaceMesh, amplitude: f64, seed: u64) -> Result<SurfaceMesh> {
    let mut rng = chunk_rng(seed, 0);
    let delta: Vec<f64> = (0..mesh.len()).map(|_| amplitude * rng.random_range(-1.0..1.0)).collect();
    let moved = displace(mesh, &delta);
    fit_curvatures(&moved)
}

/// Move vertex `i` by `delta[i]` along its normal, renormalize, and recompute normals and areas.
fn displace(mesh: &SurfaceMesh, delta: &[f64]) -> SurfaceMesh {
    let mut m = mesh.clone();
    m.chart = None;
    for i in 0..m.len() {
        let x = mesh.vertices[i].coords();
        let n = mesh.normals[i];
        m.vertices[i] = SpherePoint::normalize(x * delta[i].cos() + n * delta[i].sin());
    }
    m.normals = geometric_normals(&m);
    m.recompute_areas();
    m.curvature = CurvatureSource::None;
    m
}

/// Area-weighted face normals, projected to the tangent space and oriented like the old normals.
fn geometric_normals(m: &SurfaceMesh) -> Vec<Vec4> {
    let mut acc = vec![Vec4::zeros(); m.len()];
    for f in &m.faces {
        let [a, b, c] = [*m.vertices[f[0]].coords(), *m.vertices[f[1]].coords(), *m.vertices[f[2]].coords()];
        // face orientation convention: det(a+b+c, b−a, c−a, N) > 0
        let n = cross4(&(a + b + c), &(b - a), &(c - a));
        for &i in f {
            acc[i] += n;
        }
    }
    acc.iter()
        .enumerate()
        .map(|(i, n)| {
            let x = m.vertices[i].coords();
            let t = n - x * x.dot(n);
            let t = t / t.norm();
            if t.dot(&m.normals[i]) < 0.0 {
                -t
            } else {
                t
            }
        })
        .collect()
}

/// Projected gradient descent on vertex positions along the normals, with
/// finite-difference gradients (step `1e−4 ×` local edge length) and an
/// area-preconditioned step. Only the energy terms a vertex can influence are
/// re-evaluated for its derivative: fits over its two-ring, areas over its one-ring.
pub fn optimize_mesh(start: &SurfaceMesh, cfg: &OptimizerConfig) -> Result<OptimizeResult> {
    let adj = vertex_neighbors(start);
    let rings = two_rings(start);
    let vf = vertex_faces(start);
    let mut mesh = if start.has_curvature() { start.clone() } else { fit_curvatures(start)? };
    let mut e = willmore_energy(&mesh)?;
    let mut traj = Vec::new();
    let mut alpha = cfg.step;
    for iter in 0..=cfg.max_iters {
        let g: Vec<f64> = (0..mesh.len())
            .into_par_iter()
            .map(|i| {
                let x = *mesh.vertices[i].coords();
                let n = mesh.normals[i];
                let edge = adj[i].iter().map(|&k| (mesh.vertices[k].coords() - x).norm()).sum::<f64>()
                    / adj[i].len() as f64;
                let h = 1e-4 * edge;
                let eval = |d: f64| {
                    let moved = (x * d.cos() + n * d.sin()).normalize();
                    let pos = |k: usize| if k == i { moved } else { *mesh.vertices[k].coords() };
                    let mut total = 0.0;
                    for &j in rings[i].iter().chain(std::iter::once(&i)) {
                        let xj = pos(j);
                        let (k1, k2) = fit_at(j, &xj, &mesh.normals[j], &rings[j], pos).unwrap_or((0.0, 0.0));
                        let hm = 0.5 * (k1 + k2);
                        let mut aj = 0.0;
                        for &f in &vf[j] {
                            let t = mesh.faces[f];
                            let c = triangle_vertex_areas(&pos(t[0]), &pos(t[1]), &pos(t[2]));
                            aj += c[t.iter().position(|&q| q == j).unwrap()];
                        }
                        total += (1.0 + hm * hm) * aj;
                    }
                    total
                };
                (eval(h) - eval(-h)) / (2.0 * h)
            })
            .collect();
        let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        traj.push(TrajectoryRow { iter, report: e, grad_norm: gn, params: vec![] });
        if gn < cfg.grad_tol || iter == cfg.max_iters {
            break;
        }
        let dir: Vec<f64> = g.iter().zip(&mesh.vertex_area).map(|(g, a)| -g / a).collect();
        let mut accepted = false;
        for _ in 0..=30 {
            let delta: Vec<f64> = dir.iter().map(|d| alpha * d).collect();
            let trial = fit_curvatures(&displace(&mesh, &delta))?;
            let et = willmore_energy(&trial)?;
            if et.willmore < e.willmore {
                mesh = trial;
                e = et;
                accepted = true;
                alpha *= 1.5;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(stall(iter, "energy did not decrease after 30 halvings", &traj));
        }
    }
    Ok(OptimizeResult { trajectory: traj, params: vec![], mesh })
}

/// Random Clifford start used by tests and the command line.
pub fn perturbed_clifford(res: usize, amplitude: f64, seed: u64) -> Result<SurfaceMesh> {
    let m = crate::surface::make_flat_torus(std::f64::consts::FRAC_1_SQRT_2, res)?;
    perturb_normal(&m, amplitude, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{make_flat_torus, make_geodesic_sphere};
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn geodesic_spheres_have_energy_four_pi() {
        for r in [0.4, PI / 3.0, 1.2] {
            let m = make_geodesic_sphere(SpherePoint::basis(3), r, 48).unwrap();
            let w = willmore_energy(&m).unwrap().willmore;
            assert!((w - 4.0 * PI).abs() < 1e-2 * 4.0 * PI, "r={r} W={w}");
        }
    }

    #[test]
    fn flat_tori_match_closed_form() {
        let m = make_flat_torus(FRAC_1_SQRT_2, 64).unwrap();
        let r = willmore_energy(&m).unwrap();
        assert!((r.willmore - 2.0 * PI * PI).abs() < 1e-2 * 2.0 * PI * PI);
        assert!(r.max_h < 1e-12);
        let m = make_flat_torus(0.6, 64).unwrap();
        let w = willmore_energy(&m).unwrap().willmore;
        let exact = PI * PI / 0.48;
        assert!((flat_torus_energy_closed_form(0.6).unwrap() - exact).abs() < 1e-12);
        assert!((w - exact).abs() < 1e-2 * exact, "{w} {exact}");
    }

    #[test]
    fn closed_form_is_symmetric_with_minimum_at_clifford() {
        for a in [0.1, 0.3, 0.5] {
            let b = (1.0f64 - a * a).sqrt();
            let (x, y) = (flat_torus_energy_closed_form(a).unwrap(), flat_torus_energy_closed_form(b).unwrap());
            assert!((x - y).abs() < 1e-10 * x);
        }
        let best = (1..1000)
            .map(|k| k as f64 / 1000.0)
            .min_by(|x, y| flat_torus_energy_closed_form(*x).unwrap().total_cmp(&flat_torus_energy_closed_form(*y).unwrap()))
            .unwrap();
        assert!((best - FRAC_1_SQRT_2).abs() < 1e-3);
        assert!(flat_torus_energy_closed_form(1.0).is_err());
    }

    #[test]
    fn chart_energy_is_spectrally_accurate() {
        let r = chart_energy(&FlatTorusChart::new(0.6).unwrap(), 32).unwrap();
        assert!((r.willmore - PI * PI / 0.48).abs() < 1e-10);
        let r = chart_energy(&RevolutionTorusChart::new(2f64.sqrt(), 1.0).unwrap(), 96).unwrap();
        assert!((r.willmore - 2.0 * PI * PI).abs() < 1e-8, "{}", r.willmore);
    }

    #[test]
    fn energy_is_conformally_invariant() {
        let m = make_flat_torus(0.6, 96).unwrap();
        let v = ConformalParameter::new(Vec4::new(0.2, -0.1, 0.15, 0.0)).unwrap();
        let res = conformal_invariance_residual(&m, &v).unwrap();
        assert!(res < 1e-2 * PI * PI / 0.48, "{res}");
        assert_eq!(conformal_invariance_residual(&m, &ConformalParameter::zero()).unwrap(), 0.0);
    }

    #[test]
    fn parametric_descent_finds_clifford() {
        let cfg = OptimizerConfig::new(1e-3, 200, 1e-7, OptimizerMode::Parametric).unwrap();
        let r = optimize_parametric(&FlatFamily, &[0.3], &cfg, 16).unwrap();
        assert!((r.params[0] - FRAC_1_SQRT_2).abs() < 1e-3, "{:?}", r.params);
        let w: Vec<f64> = r.trajectory.iter().map(|t| t.report.willmore).collect();
        assert!(w.windows(2).all(|p| p[1] < p[0]));
    }

    #[test]
    fn parametric_descent_finds_minimal_revolution_torus() {
        let cfg = OptimizerConfig::new(1e-2, 300, 1e-7, OptimizerMode::Parametric).unwrap();
        let r = optimize_parametric(&RevolutionFamily { minor: 1.0 }, &[3.0], &cfg, 16).unwrap();
        assert!((r.params[0] - 2f64.sqrt()).abs() < 5e-3, "{:?}", r.params);
    }

    #[test]
    fn mesh_descent_lowers_perturbed_clifford() {
        let start = perturbed_clifford(24, 0.01, 7).unwrap();
        let w0 = willmore_energy(&start).unwrap().willmore;
        let cfg = OptimizerConfig::new(1e-3, 20, 1e-9, OptimizerMode::Mesh).unwrap();
        let r = optimize_mesh(&start, &cfg).unwrap();
        let w1 = r.trajectory.last().unwrap().report.willmore;
        assert!(w1 < w0, "{w0} -> {w1}");
        // compare with the same estimator on the unperturbed mesh
        let clean = willmore_energy(&fit_curvatures(&make_flat_torus(FRAC_1_SQRT_2, 24).unwrap()).unwrap()).unwrap();
        assert!((w1 - clean.willmore).abs() < 5e-3 * clean.willmore, "{w0} -> {w1} vs {}", clean.willmore);
    }

    #[test]
    fn trajectory_csv_has_header_and_rows() {
        let row = TrajectoryRow {
            iter: 0,
            report: EnergyReport { area: 1.0, willmore: 2.0, traceless_sq_integral: 0.0, max_h: 0.5 },
            grad_norm: 1.0 / 3.0,
            params: vec![],
        };
        let csv = trajectory_csv(&[row]);
        assert!(csv.starts_with("iter,area,willmore"));
        assert!(csv.contains("0.333333333333"));
        assert!(!csv.contains("0.3333333333333"));
    }
}
