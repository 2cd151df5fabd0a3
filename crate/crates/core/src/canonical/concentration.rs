//! Largest image area of `Σ_(v,t)` inside a small geodesic ball.

use rayon::prelude::*;
use serde::Serialize;

use super::jacobian_psi;
use crate::conformal::{transform_mesh, ConformalParameter};
use crate::error::{invalid, Result};
use crate::s3::{chord_radius, uniform_sample_s3, Vec4};
use crate::surface::{require_curvature, SurfaceMesh};

#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationReport {
    pub radii: Vec<f64>,
    /// Largest mass over the grid and the centers, one per radius.
    pub values: Vec<f64>,
    /// `(v, t, center)` attaining each value.
    pub argmax: Vec<([f64; 4], f64, [f64; 4])>,
    pub centers: usize,
}

impl ConcentrationReport {
    /// Values strictly decrease as the radius decreases.
    pub fn decreasing_in_r(&self) -> bool {
        let mut idx: Vec<usize> = (0..self.radii.len()).collect();
        idx.sort_by(|&a, &b| self.radii[b].total_cmp(&self.radii[a]));
        idx.windows(2).all(|w| self.values[w[1]] < self.values[w[0]])
    }
}

/// `max_{(v,t), q} ∫_{P⁻¹(B_r(q))} max(Jac, 0) dΣ_v` for each radius `r`.
///
/// The weight is the positive part of the Jacobian, the same density that
/// bounds `area(Σ_(v,t))`. Centers are every `⌈n/image_centers⌉`-th image
/// point of each `(v,t)` plus `random_centers` uniform points.
pub fn mass_concentration(
    mesh: &SurfaceMesh,
    v_grid: &[Vec4],
    t_grid: &[f64],
    radii: &[f64],
    image_centers: usize,
    random_centers: usize,
    seed: u64,
) -> Result<ConcentrationReport> {
    require_curvature(mesh)?;
    if v_grid.is_empty() || t_grid.is_empty() || radii.is_empty() {
        return Err(invalid("mass concentration needs non-empty grids and radii"));
    }
    let chords: Vec<f64> = radii
        .iter()
        .map(|&r| if r > 0.0 { chord_radius(r) } else { Err(invalid("radius must be positive")) })
        .collect::<Result<_>>()?;
    let random: Vec<Vec4> = if random_centers > 0 {
        uniform_sample_s3(random_centers, seed)?.iter().map(|p| *p.coords()).collect()
    } else {
        vec![]
    };
    let params: Vec<ConformalParameter> = v_grid.iter().map(|v| ConformalParameter::new(*v)).collect::<Result<_>>()?;
    let stride = mesh.len().div_ceil(image_centers.max(1));
    type Best = Vec<(f64, [f64; 4], f64, [f64; 4])>;
    let per_v: Vec<Best> = params
        .par_iter()
        .map(|v| -> Result<Best> {
            let mv = transform_mesh(v, mesh)?;
            let mut best: Best = vec![(f64::NEG_INFINITY, [0.0; 4], 0.0, [0.0; 4]); chords.len()];
            for &t in t_grid {
                let (c, s) = (t.cos(), t.sin());
                let pts: Vec<Vec4> =
                    (0..mv.len()).map(|i| mv.vertices[i].coords() * c + mv.normals[i] * s).collect();
                let w: Vec<f64> = (0..mv.len())
                    .map(|i| jacobian_psi(mv.k1[i], mv.k2[i], t).max(0.0) * mv.vertex_area[i])
                    .collect();
                let centers = pts.iter().step_by(stride).chain(random.iter());
                for q in centers {
                    let mut mass = vec![0.0; chords.len()];
                    for (y, wi) in pts.iter().zip(&w) {
                        let d = (y - q).norm();
                        for (m, ch) in mass.iter_mut().zip(&chords) {
                            if d <= *ch {
                                *m += wi;
                            }
                        }
                    }
                    for (j, m) in mass.into_iter().enumerate() {
                        if m > best[j].0 {
                            best[j] = (m, (*v.vector()).into(), t, (*q).into());
                        }
                    }
                }
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    let mut values = vec![f64::NEG_INFINITY; chords.len()];
    let mut argmax = vec![([0.0; 4], 0.0, [0.0; 4]); chords.len()];
    for b in per_v {
        for (j, (m, v, t, q)) in b.into_iter().enumerate() {
            if m > values[j] {
                values[j] = m;
                argmax[j] = (v, t, q);
            }
        }
    }
    Ok(ConcentrationReport {
        radii: radii.to_vec(),
        values,
        argmax,
        centers: mesh.len().div_ceil(stride) + random.len(),
    })
}
