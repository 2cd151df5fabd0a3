//! Exact images of caps, half-spaces and hemispheres under `F_v`, and the
//! asymptotic ball sandwich for `v` approaching a point of S³.
//!
//! Everything here is closed form; these functions are the analytic test bed
//! for the mesh pipeline.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::conformal::ConformalParameter;
use crate::error::{invalid, Error, Result};
use crate::s3::{chunk_rng, geodesic_distance, random_point, GeodesicBall, SpherePoint, Vec4};

/// Euclidean ball `{x ∈ R⁴ : |x − center| < radius}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EuclideanBall4 {
    pub center: [f64; 4],
    pub radius: f64,
}

impl EuclideanBall4 {
    pub fn new(center: Vec4, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) {
            return Err(invalid(format!("ball radius {radius} must be non-negative")));
        }
        Ok(EuclideanBall4 { center: center.into(), radius })
    }

    pub fn center(&self) -> Vec4 {
        Vec4::from(self.center)
    }

    pub fn contains(&self, x: &Vec4) -> bool {
        (x - self.center()).norm() < self.radius
    }
}

/// The cap `E ∩ S³` with `E = {x : ⟨x−h, h⟩ ≥ 0}`, `0 < |h| ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapSpec {
    h: Vec4,
}

impl CapSpec {
    pub fn new(h: Vec4) -> Result<Self> {
        let n = h.norm();
        if !(n > 1e-12 && n <= 1.0 + 1e-15) {
            return Err(invalid(format!("cap datum |h| = {n} outside (0, 1]")));
        }
        Ok(CapSpec { h })
    }

    /// The cap of geodesic radius `r ∈ (0, π/2]` centered at `c`, i.e. `h = cos r · c`.
    pub fn from_ball(c: &SpherePoint, r: f64) -> Result<Self> {
        if !(r > 0.0 && r < FRAC_PI_2) {
            return Err(invalid(format!("cap radius {r} outside (0, pi/2)")));
        }
        CapSpec::new(c.coords() * r.cos())
    }

    pub fn h(&self) -> &Vec4 {
        &self.h
    }

    /// Half-space membership `⟨x − h, h⟩ ≥ 0`.
    pub fn contains(&self, x: &Vec4) -> bool {
        (x - self.h).dot(&self.h) >= 0.0
    }

    /// The cap as a geodesic ball: center `h/|h|`, radius `arccos |h|`.
    pub fn geodesic(&self) -> GeodesicBall {
        let n = self.h.norm();
        GeodesicBall { center: SpherePoint::normalize(self.h), radius: n.min(1.0).acos() }
    }

    /// Euclidean ball cutting out the same cap: `B⁴_{√(2(1−|h|))}(h/|h|)`.
    pub fn euclidean(&self) -> EuclideanBall4 {
        let n = self.h.norm();
        EuclideanBall4 { center: (self.h / n).into(), radius: (2.0 * (1.0 - n).max(0.0)).sqrt() }
    }
}

/// Image of the half-space `E = {⟨x−h, h⟩ ≥ 0}` under `i(x) = x/|x|²`: the
/// closed ball with center `h/(2|h|²)` and radius `1/(2|h|)`.
pub fn inversion_halfspace(h: &Vec4) -> Result<EuclideanBall4> {
    let n = h.norm();
    if !(n > 1e-12) {
        return Err(invalid("half-space datum h must be non-zero"));
    }
    EuclideanBall4::new(h / (2.0 * n * n), 1.0 / (2.0 * n))
}

/// A geodesic ball predicted as the image of a set, with a note when the
/// closed form had to be approached by continuity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageBall {
    pub ball: GeodesicBall,
    pub chord: f64,
    pub degenerate: bool,
}

fn ball_from_chord(center: Vec4, chord: f64) -> Result<GeodesicBall> {
    let c = center.norm();
    if !(c > 1e-12) {
        return Err(Error::DegenerateImage(c));
    }
    let chord = chord.clamp(0.0, 2.0);
    Ok(GeodesicBall { center: SpherePoint::normalize(center), radius: 2.0 * (0.5 * chord).asin() })
}

fn cap_image_raw(v: &Vec4, h: &Vec4) -> Result<(Vec4, f64)> {
    let (v2, h2, hv) = (v.norm_squared(), h.norm_squared(), h.dot(v));
    let q = h * (1.0 - v2) - v * (2.0 * (h2 - hv));
    let qn = q.norm();
    if !(qn > 1e-12) {
        return Err(Error::DegenerateImage(qn));
    }
    let r2 = 2.0 * (1.0 - (h2 * (1.0 + v2) - 2.0 * hv) / qn);
    Ok((q, r2.max(0.0).sqrt()))
}

/// `F_v(E ∩ S³)` as a geodesic ball, with
/// `Q = (1−|v|²)h − 2(|h|²−⟨h,v⟩)v` and
/// `R = √(2(1 − (|h|²(1+|v|²) − 2⟨h,v⟩)/|Q|))`.
///
/// When `v` lies on the boundary hyperplane (`|h|² = ⟨h,v⟩`) the result is the
/// average of the images for `v ± 1e−8·h/|h|`.
pub fn image_of_cap(v: &ConformalParameter, cap: &CapSpec) -> Result<ImageBall> {
    let (vv, h) = (v.vector(), cap.h());
    let side = h.norm_squared() - h.dot(vv);
    if side.abs() <= 1e-14 {
        let e = h / h.norm() * 1e-8;
        let (q1, r1) = cap_image_raw(&(vv + e), h)?;
        let (q2, r2) = cap_image_raw(&(vv - e), h)?;
        let chord = 0.5 * (r1 + r2);
        let q = q1 / q1.norm() + q2 / q2.norm();
        return Ok(ImageBall { ball: ball_from_chord(q, chord)?, chord, degenerate: true });
    }
    let (q, chord) = cap_image_raw(vv, h)?;
    Ok(ImageBall { ball: ball_from_chord(q, chord)?, chord, degenerate: false })
}

/// `F_v` of the open hemisphere centered at `x`, with
/// `Q = (1−|v|²)x + 2⟨x,v⟩v` and `R = √(2(1 + 2⟨x,v⟩/|Q|))`.
pub fn image_of_geodesic_ball(v: &ConformalParameter, x: &SpherePoint) -> Result<ImageBall> {
    let (vv, xc) = (v.vector(), x.coords());
    let xv = xc.dot(vv);
    let q = xc * (1.0 - vv.norm_squared()) + vv * (2.0 * xv);
    let qn = q.norm();
    if !(qn > 1e-12) {
        return Err(Error::DegenerateImage(qn));
    }
    let chord = (2.0 * (1.0 + 2.0 * xv / qn)).max(0.0).sqrt();
    Ok(ImageBall { ball: ball_from_chord(q, chord)?, chord, degenerate: false })
}

/// Intersection of a Euclidean ball with S³.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CapResult {
    Empty,
    Cap(GeodesicBall),
}

/// `B⁴_R̃(Q̃) ∩ S³ = B⁴_R(Q̃/|Q̃|) ∩ S³` with `R = √(2 + (R̃² − |Q̃|² − 1)/|Q̃|)`.
pub fn euclidean_to_geodesic_cap(ball: &EuclideanBall4) -> Result<CapResult> {
    let q = ball.center();
    let qn = q.norm();
    if !(qn > 1e-12) {
        return Err(Error::AmbiguousCenter);
    }
    let rt = ball.radius;
    if (1.0 - qn).powi(2) > rt * rt {
        return Ok(CapResult::Empty);
    }
    let r2 = 2.0 + (rt * rt - qn * qn - 1.0) / qn;
    Ok(CapResult::Cap(ball_from_chord(q, r2.max(0.0).sqrt())?))
}

/// Complement of a geodesic ball: the closed ball of radius `π − α` at the antipode.
pub fn complement(ball: &GeodesicBall) -> GeodesicBall {
    GeodesicBall { center: ball.center.antipode(), radius: PI - ball.radius }
}

/// `F_v` evaluated as `D_{1−|v|²} ∘ T_{−v/(1−|v|²)} ∘ i ∘ T_{−v}`.
pub fn apply_composed(v: &ConformalParameter, x: &Vec4) -> Vec4 {
    let vv = v.vector();
    let a = 1.0 - vv.norm_squared();
    let y = x - vv;
    let y = y / y.norm_squared();
    let y = y - vv / a;
    y * a
}

/// `F_v(E ∩ S³)` by pushing the half-space through the four elementary maps
/// and intersecting the resulting ball (or ball complement) with S³.
pub fn image_of_cap_composed(v: &ConformalParameter, cap: &CapSpec) -> Result<GeodesicBall> {
    let (vv, h) = (v.vector(), cap.h());
    let a = 1.0 - vv.norm_squared();
    let side = h.norm_squared() - h.dot(vv);
    if side.abs() <= 1e-14 {
        return Err(Error::DegenerateImage(side));
    }
    // T_{−v}(E) is the half-space with datum h_v; its inversion is a ball
    let hv = h * (side / h.norm_squared());
    let inv = inversion_halfspace(&hv)?;
    let center = inv.center() * a - vv;
    let image = EuclideanBall4::new(center, inv.radius * a)?;
    match euclidean_to_geodesic_cap(&image)? {
        CapResult::Cap(b) if side > 0.0 => Ok(b),
        CapResult::Cap(b) => Ok(complement(&b)),
        CapResult::Empty => Err(Error::DegenerateImage(side)),
    }
}

/// Uniform-ish points on the boundary sphere of a geodesic ball.
pub fn boundary_samples(ball: &GeodesicBall, n: usize, seed: u64) -> Vec<SpherePoint> {
    let c = *ball.center.coords();
    let mut rng = chunk_rng(seed, 0);
    (0..n)
        .map(|_| loop {
            let g = random_point(&mut rng);
            let t = g.coords() - c * c.dot(g.coords());
            if t.norm() > 1e-6 {
                let t = t / t.norm();
                break SpherePoint::normalize(c * ball.radius.cos() + t * ball.radius.sin());
            }
        })
        .collect()
}

/// Largest `|d(F_v(y), center) − radius|` over boundary samples of the source ball.
pub fn boundary_residual(
    v: &ConformalParameter,
    source: &GeodesicBall,
    image: &GeodesicBall,
    n: usize,
    seed: u64,
) -> f64 {
    boundary_samples(source, n, seed)
        .par_iter()
        .map(|y| (geodesic_distance(&v.apply(y), &image.center) - image.radius).abs())
        .reduce(|| 0.0, f64::max)
}

/// Diagnostics of the asymptotic ball sandwich along one approach direction.
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticReport {
    pub theta: f64,
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    pub deviation: Vec<f64>,
    /// `dev(s) ≈ C·s^exponent` by least squares in log–log; `None` when exact.
    pub exponent: Option<f64>,
    pub constant: Option<f64>,
    /// Largest `dev/√|(s,t)|` over the annulus region samples at each `s`.
    pub annulus_c1: Vec<f64>,
    pub exact: bool,
}

impl AsymptoticReport {
    /// Exponent consistent with the square-root rate, or an exact image.
    pub fn rate_ok(&self, lo: f64, hi: f64) -> bool {
        self.exact || self.exponent.is_some_and(|e| (lo..=hi).contains(&e))
    }
}

/// Predicted ball `(Q̄, R̄)` for `k = t/s`:
/// `Q̄ = −k/√(1+k²) p − 1/√(1+k²) N`, `R̄ = √(2(1 − k/√(1+k²)))`.
pub fn predicted_ball(p: &Vec4, n: &Vec4, k: f64) -> (Vec4, f64) {
    let w = (1.0 + k * k).sqrt();
    let q = -(p * (k / w)) - n / w;
    (q, (2.0 * (1.0 - k / w)).max(0.0).sqrt())
}

/// Sample the great sphere `{⟨y, N⟩ = 0}` on geodesic circles around `p` at
/// geometrically spaced radii, where the image is most distorted, plus uniformly.
fn hemisphere_boundary(p: &Vec4, n: &Vec4, count: usize, seed: u64) -> Vec<Vec4> {
    let mut rng = chunk_rng(seed, 1);
    let e = crate::s3::orthogonal_complement(&[*p, *n]);
    let f = crate::s3::orthogonal_complement(&[*p, *n, e]);
    let mut out = Vec::with_capacity(2 * count);
    let dirs = 64;
    let scales = count / dirs;
    for i in 0..scales.max(1) {
        let rho = 1e-4 * (PI / 1e-4).powf(i as f64 / (scales.max(2) - 1) as f64);
        for d in 0..dirs {
            let a = 2.0 * PI * (d as f64 + rng.random::<f64>()) / dirs as f64;
            let dir = e * a.cos() + f * a.sin();
            out.push(p * rho.cos() + dir * rho.sin());
        }
    }
    for _ in 0..count {
        let g = random_point(&mut rng);
        let y = g.coords() - n * n.dot(g.coords());
        if y.norm() > 1e-6 {
            out.push(y / y.norm());
        }
    }
    out
}

/// Points of `Δ(p,N,r) = S³ \ (B_r(cos r p + sin r N) ∪ B_r(cos r p − sin r N))`.
fn annulus_samples(p: &Vec4, n: &Vec4, r: f64, count: usize, seed: u64) -> Vec<Vec4> {
    let mut rng = chunk_rng(seed, 2);
    let b1 = SpherePoint::normalize(p * r.cos() + n * r.sin());
    let b2 = SpherePoint::normalize(p * r.cos() - n * r.sin());
    let mut out = Vec::with_capacity(count);
    // half near p, half uniform
    while out.len() < count / 2 {
        let g = random_point(&mut rng);
        let rho = 2.0 * r * rng.random::<f64>().powi(2);
        let t = g.coords() - p * p.dot(g.coords());
        if t.norm() < 1e-9 {
            continue;
        }
        let y = SpherePoint::normalize(p * rho.cos() + t / t.norm() * rho.sin());
        if geodesic_distance(&y, &b1) >= r && geodesic_distance(&y, &b2) >= r {
            out.push(*y.coords());
        }
    }
    while out.len() < count {
        let y = random_point(&mut rng);
        if geodesic_distance(&y, &b1) >= r && geodesic_distance(&y, &b2) >= r {
            out.push(*y.coords());
        }
    }
    out
}

/// Measure how fast `F_v(hemisphere at −N)` approaches the predicted ball
/// `B⁴_R̄(Q̄)` as `v = (1−s)(cos t p + sin t N)` tends to `p` along
/// `t = s·tan θ`. Deviations are Euclidean: `max | |F_v(y) − Q̄| − R̄ |`.
pub fn asymptotic_image_bounds(
    p: &SpherePoint,
    n: &Vec4,
    theta: f64,
    r_exclusion: f64,
    s_list: &[f64],
    samples: usize,
    seed: u64,
) -> Result<AsymptoticReport> {
    let pc = *p.coords();
    if pc.dot(n).abs() > 1e-10 || (n.norm() - 1.0).abs() > 1e-10 {
        return Err(invalid("N must be a unit vector orthogonal to p"));
    }
    if !(theta.abs() < FRAC_PI_2) {
        return Err(invalid("approach angle must satisfy |theta| < pi/2"));
    }
    if !(r_exclusion > 0.0 && r_exclusion < PI / 4.0) {
        return Err(invalid("exclusion radius must lie in (0, pi/4)"));
    }
    if s_list.len() < 2 || s_list.iter().any(|&s| !(s > 0.0 && s < 1.0)) || s_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("s_list must be decreasing values in (0, 1) with at least two entries"));
    }
    let k = theta.tan();
    let (qbar, rbar) = predicted_ball(&pc, n, k);
    let bdry = hemisphere_boundary(&pc, n, samples, seed);
    let ann = annulus_samples(&pc, n, r_exclusion, samples, seed);
    let dev_over = |v: &ConformalParameter, pts: &[Vec4]| {
        pts.par_iter()
            .map(|y| ((v.apply_raw(y) - qbar).norm() - rbar).abs())
            .reduce(|| 0.0, f64::max)
    };
    let mut ts = Vec::new();
    let mut devs = Vec::new();
    let mut c1 = Vec::new();
    for &s in s_list {
        let t = s * k;
        let v = ConformalParameter::new((pc * t.cos() + n * t.sin()) * (1.0 - s))?;
        ts.push(t);
        devs.push(dev_over(&v, &bdry));
        c1.push(dev_over(&v, &ann) / s.hypot(t).sqrt());
    }
    let exact = devs.iter().all(|&d| d <= 1e-10);
    let (exponent, constant) = if exact {
        (None, None)
    } else {
        let (e, c) = log_log_fit(s_list, &devs);
        (Some(e), Some(c))
    };
    Ok(AsymptoticReport { theta, s: s_list.to_vec(), t: ts, deviation: devs, exponent, constant, annulus_c1: c1, exact })
}

/// Least-squares fit of `y ≈ C x^e` in log–log coordinates; returns `(e, C)`.
pub fn log_log_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.max(1e-300).ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let e = sxy / sxx;
    (e, (my - e * mx).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::s3::random_point;
    use rand::SeedableRng;

    fn e(i: usize) -> Vec4 {
        *SpherePoint::basis(i).coords()
    }

    #[test]
    fn inversion_of_halfspaces() {
        let b = inversion_halfspace(&e(0)).unwrap();
        assert!((b.center() - e(0) * 0.5).norm() < 1e-15 && (b.radius - 0.5).abs() < 1e-15);
        let h = e(0) * 2.0;
        let b = inversion_halfspace(&h).unwrap();
        // c = h/(2|h|²) = e₁/4, confirmed by the point mapping below
        assert!((b.center() - e(0) / 4.0).norm() < 1e-15 && (b.radius - 0.25).abs() < 1e-15);
        // boundary points of E go to the boundary sphere of the ball
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let g = Vec4::from_fn(|_, _| rng.random_range(-3.0..3.0));
            let x = h + (g - h * (g.dot(&h) / h.norm_squared()));
            let ix = x / x.norm_squared();
            assert!(((ix - b.center()).norm() - b.radius).abs() < 1e-12);
        }
        assert!(inversion_halfspace(&Vec4::zeros()).is_err());
    }

    #[test]
    fn zero_parameter_fixes_caps() {
        let cap = CapSpec::new(Vec4::new(0.3, 0.1, -0.2, 0.4)).unwrap();
        let img = image_of_cap(&ConformalParameter::zero(), &cap).unwrap();
        let g = cap.geodesic();
        assert!((img.ball.center.coords() - g.center.coords()).norm() < 1e-14);
        assert!((img.chord - (2.0 * (1.0 - cap.h().norm())).sqrt()).abs() < 1e-14);
        assert!((img.ball.radius - g.radius).abs() < 1e-12);
    }

    #[test]
    fn cap_images_match_point_mapping() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for trial in 0..100 {
            let v = ConformalParameter::new(random_point(&mut rng).coords() * rng.random_range(0.0..0.9)).unwrap();
            let c = random_point(&mut rng);
            let cap = CapSpec::from_ball(&c, rng.random_range(0.05..1.5)).unwrap();
            let img = image_of_cap(&v, &cap).unwrap();
            let res = boundary_residual(&v, &cap.geodesic(), &img.ball, 200, trial);
            assert!(res < 1e-9, "trial {trial}: {res}");
            // composition path agrees
            let comp = image_of_cap_composed(&v, &cap).unwrap();
            assert!((comp.center.coords() - img.ball.center.coords()).norm() < 1e-10);
            assert!((comp.radius - img.ball.radius).abs() < 1e-10);
        }
    }

    #[test]
    fn outside_parameter_flips_the_image() {
        // v outside E: |h|² − ⟨h,v⟩ < 0
        let cap = CapSpec::from_ball(&SpherePoint::basis(0), 0.5).unwrap();
        let v = ConformalParameter::new(e(0) * 0.95).unwrap();
        assert!(cap.h().norm_squared() - cap.h().dot(v.vector()) < 0.0);
        let img = image_of_cap(&v, &cap).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let x = random_point(&mut rng);
            let inside = cap.contains(x.coords());
            let y = v.apply(&x);
            let d = geodesic_distance(&y, &img.ball.center) - img.ball.radius;
            if d.abs() > 1e-9 {
                assert_eq!(inside, d < 0.0);
            }
        }
    }

    #[test]
    fn hemisphere_images() {
        let x = SpherePoint::basis(1);
        let id = image_of_geodesic_ball(&ConformalParameter::zero(), &x).unwrap();
        assert!((id.chord - 2f64.sqrt()).abs() < 1e-15);
        let v = ConformalParameter::new(e(0) * 0.4).unwrap();
        let img = image_of_geodesic_ball(&v, &x).unwrap();
        assert!((img.ball.center.coords() - x.coords()).norm() < 1e-15 && (img.chord - 2f64.sqrt()).abs() < 1e-15);
        let v = ConformalParameter::new(x.coords() * 0.5).unwrap();
        let img = image_of_geodesic_ball(&v, &x).unwrap();
        assert!((img.chord - (18.0f64 / 5.0).sqrt()).abs() < 1e-12);
        let src = GeodesicBall { center: x, radius: FRAC_PI_2 };
        assert!(boundary_residual(&v, &src, &img.ball, 500, 1) < 1e-12);
    }

    #[test]
    fn euclidean_cap_conversion() {
        let b = EuclideanBall4::new(e(0), 2f64.sqrt()).unwrap();
        let CapResult::Cap(c) = euclidean_to_geodesic_cap(&b).unwrap() else { panic!() };
        assert!((c.radius - FRAC_PI_2).abs() < 1e-15);
        let b = EuclideanBall4::new(e(0) * 0.5, 1.0).unwrap();
        let CapResult::Cap(c) = euclidean_to_geodesic_cap(&b).unwrap() else { panic!() };
        assert!((c.radius - 1.318116071652818).abs() < 1e-12, "{}", c.radius);
        let bd = boundary_samples(&c, 200, 3);
        assert!(bd.iter().all(|x| ((x.coords() - b.center()).norm() - 1.0).abs() < 1e-10));
        assert_eq!(euclidean_to_geodesic_cap(&EuclideanBall4::new(e(0) * 0.2, 0.1).unwrap()).unwrap(), CapResult::Empty);
        assert!(matches!(euclidean_to_geodesic_cap(&EuclideanBall4::new(Vec4::zeros(), 1.0).unwrap()), Err(Error::AmbiguousCenter)));
    }

    #[test]
    fn complement_identity() {
        let ball = GeodesicBall { center: SpherePoint::basis(2), radius: 0.8 };
        let comp = complement(&ball);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let x = random_point(&mut rng);
            let d = geodesic_distance(&x, &ball.center);
            if (d - ball.radius).abs() > 1e-12 {
                assert_ne!(ball.contains(&x), geodesic_distance(&x, &comp.center) <= comp.radius);
            }
        }
        assert!((comp.chord() - (2.0 * (1.0 + 0.8f64.cos())).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn composed_map_equals_direct_map() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        for _ in 0..200 {
            let v = ConformalParameter::new(random_point(&mut rng).coords() * 0.7).unwrap();
            let x = random_point(&mut rng);
            assert!((apply_composed(&v, x.coords()) - v.apply_raw(x.coords())).norm() < 1e-12);
        }
    }

    #[test]
    fn degenerate_plane_through_v_is_averaged() {
        let h = e(0) * 0.5;
        let cap = CapSpec::new(h).unwrap();
        // ⟨h, v⟩ = |h|²
        let v = ConformalParameter::new(e(0) * 0.5 + e(1) * 0.3).unwrap();
        let img = image_of_cap(&v, &cap).unwrap();
        assert!(img.degenerate);
        assert!(boundary_residual(&v, &cap.geodesic(), &img.ball, 200, 8) < 1e-7);
    }

    #[test]
    fn predicted_ball_at_unit_slope() {
        let (q, r) = predicted_ball(&e(0), &e(2), 1.0);
        assert!((q + (e(0) + e(2)) / 2f64.sqrt()).norm() < 1e-15);
        assert!((r - (2.0 * (1.0 - FRAC_1_SQRT_2)).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn tangential_approach_is_exact_and_oblique_has_sqrt_rate() {
        let s = [0.1, 0.05, 0.025, 0.0125];
        let p = SpherePoint::basis(0);
        let r0 = asymptotic_image_bounds(&p, &e(2), 0.0, 0.3, &s, 2000, 1).unwrap();
        assert!(r0.exact && r0.rate_ok(0.45, 1.1));
        let r1 = asymptotic_image_bounds(&p, &e(2), PI / 4.0, 0.3, &s, 2000, 1).unwrap();
        assert!(r1.rate_ok(0.45, 1.1), "{:?}", r1);
    }

    #[test]
    fn log_log_fit_recovers_power_law() {
        let x = [1.0, 2.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(0.5)).collect();
        let (e, c) = log_log_fit(&x, &y);
        assert!((e - 0.5).abs() < 1e-12 && (c - 3.0).abs() < 1e-12);
    }

    use std::f64::consts::FRAC_1_SQRT_2;
}
