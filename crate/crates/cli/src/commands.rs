use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use willmore_lab::canonical::region::{blowup_residual, BlowupApproach, BlowupCase, RegionOracle};
use willmore_lab::canonical::{cube_v_grid, degree_gauss_map, mass_concentration, t_grid, verify_ros_inequality};
use willmore_lab::conformal::ConformalParameter;
use willmore_lab::cubical::{
    audit_all, audit_boundary_squared, audit_cell_counts, audit_composition, audit_fineness, audit_retraction,
    AuditResult, Retraction,
};
use willmore_lab::report::Check;
use willmore_lab::s3::{geodesic_distance, random_point, uniform_sample_s3, GeodesicBall};
use willmore_lab::sphere_images::{
    apply_composed, asymptotic_image_bounds, boundary_residual, boundary_samples, euclidean_to_geodesic_cap,
    image_of_cap, image_of_cap_composed, image_of_geodesic_ball, CapResult, CapSpec,
};
use willmore_lab::surface::io::{read_mesh, write_mesh};
use willmore_lab::surface::{estimate_curvatures, gauss_bonnet_defect, GeneratorRegistry, Params};
use willmore_lab::willmore::{
    optimize_mesh, optimize_parametric, perturbed_clifford, trajectory_csv, willmore_energy, FamilyRegistry,
    OptimizerConfig, OptimizerMode,
};
use willmore_lab::{Error, SpherePoint, SurfaceMesh, Vec4};

use crate::output::Record;
use crate::{Audit, Command, Common, Mode, SurfaceArgs};

const TWO_PI2: f64 = 2.0 * PI * PI;

pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidInput(_) => "invalid-input",
        Error::Pole => "pole",
        Error::SelfIntersecting { .. } => "self-intersecting",
        Error::UnderDeterminedFit { .. } => "under-determined-fit",
        Error::OutOfTube { .. } => "out-of-tube",
        Error::DegenerateImage(_) => "degenerate-image",
        Error::AmbiguousCenter => "ambiguous-center",
        Error::InconsistentCurvature(_) => "inconsistent-curvature",
        Error::OptimizerStall { .. } => "optimizer-stall",
        Error::Format { .. } => "format",
        Error::Io(_) => "io",
    }
}

pub fn run(cmd: &Command) -> Result<Record> {
    match cmd {
        Command::Gen(a) => gen(&a.surface, &a.common, Record::new("gen", a)),
        Command::Energy(a) => energy(&a.surface, &a.common, Record::new("energy", a)),
        Command::Sweep(a) => {
            let rec = Record::new("sweep", a);
            sweep(&a.surface, a.vgrid, a.vhalf, a.tgrid, &a.radii, &a.common, rec)
        }
        Command::Degree(a) => degree(&a.surface, a.samples, a.eps, &a.common, Record::new("degree", a)),
        Command::SphereCheck(a) => sphere_check(a.samples, &a.theta, &a.s, &a.common, Record::new("sphere-check", a)),
        Command::Blowup(a) => blowup(a, Record::new("blowup", a)),
        Command::Optimize(a) => optimize(a, Record::new("optimize", a)),
        Command::Cubical(a) => cubical(a.audit, &a.common, Record::new("cubical", a)),
    }
}

fn seed(c: &Common) -> Result<u64> {
    c.seed.context("--seed is required for sampling commands")
}

pub fn load_surface(s: &SurfaceArgs) -> Result<SurfaceMesh> {
    if let Some(p) = &s.input {
        let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
        let m = read_mesh(BufReader::new(f))?;
        return Ok(estimate_curvatures(&m)?);
    }
    let Some(name) = s.surface.as_deref() else {
        bail!("give a mesh with --in FILE or a generator with --surface NAME");
    };
    let mut params = Params::new();
    for (k, v) in [("a", s.a), ("r", s.r), ("R", s.big_r)] {
        if let Some(v) = v {
            params.insert(k.to_string(), v);
        }
    }
    Ok(GeneratorRegistry::default().build(name, &params, s.res)?)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn gen(s: &SurfaceArgs, c: &Common, mut rec: Record) -> Result<Record> {
    let Some(out) = &c.out else {
        bail!("gen needs --out PATH");
    };
    let m = load_surface(s)?;
    let f = File::create(out).with_context(|| format!("creating {}", out.display()))?;
    let mut w = BufWriter::new(f);
    write_mesh(&m, &mut w)?;
    w.flush()?;
    rec.results = json!({
        "vertices": m.len(),
        "faces": m.faces.len(),
        "genus": m.genus,
        "euler_characteristic": m.euler_characteristic(),
        "path": out,
    });
    rec.checks.push(Check::flag("closed oriented mesh", "mesh-validity", m.validate().is_ok()));
    Ok(rec)
}

fn energy(s: &SurfaceArgs, c: &Common, mut rec: Record) -> Result<Record> {
    let m = load_surface(s)?;
    let e = willmore_energy(&m)?;
    let tol = c.tol.unwrap_or(1e-2);
    rec.results = json!({
        "area": e.area,
        "willmore": e.willmore,
        "traceless_sq_integral": e.traceless_sq_integral,
        "max_h": e.max_h,
        "genus": m.genus,
        "gauss_bonnet_defect": gauss_bonnet_defect(&m)?,
        "vertices": m.len(),
    });
    rec.checks.push(Check::at_least("W >= 4 pi", "willmore-lower-bound", e.willmore, 4.0 * PI, tol * 4.0 * PI));
    if m.genus >= 1 {
        rec.checks.push(Check::at_least("W >= 2 pi^2", "willmore-torus-bound", e.willmore, TWO_PI2, tol * TWO_PI2));
    }
    if let Some(out) = &c.out {
        write_text(out, &rec.to_json())?;
    }
    Ok(rec)
}

fn sweep(
    s: &SurfaceArgs,
    vgrid: usize,
    vhalf: f64,
    tgrid: usize,
    radii: &[f64],
    c: &Common,
    mut rec: Record,
) -> Result<Record> {
    let m = load_surface(s)?;
    let v = cube_v_grid(vgrid, vhalf)?;
    let t = t_grid(tgrid);
    let w = willmore_energy(&m)?.willmore;
    let tol = c.tol.unwrap_or(1e-2) * w;
    let r = verify_ros_inequality(&m, &v, &t, tol)?;
    if let Some(out) = &c.out {
        write_text(out, &r.csv())?;
    }
    rec.results = json!({
        "willmore": r.willmore,
        "traceless_sq_integral": r.traceless_sq_integral,
        "min_slack": r.min_slack,
        "argmin_v": r.argmin.0,
        "argmin_t": r.argmin.1,
        "grid_points": r.rows.len(),
    });
    rec.checks.push(Check::at_least("min slack of the area bound", "area-bound-canonical-family", r.min_slack, 0.0, tol));
    if !radii.is_empty() {
        let conc = mass_concentration(&m, &v, &t, radii, 64, 64, seed(c)?)?;
        rec.results["concentration"] = json!({ "radii": conc.radii, "values": conc.values, "centers": conc.centers });
        rec.checks.push(Check::flag("concentration decreases with radius", "no-mass-concentration", conc.decreasing_in_r()));
    }
    Ok(rec)
}

fn degree(s: &SurfaceArgs, samples: usize, eps: f64, c: &Common, mut rec: Record) -> Result<Record> {
    let m = load_surface(s)?;
    let pts = uniform_sample_s3(samples, seed(c)?)?;
    let r = degree_gauss_map(&m, eps, &pts, 0.05)?;
    let tol = c.tol.unwrap_or(0.05);
    rec.results = serde_json::to_value(&r)?;
    rec.checks.push(Check::abs("degree equals genus", "degree-of-gauss-map", r.degree, r.genus as f64, tol));
    let tube_tol = 1e-2 * r.tube_closed_form.abs().max(TWO_PI2);
    rec.checks.push(Check::abs(
        "tube integral equals -pi^2 chi",
        "tube-integral-euler-characteristic",
        r.tube_integral,
        r.tube_closed_form,
        tube_tol,
    ));
    if let Some(out) = &c.out {
        write_text(out, &rec.to_json())?;
    }
    Ok(rec)
}

fn sphere_check(pairs: usize, thetas: &[f64], s: &[f64], c: &Common, mut rec: Record) -> Result<Record> {
    let seed = seed(c)?;
    let tol = c.tol.unwrap_or(1e-9);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut cap, mut hemi, mut trip, mut comp) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..pairs as u64 {
        let v = ConformalParameter::new(random_point(&mut rng).coords() * rng.random_range(0.0..0.9))?;
        let cs = CapSpec::new(random_point(&mut rng).coords() * rng.random_range(0.05..0.95))?;
        let img = image_of_cap(&v, &cs)?;
        let g = cs.geodesic();
        cap = cap.max(boundary_residual(&v, &g, &img.ball, 200, seed ^ i));
        let x = random_point(&mut rng);
        let h = image_of_geodesic_ball(&v, &x)?;
        let src = GeodesicBall { center: x, radius: PI / 2.0 };
        hemi = hemi.max(boundary_residual(&v, &src, &h.ball, 200, seed ^ ((i + 1) << 20)));
        match euclidean_to_geodesic_cap(&cs.euclidean())? {
            CapResult::Cap(b) => trip = trip.max((b.center.coords() - g.center.coords()).norm()).max((b.radius - g.radius).abs()),
            CapResult::Empty => trip = f64::INFINITY,
        }
        let two_step = image_of_cap_composed(&v, &cs)?;
        comp = comp.max(geodesic_distance(&two_step.center, &img.ball.center)).max((two_step.radius - img.ball.radius).abs());
        for y in boundary_samples(&g, 50, seed ^ ((i + 2) << 20)) {
            comp = comp.max((apply_composed(&v, y.coords()) - v.apply_raw(y.coords())).norm());
        }
    }
    rec.checks.push(Check::at_most("cap image boundary residual", "cap-image-exactness", cap, 0.0, tol));
    rec.checks.push(Check::at_most("hemisphere image boundary residual", "hemisphere-image-exactness", hemi, 0.0, tol));
    rec.checks.push(Check::at_most("euclidean/geodesic cap round trip", "cap-round-trip", trip, 0.0, 1e-12));
    rec.checks.push(Check::at_most("elementary-map composition", "composition-coherence", comp, 0.0, 1e-10));
    let p = SpherePoint::basis(0);
    let n = Vec4::new(0.0, 0.0, 1.0, 0.0);
    let mut rates = vec![];
    for &theta in thetas {
        let r = asymptotic_image_bounds(&p, &n, theta, 0.3, s, 2000, seed)?;
        let name = format!("image rate theta={theta}");
        rec.checks.push(match r.exponent {
            Some(e) => Check::abs(name, "asymptotic-image-rate", e, 0.775, 0.325),
            None => Check::flag(name, "asymptotic-image-rate", r.exact),
        });
        rates.push(r);
    }
    rec.results = json!({
        "pairs": pairs,
        "cap_residual": cap,
        "hemisphere_residual": hemi,
        "round_trip": trip,
        "composition": comp,
        "rates": rates,
    });
    Ok(rec)
}

fn blowup(a: &crate::BlowupArgs, mut rec: Record) -> Result<Record> {
    let m = load_surface(&a.surface)?;
    if a.vertex >= m.len() {
        bail!("--vertex {} out of range for {} vertices", a.vertex, m.len());
    }
    let oracle = RegionOracle::new(&m);
    let pts = uniform_sample_s3(a.samples, seed(&a.common)?)?;
    let factor = a.common.tol.unwrap_or(3.0);
    let mut cases: Vec<(String, BlowupCase)> = vec![];
    if a.radial {
        // deepest sample point of A
        let p = pts
            .iter()
            .take(4096)
            .min_by(|x, y| oracle.distance.signed(x).total_cmp(&oracle.distance.signed(y)))
            .copied()
            .context("no samples")?;
        cases.push(("radial".into(), BlowupCase::Radial { p, s_sequence: a.s.clone() }));
    }
    for &k in &a.k {
        let approach = BlowupApproach::new(m.vertices[a.vertex], m.normals[a.vertex], k.atan(), a.s.clone())?;
        cases.push((format!("k={k}"), BlowupCase::Boundary(approach)));
    }
    let mut reports = BTreeMap::new();
    for (name, case) in cases {
        let r = blowup_residual(&oracle, &case, a.t, &pts)?;
        rec.checks.push(Check::flag(format!("{name} monotone"), "blowup-limit-ball", r.monotone));
        let last = *r.residual.last().expect("non-empty sequence");
        rec.checks.push(Check::at_most(format!("{name} reaches noise floor"), "blowup-limit-ball", last, factor * r.noise_floor, 0.0));
        reports.insert(name, r);
    }
    rec.results = serde_json::to_value(&reports)?;
    Ok(rec)
}

fn optimize(a: &crate::OptimizeArgs, mut rec: Record) -> Result<Record> {
    let c = &a.common;
    let result = match a.mode {
        Mode::Parametric => {
            let mut fixed = BTreeMap::new();
            if let Some(r) = a.surface.r {
                fixed.insert("r".to_string(), r);
            }
            let fam = FamilyRegistry::default().make(&a.family, &fixed)?;
            let cfg = OptimizerConfig::new(a.step, a.iters, a.grad_tol, OptimizerMode::Parametric)?;
            optimize_parametric(fam.as_ref(), &a.start, &cfg, a.surface.res)?
        }
        Mode::Mesh => {
            let start = if a.surface.input.is_some() || a.surface.surface.is_some() {
                load_surface(&a.surface)?
            } else {
                perturbed_clifford(a.surface.res, a.amp, seed(c)?)?
            };
            let cfg = OptimizerConfig::new(a.step, a.iters, a.grad_tol, OptimizerMode::Mesh)?;
            optimize_mesh(&start, &cfg)?
        }
    };
    if let Some(out) = &c.out {
        write_text(out, &trajectory_csv(&result.trajectory))?;
    }
    let w: Vec<f64> = result.trajectory.iter().map(|r| r.report.willmore).collect();
    let last = *w.last().expect("trajectory has the start");
    let tol = c.tol.unwrap_or(1e-2);
    rec.checks.push(Check::flag("energy decreases", "monotone-descent", w.windows(2).all(|p| p[1] < p[0])));
    let (bound, tag) = if result.mesh.genus >= 1 { (TWO_PI2, "willmore-torus-bound") } else { (4.0 * PI, "willmore-lower-bound") };
    rec.checks.push(Check::at_least("final energy above the lower bound", tag, last, bound, tol * bound));
    rec.results = json!({
        "iterations": result.trajectory.len() - 1,
        "params": result.params,
        "initial_willmore": w[0],
        "final_willmore": last,
        "final_grad_norm": result.trajectory.last().map(|r| r.grad_norm),
    });
    Ok(rec)
}

fn cubical(audit: Audit, c: &Common, mut rec: Record) -> Result<Record> {
    let seed = c.seed.unwrap_or(11);
    let mut results: Vec<AuditResult> = vec![];
    let retractions = || -> Result<Vec<AuditResult>> {
        let mut out = vec![];
        for (m, j) in [(1, 1), (2, 1), (1, 2)] {
            let (c1, c2) = audit_retraction(&Retraction::new(m, j)?);
            out.push(c1);
            out.push(c2);
        }
        Ok(out)
    };
    match audit {
        Audit::All => results = audit_all(seed)?,
        Audit::Boundary => results.extend((1..=3).map(|n| audit_boundary_squared(n, 1))),
        Audit::Counts => {
            for n in 1..=4 {
                results.extend((0..=2).map(|j| audit_cell_counts(n, j)));
            }
        }
        Audit::Composition => results.push(audit_composition(2, 0, 1, 2)),
        Audit::Fineness => results.push(audit_fineness(2, 2, 200, seed)),
        Audit::Retraction => results = retractions()?,
    }
    for r in &results {
        let tag = match r.name.split(' ').next().unwrap_or("") {
            "boundary_squared" => "chain-complex-identity",
            "cell_counts" => "cell-count-formula",
            "composition" => "rounding-composition",
            "fineness_adjacency" => "fineness-adjacent-pairs",
            "retraction_adjacent" => "retraction-adjacent-distance",
            _ => "retraction-boundary-values",
        };
        let mut check = Check::abs(&r.name, tag, r.failures as f64, 0.0, 0.0);
        check.pass = r.pass();
        rec.checks.push(check);
    }
    rec.results = json!({ "audits": results });
    Ok(rec)
}
