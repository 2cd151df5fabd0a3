//! The `S3MESH v1` text format.
//!
//! ```text
//! S3MESH 1
//! V F g
//! x1 x2 x3 x4        (V vertex lines)
//! n1 n2 n3 n4        (V normal lines)
//! i j k              (F face lines, zero-based)
//! ```

use std::io::{BufRead, Write};

use super::{CurvatureSource, SurfaceMesh};
use crate::error::{Error, Result};
use crate::s3::{SpherePoint, Vec4};

pub fn write_mesh<W: Write>(mesh: &SurfaceMesh, mut w: W) -> Result<()> {
    writeln!(w, "S3MESH 1")?;
    writeln!(w, "{} {} {}", mesh.len(), mesh.faces.len(), mesh.genus)?;
    for x in &mesh.vertices {
        let c = x.coords();
        writeln!(w, "{:.16e} {:.16e} {:.16e} {:.16e}", c[0], c[1], c[2], c[3])?;
    }
    for n in &mesh.normals {
        writeln!(w, "{:.16e} {:.16e} {:.16e} {:.16e}", n[0], n[1], n[2], n[3])?;
    }
    for f in &mesh.faces {
        writeln!(w, "{} {} {}", f[0], f[1], f[2])?;
    }
    Ok(())
}

fn fmt_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Format { line, msg: msg.into() }
}

/// Read a mesh; vertices are renormalized and normals re-projected to the
/// tangent space. Curvature is not stored in the format, so the result has none.
pub fn read_mesh<R: BufRead>(r: R) -> Result<SurfaceMesh> {
    let mut lines = r.lines().enumerate().filter_map(|(i, l)| match l {
        Ok(s) if s.trim().is_empty() => None,
        other => Some((i + 1, other)),
    });
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((i, Ok(s))) => Ok((i, s)),
            Some((i, Err(e))) => Err(fmt_err(i, e.to_string())),
            None => Err(fmt_err(0, format!("unexpected end of file, expected {what}"))),
        }
    };
    let (l, head) = next("header")?;
    if head.trim() != "S3MESH 1" {
        return Err(fmt_err(l, "expected header 'S3MESH 1'"));
    }
    let (l, counts) = next("counts")?;
    let c: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| fmt_err(l, format!("bad count '{t}'"))))
        .collect::<Result<_>>()?;
    if c.len() != 3 {
        return Err(fmt_err(l, "expected 'V F g'"));
    }
    let (nv, nf, genus) = (c[0], c[1], c[2]);
    let mut quad = |what: &str| -> Result<(usize, Vec4)> {
        let (l, s) = next(what)?;
        let v: Vec<f64> = s
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| fmt_err(l, format!("bad number '{t}'"))))
            .collect::<Result<_>>()?;
        if v.len() != 4 || v.iter().any(|x| !x.is_finite()) {
            return Err(fmt_err(l, format!("expected four finite numbers for {what}")));
        }
        Ok((l, Vec4::new(v[0], v[1], v[2], v[3])))
    };
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (l, x) = quad("vertex")?;
        vertices.push(SpherePoint::new(x).map_err(|e| fmt_err(l, e.to_string()))?);
    }
    let mut normals = Vec::with_capacity(nv);
    for k in 0..nv {
        let (l, n) = quad("normal")?;
        let x = vertices[k].coords();
        let t = n - x * x.dot(&n);
        if t.norm() < 1e-12 {
            return Err(fmt_err(l, "normal is not tangent"));
        }
        normals.push(t / t.norm());
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (l, s) = next("face")?;
        let f: Vec<usize> = s
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| fmt_err(l, format!("bad index '{t}'"))))
            .collect::<Result<_>>()?;
        if f.len() != 3 || f.iter().any(|&i| i >= nv) {
            return Err(fmt_err(l, "expected three in-range vertex indices"));
        }
        faces.push([f[0], f[1], f[2]]);
    }
    let mesh = SurfaceMesh::new(vertices, faces, normals, vec![], vec![], CurvatureSource::None)
        .map_err(|e| fmt_err(0, e.to_string()))?;
    if mesh.genus != genus {
        return Err(fmt_err(2, format!("declared genus {genus} but Euler characteristic gives {}", mesh.genus)));
    }
    Ok(mesh)
}
