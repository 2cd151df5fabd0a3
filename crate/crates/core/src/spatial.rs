//! Bounding-volume hierarchy over the chordal triangles of a mesh on S³, with
//! closest-point queries and great-arc crossing counts.

use crate::s3::{geodesic_distance, SpherePoint, Vec4};
use crate::surface::chart::cross4;
use crate::surface::SurfaceMesh;

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone, Copy)]
pub struct Aabb {
    pub min: Vec4,
    pub max: Vec4,
}

impl Aabb {
    fn empty() -> Self {
        Aabb { min: Vec4::repeat(f64::INFINITY), max: Vec4::repeat(f64::NEG_INFINITY) }
    }

    fn grow(&mut self, p: &Vec4) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    fn merge(&self, o: &Aabb) -> Aabb {
        Aabb { min: self.min.inf(&o.min), max: self.max.sup(&o.max) }
    }

    pub fn inflate(&self, r: f64) -> Aabb {
        Aabb { min: self.min.add_scalar(-r), max: self.max.add_scalar(r) }
    }

    pub fn overlaps(&self, o: &Aabb) -> bool {
        (0..4).all(|i| self.min[i] <= o.max[i] && o.min[i] <= self.max[i])
    }

    fn dist2(&self, p: &Vec4) -> f64 {
        let mut d = 0.0;
        for i in 0..4 {
            let e = (self.min[i] - p[i]).max(0.0).max(p[i] - self.max[i]);
            d += e * e;
        }
        d
    }
}

#[derive(Debug, Clone)]
struct Node {
    bbox: Aabb,
    // inner: children indices; leaf: range into `order`
    left: usize,
    right: usize,
    start: usize,
    count: usize,
}

/// BVH over triangles in R⁴.
#[derive(Debug, Clone)]
pub struct TriangleBvh {
    tris: Vec<[Vec4; 3]>,
    /// Box of the radially projected (spherical) triangle.
    sbox: Vec<Aabb>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl TriangleBvh {
    pub fn new(tris: Vec<[Vec4; 3]>) -> Self {
        let boxes: Vec<Aabb> = tris
            .iter()
            .map(|t| {
                let mut b = Aabb::empty();
                t.iter().for_each(|p| b.grow(p));
                // every point of the spherical triangle lies within 1 − dist(0, T) of T
                let inner = closest_point_on_triangle(&Vec4::zeros(), t).1.norm();
                b.inflate((1.0 - inner).max(0.0) + 1e-12)
            })
            .collect();
        let mut order: Vec<usize> = (0..tris.len()).collect();
        let centroids: Vec<Vec4> = tris.iter().map(|t| (t[0] + t[1] + t[2]) / 3.0).collect();
        let mut nodes = Vec::with_capacity(2 * tris.len() / LEAF_SIZE + 2);
        if !tris.is_empty() {
            build(&mut nodes, &mut order, &boxes, &centroids, 0, tris.len());
        }
        TriangleBvh { tris, sbox: boxes, order, nodes }
    }

    pub fn from_mesh(mesh: &SurfaceMesh) -> Self {
        Self::new((0..mesh.faces.len()).map(|f| mesh.triangle(f)).collect())
    }

    pub fn triangle(&self, f: usize) -> &[Vec4; 3] {
        &self.tris[f]
    }

    pub fn len(&self) -> usize {
        self.tris.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tris.is_empty()
    }

    /// Closest point on any triangle: `(face, barycentric, point, squared distance)`.
    /// Ties go to the lowest face index.
    pub fn closest(&self, p: &Vec4) -> Option<Closest> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = Closest { face: usize::MAX, bary: [0.0; 3], point: Vec4::zeros(), dist2: f64::INFINITY };
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if node.bbox.dist2(p) > best.dist2 {
                continue;
            }
            if node.count > 0 {
                for &f in &self.order[node.start..node.start + node.count] {
                    let (bary, q) = closest_point_on_triangle(p, &self.tris[f]);
                    let d2 = (q - p).norm_squared();
                    if d2 < best.dist2 || (d2 == best.dist2 && f < best.face) {
                        best = Closest { face: f, bary, point: q, dist2: d2 };
                    }
                }
            } else {
                let (l, r) = (node.left, node.right);
                let (dl, dr) = (self.nodes[l].bbox.dist2(p), self.nodes[r].bbox.dist2(p));
                if dl <= dr {
                    stack.push(r);
                    stack.push(l);
                } else {
                    stack.push(l);
                    stack.push(r);
                }
            }
        }
        Some(best)
    }

    /// Visit every face whose spherical-triangle box overlaps `b`.
    pub fn visit_overlapping(&self, b: &Aabb, mut f: impl FnMut(usize)) {
        if self.nodes.is_empty() {
            return;
        }
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if !node.bbox.overlaps(b) {
                continue;
            }
            if node.count > 0 {
                for &face in &self.order[node.start..node.start + node.count] {
                    if self.sbox[face].overlaps(b) {
                        f(face);
                    }
                }
            } else {
                stack.push(node.left);
                stack.push(node.right);
            }
        }
    }

    /// Number of times the minor great arc from `x` to `y` crosses the radial
    /// projection of the mesh; `None` when some crossing is too close to call.
    pub fn arc_crossings(&self, x: &Vec4, y: &Vec4) -> Option<usize> {
        let angle = 2.0 * (x - y).norm().atan2((x + y).norm());
        let pieces = ((angle / 0.25).ceil() as usize).max(1);
        // unit vector orthogonal to x in the plane of the arc
        let w = y - x * x.dot(y);
        let wn = w.norm();
        if wn < 1e-14 {
            return if angle < 1e-14 { Some(0) } else { None };
        }
        let w = w / wn;
        let at = |k: usize| {
            let s = angle * k as f64 / pieces as f64;
            x * s.cos() + w * s.sin()
        };
        let step = angle / pieces as f64;
        let sag = 1.0 - (0.5 * step).cos();
        let mut count = 0usize;
        let mut degenerate = false;
        let mut prev = at(0);
        for k in 1..=pieces {
            let next = if k == pieces { *y } else { at(k) };
            let mut b = Aabb::empty();
            b.grow(&prev);
            b.grow(&next);
            let b = b.inflate(sag + 1e-12);
            self.visit_overlapping(&b, |f| match arc_triangle_crossing(&prev, &next, &self.tris[f]) {
                Crossing::Yes => count += 1,
                Crossing::No => {}
                Crossing::Degenerate => degenerate = true,
            });
            if degenerate {
                return None;
            }
            prev = next;
        }
        Some(count)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Closest {
    pub face: usize,
    pub bary: [f64; 3],
    pub point: Vec4,
    pub dist2: f64,
}

fn build(nodes: &mut Vec<Node>, order: &mut [usize], boxes: &[Aabb], cents: &[Vec4], start: usize, end: usize) -> usize {
    let mut bbox = Aabb::empty();
    let mut cbox = Aabb::empty();
    for &f in &order[start..end] {
        bbox = bbox.merge(&boxes[f]);
        cbox.grow(&cents[f]);
    }
    let idx = nodes.len();
    nodes.push(Node { bbox, left: 0, right: 0, start, count: end - start });
    if end - start <= LEAF_SIZE {
        return idx;
    }
    let ext = cbox.max - cbox.min;
    let axis = ext.imax();
    let mid = (start + end) / 2;
    order[start..end].select_nth_unstable_by(mid - start, |a, b| {
        cents[*a][axis].total_cmp(&cents[*b][axis]).then(a.cmp(b))
    });
    let l = build(nodes, order, boxes, cents, start, mid);
    let r = build(nodes, order, boxes, cents, mid, end);
    nodes[idx].left = l;
    nodes[idx].right = r;
    nodes[idx].count = 0;
    idx
}

/// Closest point of triangle `t` to `p` (works in any dimension; dot products only).
pub fn closest_point_on_triangle(p: &Vec4, t: &[Vec4; 3]) -> ([f64; 3], Vec4) {
    let (a, b, c) = (&t[0], &t[1], &t[2]);
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return ([1.0, 0.0, 0.0], *a);
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return ([0.0, 1.0, 0.0], *b);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return ([1.0 - v, v, 0.0], a + ab * v);
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return ([0.0, 0.0, 1.0], *c);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return ([1.0 - w, 0.0, w], a + ac * w);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return ([0.0, 1.0 - w, w], b + (c - b) * w);
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    ([1.0 - v - w, v, w], a + ab * v + ac * w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Crossing {
    Yes,
    No,
    Degenerate,
}

/// Does the minor arc between unit vectors `x` and `y` meet the cone over `t`?
///
/// The cones over the arc and over the triangle meet along the null direction
/// of the 4×5 matrix `[x, y, −a, −b, −c]`; the arc crosses the spherical
/// triangle exactly when all five null-vector coordinates share a sign.
pub fn arc_triangle_crossing(x: &Vec4, y: &Vec4, t: &[Vec4; 3]) -> Crossing {
    let cols = [*x, *y, -t[0], -t[1], -t[2]];
    let mut n = [0.0; 5];
    for k in 0..5 {
        let rest: Vec<&Vec4> = cols.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, c)| c).collect();
        let d = cross4(rest[0], rest[1], rest[2]).dot(rest[3]);
        n[k] = if k % 2 == 0 { d } else { -d };
    }
    let scale = n.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Crossing::Degenerate;
    }
    let tol = 1e-10 * scale;
    let pos = n.iter().filter(|&&v| v > tol).count();
    let neg = n.iter().filter(|&&v| v < -tol).count();
    if pos == 5 || neg == 5 {
        Crossing::Yes
    } else if pos + neg < 5 && (pos == 0 || neg == 0) {
        // a coordinate is ~0 and no sign conflict rules the crossing out
        Crossing::Degenerate
    } else {
        Crossing::No
    }
}

/// Signed geodesic distance to a closed oriented mesh.
///
/// Magnitude: geodesic distance to the radial projection of the closest
/// chordal point. Sign: parity of arc crossings to a reference point of known
/// side, negative in `A` (the side the normals point away from).
#[derive(Debug, Clone)]
pub struct SignedDistance {
    bvh: TriangleBvh,
    refs: Vec<(Vec4, bool)>,
}

impl SignedDistance {
    pub fn new(mesh: &SurfaceMesh) -> Self {
        let bvh = TriangleBvh::from_mesh(mesh);
        let h = mesh.mean_edge_length();
        let nf = mesh.faces.len();
        let count = 128.min(nf);
        let mut refs = Vec::with_capacity(2 * count);
        for k in 0..count {
            let f = k * nf / count;
            let t = bvh.triangle(f);
            let c = (t[0] + t[1] + t[2]) / 3.0;
            let c = c / c.norm();
            let [a, b, cc] = mesh.faces[f];
            let navg = mesh.normals[a] + mesh.normals[b] + mesh.normals[cc];
            let mut fnorm = cross4(&c, &(t[1] - t[0]), &(t[2] - t[0]));
            if fnorm.dot(&navg) < 0.0 {
                fnorm = -fnorm;
            }
            let fnorm = fnorm / fnorm.norm();
            let delta = 0.25 * h;
            refs.push((c * delta.cos() + fnorm * delta.sin(), true));
            refs.push((c * delta.cos() - fnorm * delta.sin(), false));
        }
        SignedDistance { bvh, refs }
    }

    pub fn bvh(&self) -> &TriangleBvh {
        &self.bvh
    }

    /// Unsigned geodesic distance and closest-point record.
    pub fn unsigned(&self, x: &SpherePoint) -> (f64, Closest) {
        let c = self.bvh.closest(x.coords()).expect("mesh has faces");
        let q = SpherePoint::normalize(c.point);
        (geodesic_distance(x, &q), c)
    }

    /// `true` when `x` lies in `A*` (the side the normals point into).
    pub fn in_a_star(&self, x: &SpherePoint) -> bool {
        let xc = x.coords();
        let mut order: Vec<(f64, usize)> =
            self.refs.iter().enumerate().map(|(i, (r, _))| (-(r.dot(xc)), i)).collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, i) in order.iter().take(16) {
            let (r, side) = &self.refs[i];
            if let Some(n) = self.bvh.arc_crossings(xc, r) {
                return *side == (n % 2 == 0);
            }
        }
        // every nearby reference hit a degenerate configuration: fall back to
        // the side of the closest face
        let c = self.bvh.closest(xc).expect("mesh has faces");
        let t = self.bvh.triangle(c.face);
        let fnorm = cross4(&(t[0] + t[1] + t[2]), &(t[1] - t[0]), &(t[2] - t[0]));
        (xc - c.point).dot(&fnorm) >= 0.0
    }

    /// Signed distance `d(x)`: negative in `A`, positive in `A*`.
    pub fn signed(&self, x: &SpherePoint) -> f64 {
        let (d, c) = self.unsigned(x);
        if c.dist2.sqrt() <= 1e-12 {
            return 0.0;
        }
        if self.in_a_star(x) {
            d
        } else {
            -d
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::make_flat_torus;

    #[test]
    fn closest_point_matches_brute_force() {
        let m = make_flat_torus(0.6, 16).unwrap();
        let bvh = TriangleBvh::from_mesh(&m);
        let pts = crate::s3::uniform_sample_s3(50, 3).unwrap();
        for p in &pts {
            let c = bvh.closest(p.coords()).unwrap();
            let brute = (0..m.faces.len())
                .map(|f| (closest_point_on_triangle(p.coords(), &m.triangle(f)).1 - p.coords()).norm_squared())
                .fold(f64::INFINITY, f64::min);
            assert!((c.dist2 - brute).abs() < 1e-14);
        }
    }

    #[test]
    fn crossing_of_simple_cone() {
        let t = [
            Vec4::new(-0.1, -0.1, 0.0, 1.0),
            Vec4::new(0.2, -0.1, 0.0, 1.0),
            Vec4::new(-0.1, 0.2, 0.1, 1.0),
        ];
        let t = t.map(|p| p / p.norm());
        let e1 = Vec4::new(1.0, 0.0, 0.0, 0.0);
        let e4 = Vec4::new(0.0, 0.0, 0.0, 1.0);
        let e3 = Vec4::new(0.0, 0.0, 1.0, 0.0);
        let x = (e1 * 0.3 + e4).normalize();
        let y = (-e1 * 0.3 + e4 + e3 * 0.01).normalize();
        assert_eq!(arc_triangle_crossing(&x, &y, &t), Crossing::No);
        let z = Vec4::new(0.0, 0.0, 0.9, 0.4).normalize();
        let w = Vec4::new(0.0, 0.0, -0.9, 0.4).normalize();
        assert_eq!(arc_triangle_crossing(&z, &w, &t), Crossing::Yes);
    }
}
