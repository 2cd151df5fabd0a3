//! 3-adic cube complexes `I(n,j)`, integer chains, the vertex metric, rounding
//! maps, fineness of discrete maps and the retraction `r_m(j)`.
//!
//! A level-`j` vertex stores integer coordinates `k_i ∈ [0, 3^j]` with value
//! `k_i / 3^j`. A cell stores, per axis, either a vertex `[k]` or the interval
//! `[k, k+1]`.

use std::collections::{BTreeMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};

/// `3^j`, the number of intervals per axis at level `j`.
pub fn scale(j: u32) -> u32 {
    3u32.pow(j)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct GridVertex {
    pub j: u32,
    pub coords: Vec<u32>,
}

impl GridVertex {
    pub fn new(j: u32, coords: Vec<u32>) -> Result<Self> {
        let s = scale(j);
        if coords.iter().any(|&c| c > s) {
            return Err(invalid(format!("vertex coordinates must lie in [0, {s}]")));
        }
        Ok(GridVertex { j, coords })
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn values(&self) -> Vec<f64> {
        let s = scale(self.j) as f64;
        self.coords.iter().map(|&c| c as f64 / s).collect()
    }

    /// Lies in `I₀(n,j)`, the boundary of the cube.
    pub fn on_boundary(&self) -> bool {
        let s = scale(self.j);
        self.coords.iter().any(|&c| c == 0 || c == s)
    }
}

/// All vertices of `I(n,j)₀` in lexicographic order.
pub fn vertices(n: usize, j: u32) -> Vec<GridVertex> {
    let side = scale(j) as usize + 1;
    let total = side.pow(n as u32);
    (0..total)
        .map(|mut idx| {
            let mut coords = vec![0u32; n];
            for c in coords.iter_mut().rev() {
                *c = (idx % side) as u32;
                idx /= side;
            }
            GridVertex { j, coords }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Axis {
    /// The 0-cell `[k]`.
    Vertex(u32),
    /// The 1-cell `[k, k+1]`.
    Interval(u32),
}

impl Axis {
    pub fn dim(&self) -> usize {
        matches!(self, Axis::Interval(_)) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Cell {
    pub j: u32,
    pub axes: Vec<Axis>,
}

impl Cell {
    pub fn new(j: u32, axes: Vec<Axis>) -> Result<Self> {
        let s = scale(j);
        for a in &axes {
            match *a {
                Axis::Vertex(k) if k > s => return Err(invalid("vertex outside the cube")),
                Axis::Interval(k) if k >= s => return Err(invalid("interval outside the cube")),
                _ => {}
            }
        }
        Ok(Cell { j, axes })
    }

    pub fn dim(&self) -> usize {
        self.axes.iter().map(Axis::dim).sum()
    }

    pub fn n(&self) -> usize {
        self.axes.len()
    }

    /// `∂` of a single cell, `Σᵢ (−1)^{σ(i)} θ¹⊗…⊗∂θⁱ⊗…⊗θⁿ` with
    /// `σ(i) = Σ_{p<i} dim θᵖ` and `∂[a,b] = [b] − [a]`.
    pub fn boundary(&self) -> Chain {
        let mut out = Chain::zero(self.n(), self.j, self.dim().saturating_sub(1));
        if self.dim() == 0 {
            return out;
        }
        let mut sigma = 0;
        for (i, a) in self.axes.iter().enumerate() {
            if let Axis::Interval(k) = *a {
                let sign = if sigma % 2 == 0 { 1 } else { -1 };
                for (end, s) in [(k + 1, sign), (k, -sign)] {
                    let mut axes = self.axes.clone();
                    axes[i] = Axis::Vertex(end);
                    out.add(Cell { j: self.j, axes }, s);
                }
                sigma += 1;
            }
        }
        out
    }
}

/// Sparse integer chain of homogeneous dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Chain {
    pub n: usize,
    pub j: u32,
    pub dim: usize,
    terms: BTreeMap<Cell, i64>,
}

impl Chain {
    pub fn zero(n: usize, j: u32, dim: usize) -> Self {
        Chain { n, j, dim, terms: BTreeMap::new() }
    }

    pub fn from_cell(cell: Cell) -> Self {
        let mut c = Chain::zero(cell.n(), cell.j, cell.dim());
        c.add(cell, 1);
        c
    }

    pub fn from_terms(n: usize, j: u32, dim: usize, terms: impl IntoIterator<Item = (Cell, i64)>) -> Result<Self> {
        let mut c = Chain::zero(n, j, dim);
        for (cell, k) in terms {
            if cell.n() != n || cell.j != j || cell.dim() != dim {
                return Err(invalid("chain terms must share dimension, level and ambient n"));
            }
            c.add(cell, k);
        }
        Ok(c)
    }

    fn add(&mut self, cell: Cell, k: i64) {
        let e = self.terms.entry(cell.clone()).or_insert(0);
        *e += k;
        if *e == 0 {
            self.terms.remove(&cell);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, cell: &Cell) -> i64 {
        self.terms.get(cell).copied().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Cell, i64)> {
        self.terms.iter().map(|(c, k)| (c, *k))
    }
}

/// Linear extension of [`Cell::boundary`].
pub fn boundary(chain: &Chain) -> Chain {
    let mut out = Chain::zero(chain.n, chain.j, chain.dim.saturating_sub(1));
    for (cell, k) in chain.terms() {
        for (face, s) in cell.boundary().terms() {
            out.add(face.clone(), k * s);
        }
    }
    out
}

/// All `p`-cells of `I(n,j)`, lexicographic.
pub fn enumerate_cells(n: usize, j: u32, p: usize) -> Result<Vec<Cell>> {
    if p > n {
        return Err(invalid(format!("cell dimension {p} exceeds ambient dimension {n}")));
    }
    let s = scale(j);
    let axis_choices: Vec<Axis> = (0..=s).map(Axis::Vertex).chain((0..s).map(Axis::Interval)).collect();
    let mut out = vec![];
    let mut stack: Vec<Vec<Axis>> = vec![vec![]];
    while let Some(prefix) = stack.pop() {
        if prefix.len() == n {
            if prefix.iter().map(Axis::dim).sum::<usize>() == p {
                out.push(Cell { j, axes: prefix });
            }
            continue;
        }
        let used = prefix.iter().map(Axis::dim).sum::<usize>();
        let left = n - prefix.len();
        for a in &axis_choices {
            let u = used + a.dim();
            if u <= p && u + left > p {
                let mut next = prefix.clone();
                next.push(*a);
                stack.push(next);
            }
        }
    }
    out.sort();
    Ok(out)
}

/// `C(n,p) · 3^{jp} · (3^j+1)^{n−p}`.
pub fn cell_count(n: usize, j: u32, p: usize) -> u64 {
    if p > n {
        return 0;
    }
    let binom = (0..p).fold(1u64, |acc, i| acc * (n - i) as u64 / (i as u64 + 1));
    let s = scale(j) as u64;
    binom * s.pow(p as u32) * (s + 1).pow((n - p) as u32)
}

/// `d(x,y) = 3^j Σ |x_i − y_i|`.
pub fn vertex_distance(x: &GridVertex, y: &GridVertex) -> Result<u64> {
    if x.j != y.j {
        return Err(invalid(format!("level mismatch: {} vs {}", x.j, y.j)));
    }
    if x.n() != y.n() {
        return Err(invalid(format!("dimension mismatch: {} vs {}", x.n(), y.n())));
    }
    Ok(x.coords.iter().zip(&y.coords).map(|(a, b)| a.abs_diff(*b) as u64).sum())
}

/// `n(i,j)`: the nearest level-`j` vertex to a level-`i` vertex.
///
/// Coordinates round independently. For `i > j` a tie would need an offset of
/// half a level-`j` step, which `3^{i−j}` being odd rules out.
pub fn nearest_map(x: &GridVertex, j: u32) -> GridVertex {
    if x.j <= j {
        let f = scale(j - x.j);
        return GridVertex { j, coords: x.coords.iter().map(|c| c * f).collect() };
    }
    let f = scale(x.j - j);
    GridVertex { j, coords: x.coords.iter().map(|&c| (2 * c + f) / (2 * f)).collect() }
}

/// A map `I(n,j)₀ → T` with values stored in [`vertices`] order.
#[derive(Debug, Clone)]
pub struct DiscreteMap<T> {
    pub n: usize,
    pub j: u32,
    pub values: Vec<T>,
}

impl<T: Sync> DiscreteMap<T> {
    pub fn new(n: usize, j: u32, values: Vec<T>) -> Result<Self> {
        let expected = (scale(j) as usize + 1).pow(n as u32);
        if values.len() != expected {
            return Err(invalid(format!("map on I({n},{j}) needs {expected} values, got {}", values.len())));
        }
        Ok(DiscreteMap { n, j, values })
    }

    pub fn from_fn(n: usize, j: u32, f: impl Fn(&GridVertex) -> T) -> Self {
        DiscreteMap { n, j, values: vertices(n, j).iter().map(f).collect() }
    }

    /// `sup_{x≠y} M(φ(x) − φ(y)) / d(x,y)` over all pairs. `dist(a, b)` is
    /// the caller's `M(a − b)`.
    pub fn fineness_brute(&self, dist: impl Fn(&T, &T) -> f64 + Sync) -> f64 {
        let verts = vertices(self.n, self.j);
        (0..verts.len())
            .into_par_iter()
            .map(|a| {
                let mut best = 0.0f64;
                for b in a + 1..verts.len() {
                    let d = vertex_distance(&verts[a], &verts[b]).expect("same grid") as f64;
                    best = best.max(dist(&self.values[a], &self.values[b]) / d);
                }
                best
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Fineness over adjacent pairs only, `sup_{d(x,y)=1} M(φ(x) − φ(y))`.
    pub fn fineness_adjacent(&self, dist: impl Fn(&T, &T) -> f64) -> f64 {
        let side = scale(self.j) as usize + 1;
        let mut best = 0.0f64;
        for a in 0..self.values.len() {
            let mut stride = 1;
            let mut rest = a;
            for _ in 0..self.n {
                if rest % side + 1 < side {
                    best = best.max(dist(&self.values[a], &self.values[a + stride]));
                }
                rest /= side;
                stride *= side;
            }
        }
        best
    }
}

/// The open-box unfolding `R_m : I^m → (I₀^m × [0,1]) ∪ (I^m × {1})`,
/// radial projection from `(c, −1)` with `c` the cube center. The last
/// coordinate is the height.
pub fn open_box_map(x: &[f64]) -> Vec<f64> {
    let r = x.iter().map(|xi| (xi - 0.5).abs()).fold(0.0, f64::max);
    let tau = if r > 0.0 { (0.5 / r).min(2.0) } else { 2.0 };
    let mut out: Vec<f64> = x.iter().map(|xi| 0.5 + tau * (xi - 0.5)).collect();
    out.push(tau - 1.0);
    out
}

/// Largest difference quotient of [`open_box_map`] over axis and diagonal
/// neighbors of a uniform grid with `res` steps per side.
pub fn open_box_lipschitz(m: usize, res: usize) -> f64 {
    let side = res + 1;
    let total = side.pow(m as u32);
    let h = 1.0 / res as f64;
    let point = |mut idx: usize| -> Vec<usize> {
        let mut c = vec![0; m];
        for ci in c.iter_mut().rev() {
            *ci = idx % side;
            idx /= side;
        }
        c
    };
    let offsets: Vec<Vec<i64>> = (1..3usize.pow(m as u32))
        .map(|mut k| {
            (0..m)
                .map(|_| {
                    let d = (k % 3) as i64 - 1;
                    k /= 3;
                    d
                })
                .collect()
        })
        .filter(|o: &Vec<i64>| o.iter().any(|&d| d != 0))
        .collect();
    (0..total)
        .into_par_iter()
        .map(|idx| {
            let c = point(idx);
            let x: Vec<f64> = c.iter().map(|&ci| ci as f64 * h).collect();
            let rx = open_box_map(&x);
            let mut best = 0.0f64;
            for o in &offsets {
                let cy: Option<Vec<usize>> = c
                    .iter()
                    .zip(o)
                    .map(|(&ci, &d)| {
                        let v = ci as i64 + d;
                        (0..side as i64).contains(&v).then_some(v as usize)
                    })
                    .collect();
                if let Some(cy) = cy {
                    let y: Vec<f64> = cy.iter().map(|&ci| ci as f64 * h).collect();
                    let ry = open_box_map(&y);
                    let num: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                    let den: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                    best = best.max(num / den);
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

/// Grid resolution used to measure the Lipschitz constant of `R_m`.
pub const LIPSCHITZ_RES: usize = 240;

/// Smallest `q` with `3^{q−2} ≥ 1.1 · lipschitz`.
pub fn q_for_lipschitz(lipschitz: f64) -> u32 {
    let mut q = 2;
    while (scale(q - 2) as f64) < 1.1 * lipschitz {
        q += 1;
    }
    q
}

/// `r_m(j): I(m, j+q)₀ → S(m+1,j)₀ ∪ T(m+1,j)₀`.
///
/// `S(m+1,j)₀` is the side `I₀(m,j)₀ × I(1,j)₀` and `T(m+1,j)₀` the top
/// `I(m,j)₀ × {1}`; the height is the last coordinate. Each input goes to the
/// point of `K = S ∪ T` closest to `R_m(x)` in the metric `d`, ties going to
/// the lexicographically smallest.
#[derive(Debug, Clone)]
pub struct Retraction {
    pub m: usize,
    pub j: u32,
    pub q: u32,
    pub lipschitz: f64,
    targets: Vec<GridVertex>,
}

impl Retraction {
    pub fn new(m: usize, j: u32) -> Result<Self> {
        Self::with_lipschitz(m, j, open_box_lipschitz(m, LIPSCHITZ_RES))
    }

    pub fn with_lipschitz(m: usize, j: u32, lipschitz: f64) -> Result<Self> {
        if m == 0 {
            return Err(invalid("retraction needs m >= 1"));
        }
        let s = scale(j);
        let targets: Vec<GridVertex> = vertices(m + 1, j)
            .into_iter()
            .filter(|v| {
                let (base, h) = v.coords.split_at(m);
                h[0] == s || base.iter().any(|&c| c == 0 || c == s)
            })
            .collect();
        Ok(Retraction { m, j, q: q_for_lipschitz(lipschitz), lipschitz, targets })
    }

    /// Level of the domain grid, `j + q`.
    pub fn domain_level(&self) -> u32 {
        self.j + self.q
    }

    pub fn targets(&self) -> &[GridVertex] {
        &self.targets
    }

    pub fn apply(&self, x: &GridVertex) -> Result<GridVertex> {
        if x.j != self.domain_level() || x.n() != self.m {
            return Err(invalid(format!("r_{}({}) acts on I({}, {})", self.m, self.j, self.m, self.domain_level())));
        }
        let rx = open_box_map(&x.values());
        let s = scale(self.j) as f64;
        let dist = |v: &GridVertex| -> f64 { v.coords.iter().zip(&rx).map(|(&c, r)| (c as f64 - r * s).abs()).sum() };
        let mut best = &self.targets[0];
        let mut best_d = dist(best);
        for v in &self.targets[1..] {
            let d = dist(v);
            if d < best_d - 1e-9 {
                best = v;
                best_d = d;
            }
        }
        Ok(best.clone())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditResult {
    pub name: String,
    pub checked: usize,
    pub failures: usize,
}

impl AuditResult {
    pub fn pass(&self) -> bool {
        self.failures == 0 && self.checked > 0
    }
}

/// `∂∂α = 0` for every cell of `I(n,j)` in every dimension.
pub fn audit_boundary_squared(n: usize, j: u32) -> AuditResult {
    let mut checked = 0;
    let mut failures = 0;
    for p in 0..=n {
        for cell in enumerate_cells(n, j, p).expect("p <= n") {
            checked += 1;
            if !boundary(&cell.boundary()).is_zero() {
                failures += 1;
            }
        }
    }
    AuditResult { name: format!("boundary_squared n={n} j={j}"), checked, failures }
}

/// Enumerated cell counts against the closed form for all `p ≤ n`.
pub fn audit_cell_counts(n: usize, j: u32) -> AuditResult {
    let failures = (0..=n)
        .filter(|&p| enumerate_cells(n, j, p).expect("p <= n").len() as u64 != cell_count(n, j, p))
        .count();
    AuditResult { name: format!("cell_counts n={n} j={j}"), checked: n + 1, failures }
}

/// `n(k,i) = n(j,i) ∘ n(k,j)` on every vertex of `I(n,k)₀`.
pub fn audit_composition(n: usize, i: u32, j: u32, k: u32) -> AuditResult {
    let verts = vertices(n, k);
    let failures = verts.iter().filter(|x| nearest_map(x, i) != nearest_map(&nearest_map(x, j), i)).count();
    AuditResult { name: format!("composition n={n} (i,j,k)=({i},{j},{k})"), checked: verts.len(), failures }
}

/// Integer-valued random maps on `I(n,j)₀`; integer differences keep both
/// fineness computations exact in floating point.
pub fn audit_fineness(n: usize, j: u32, maps: usize, seed: u64) -> AuditResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = (scale(j) as usize + 1).pow(n as u32);
    let failures = (0..maps)
        .filter(|_| {
            let values: Vec<f64> = (0..count).map(|_| rng.random_range(-1000i32..=1000) as f64).collect();
            let phi = DiscreteMap::new(n, j, values).expect("sized");
            let abs = |a: &f64, b: &f64| (a - b).abs();
            phi.fineness_brute(abs) != phi.fineness_adjacent(abs)
        })
        .count();
    AuditResult { name: format!("fineness_adjacency n={n} j={j}"), checked: maps, failures }
}

/// (C.1) and (C.2) over every vertex and every adjacent pair of the domain.
pub fn audit_retraction(r: &Retraction) -> (AuditResult, AuditResult) {
    let verts = vertices(r.m, r.domain_level());
    let images: Vec<GridVertex> = verts.par_iter().map(|x| r.apply(x).expect("domain vertex")).collect();
    let boundary: Vec<usize> = (0..verts.len()).filter(|&a| verts[a].on_boundary()).collect();
    let c2_fail = boundary
        .iter()
        .filter(|&&a| {
            let mut expect = nearest_map(&verts[a], r.j).coords;
            expect.push(0);
            images[a].coords != expect
        })
        .count();
    let side = scale(r.domain_level()) as usize + 1;
    let (pairs, c1_fail) = (0..verts.len())
        .into_par_iter()
        .map(|a| {
            let (mut pairs, mut fail) = (0usize, 0usize);
            let mut stride = 1;
            let mut rest = a;
            for _ in 0..r.m {
                if rest % side + 1 < side {
                    pairs += 1;
                    if vertex_distance(&images[a], &images[a + stride]).expect("same grid") > r.m as u64 {
                        fail += 1;
                    }
                }
                rest /= side;
                stride *= side;
            }
            (pairs, fail)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    (
        AuditResult { name: format!("retraction_adjacent m={} j={} q={}", r.m, r.j, r.q), checked: pairs, failures: c1_fail },
        AuditResult { name: format!("retraction_boundary m={} j={} q={}", r.m, r.j, r.q), checked: boundary.len(), failures: c2_fail },
    )
}

/// Every exhaustive audit at its standard size.
pub fn audit_all(seed: u64) -> Result<Vec<AuditResult>> {
    let mut out = vec![];
    for n in 1..=3 {
        out.push(audit_boundary_squared(n, 1));
    }
    for n in 1..=4 {
        for j in 0..=2 {
            out.push(audit_cell_counts(n, j));
        }
    }
    out.push(audit_composition(2, 0, 1, 2));
    out.push(audit_fineness(2, 2, 200, seed));
    let mut lips: BTreeMap<usize, f64> = BTreeMap::new();
    for (m, j) in [(1, 1), (2, 1), (1, 2)] {
        let l = *lips.entry(m).or_insert_with(|| open_box_lipschitz(m, LIPSCHITZ_RES));
        let r = Retraction::with_lipschitz(m, j, l)?;
        let (c1, c2) = audit_retraction(&r);
        out.push(c1);
        out.push(c2);
    }
    Ok(out)
}

/// Distinct values of `r_m(j)` over its domain.
pub fn retraction_image_size(r: &Retraction) -> usize {
    vertices(r.m, r.domain_level()).iter().map(|x| r.apply(x).expect("domain vertex")).collect::<HashSet<_>>().len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(j: u32, c: &[u32]) -> GridVertex {
        GridVertex::new(j, c.to_vec()).unwrap()
    }

    #[test]
    fn unit_interval_at_level_one() {
        let cells = enumerate_cells(1, 1, 1).unwrap();
        let want: Vec<Cell> = (0..3).map(|k| Cell::new(1, vec![Axis::Interval(k)]).unwrap()).collect();
        assert_eq!(cells, want);
        assert_eq!(enumerate_cells(2, 0, 2).unwrap().len(), 1);
        assert_eq!(enumerate_cells(2, 1, 1).unwrap().len(), 24);
        assert!(enumerate_cells(2, 1, 3).is_err());
    }

    #[test]
    fn counts_match_formula() {
        for n in 1..=4 {
            for j in 0..=2 {
                assert!(audit_cell_counts(n, j).pass(), "n={n} j={j}");
            }
        }
    }

    #[test]
    fn interval_boundary() {
        let e = Cell::new(1, vec![Axis::Interval(1)]).unwrap();
        let b = e.boundary();
        assert_eq!(b.coefficient(&Cell::new(1, vec![Axis::Vertex(2)]).unwrap()), 1);
        assert_eq!(b.coefficient(&Cell::new(1, vec![Axis::Vertex(1)]).unwrap()), -1);
        assert_eq!(b.len(), 2);
    }

    #[test]
    fn square_boundary_signs() {
        use Axis::*;
        let sq = Cell::new(0, vec![Interval(0), Interval(0)]).unwrap();
        let b = sq.boundary();
        let c = |a, b| Cell::new(0, vec![a, b]).unwrap();
        assert_eq!(b.coefficient(&c(Vertex(1), Interval(0))), 1);
        assert_eq!(b.coefficient(&c(Vertex(0), Interval(0))), -1);
        assert_eq!(b.coefficient(&c(Interval(0), Vertex(1))), -1);
        assert_eq!(b.coefficient(&c(Interval(0), Vertex(0))), 1);
        assert_eq!(b.len(), 4);
        assert!(boundary(&b).is_zero());
    }

    #[test]
    fn boundary_squared_vanishes() {
        for n in 1..=3 {
            assert!(audit_boundary_squared(n, 1).pass());
        }
    }

    #[test]
    fn distances() {
        assert_eq!(vertex_distance(&v(1, &[1, 2]), &v(1, &[1, 2])).unwrap(), 0);
        assert_eq!(vertex_distance(&v(1, &[0, 0]), &v(1, &[1, 2])).unwrap(), 3);
        assert!(vertex_distance(&v(1, &[0]), &v(2, &[0])).is_err());
        let x = v(2, &[4, 4, 4]);
        let near = vertices(3, 2).into_iter().filter(|y| vertex_distance(&x, y).unwrap() == 1).count();
        assert_eq!(near, 6);
    }

    #[test]
    fn distance_one_is_an_edge() {
        let edges: HashSet<(GridVertex, GridVertex)> = enumerate_cells(2, 1, 1)
            .unwrap()
            .into_iter()
            .map(|c| {
                let ends: Vec<GridVertex> = c
                    .boundary()
                    .terms()
                    .map(|(f, _)| {
                        let coords = f.axes.iter().map(|a| if let Axis::Vertex(k) = a { *k } else { unreachable!() });
                        GridVertex { j: 1, coords: coords.collect() }
                    })
                    .collect();
                (ends[0].clone(), ends[1].clone())
            })
            .collect();
        let verts = vertices(2, 1);
        for a in &verts {
            for b in &verts {
                let one = vertex_distance(a, b).unwrap() == 1;
                assert_eq!(one, edges.contains(&(a.clone(), b.clone())) || edges.contains(&(b.clone(), a.clone())));
            }
        }
    }

    #[test]
    fn rounding() {
        assert_eq!(nearest_map(&v(2, &[4]), 1), v(1, &[1]));
        assert_eq!(nearest_map(&v(1, &[2, 3]), 2), v(2, &[6, 9]));
        for x in vertices(1, 2) {
            let y = nearest_map(&x, 1);
            let brute = vertices(1, 1)
                .into_iter()
                .min_by(|a, b| {
                    let da = (a.values()[0] - x.values()[0]).abs();
                    let db = (b.values()[0] - x.values()[0]).abs();
                    da.total_cmp(&db)
                })
                .unwrap();
            assert_eq!(y, brute);
        }
        assert!(audit_composition(2, 0, 1, 2).pass());
    }

    #[test]
    fn rounding_can_double_a_diagonal_step() {
        // Both coordinates round apart, so d_0 = 2 while d_1 = 2 and 2/3 rounds up to 1.
        let (x, y) = (v(1, &[1, 1]), v(1, &[2, 2]));
        assert_eq!(vertex_distance(&nearest_map(&x, 0), &nearest_map(&y, 0)).unwrap(), 2);
    }

    #[test]
    fn fineness_examples() {
        let c = DiscreteMap::from_fn(2, 1, |_| 3.0);
        let abs = |a: &f64, b: &f64| (a - b).abs();
        assert_eq!(c.fineness_brute(abs), 0.0);
        assert_eq!(c.fineness_adjacent(abs), 0.0);
        let lin = DiscreteMap::from_fn(1, 2, |x| x.coords[0] as f64);
        assert_eq!(lin.fineness_brute(abs), 1.0);
        assert_eq!(lin.fineness_adjacent(abs), 1.0);
        let lin = DiscreteMap::from_fn(1, 2, |x| x.values()[0]);
        assert!((lin.fineness_adjacent(abs) - 1.0 / 9.0).abs() < 1e-15);
        assert!((lin.fineness_brute(abs) - 1.0 / 9.0).abs() < 1e-15);
        assert!(audit_fineness(2, 1, 50, 3).pass());
    }

    #[test]
    fn open_box_fixes_the_boundary() {
        for x in [[0.0, 0.3], [1.0, 0.9], [0.2, 1.0]] {
            assert_eq!(open_box_map(&x), vec![x[0], x[1], 0.0]);
        }
        assert_eq!(open_box_map(&[0.5, 0.5]), vec![0.5, 0.5, 1.0]);
        assert_eq!(open_box_map(&[0.6, 0.5]), vec![0.7, 0.5, 1.0]);
        let l1 = open_box_lipschitz(1, 120);
        assert!((l1 - 8.0).abs() < 0.5, "{l1}");
        assert_eq!(q_for_lipschitz(l1), 4);
    }

    #[test]
    fn retraction_small_case() {
        let r = Retraction::with_lipschitz(1, 1, 8.0).unwrap();
        assert_eq!(r.q, 4);
        assert_eq!(r.targets().len(), 10);
        assert_eq!(r.apply(&v(5, &[0])).unwrap(), v(1, &[0, 0]));
        assert_eq!(r.apply(&v(5, &[243])).unwrap(), v(1, &[3, 0]));
        assert_eq!(r.apply(&v(5, &[121])).unwrap(), v(1, &[1, 3]));
        assert!(r.apply(&v(4, &[0])).is_err());
        let (c1, c2) = audit_retraction(&r);
        assert!(c1.pass() && c2.pass(), "{c1:?} {c2:?}");
        assert!(retraction_image_size(&r) > 4);
    }
}
