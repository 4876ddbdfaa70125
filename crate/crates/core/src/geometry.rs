//! Exact rational polytopes: H/V conversion, duality of Fano pairs, clipping by
//! a half-space and a deterministic pulling triangulation.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{invalid, Error, Result};
use crate::rational::{
    affine_rank, determinant, dot, factorial, int, is_integral, kernel, lcm_denominators, rank,
    solve, sub, Rational,
};

/// Largest ambient dimension accepted by the exact routines.
pub const DIM_CAP: usize = 6;

pub type RationalVector = Vec<Rational>;

/// Integer matrix acting on column vectors.
pub type IntMatrix = Vec<Vec<i64>>;

/// `{ y : <normal, y> + offset >= 0 }`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HalfSpace {
    pub normal: RationalVector,
    pub offset: Rational,
}

impl HalfSpace {
    pub fn new(normal: RationalVector, offset: Rational) -> Self {
        HalfSpace { normal, offset }
    }

    pub fn eval(&self, y: &[Rational]) -> Rational {
        dot(&self.normal, y) + &self.offset
    }

    pub fn negated(&self) -> HalfSpace {
        HalfSpace {
            normal: self.normal.iter().map(|x| -x).collect(),
            offset: -self.offset.clone(),
        }
    }
}

/// Full-dimensional convex polytope with both descriptions and facet-vertex incidence.
///
/// Vertices are kept in lexicographic order; `halfspaces[i]` is the facet whose
/// vertices are `incidence[i]` (sorted indices into `vertices`).
#[derive(Clone, Debug, PartialEq)]
pub struct Polytope {
    pub dim: usize,
    pub vertices: Vec<RationalVector>,
    pub halfspaces: Vec<HalfSpace>,
    pub incidence: Vec<Vec<usize>>,
}

/// Outcome of intersecting a polytope with a half-space.
#[derive(Clone, Debug)]
pub enum ClipResult {
    Full(Polytope),
    LowerDim(EmbeddedPolytope),
    Empty,
}

impl ClipResult {
    pub fn full(self) -> Option<Polytope> {
        match self {
            ClipResult::Full(p) => Some(p),
            _ => None,
        }
    }
}

pub(crate) fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            if m - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, m, k, cur, out);
            cur.pop();
        }
    }
    rec(0, m, k, &mut cur, &mut out);
    out
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return invalid("dimension must be positive");
    }
    if dim > DIM_CAP {
        return Err(Error::DimensionCap { dim, cap: DIM_CAP });
    }
    Ok(())
}

impl Polytope {
    /// Polytope `{ y : h(y) >= 0 for all h }`. Fails if the region is empty,
    /// unbounded or not full-dimensional.
    pub fn from_halfspaces(dim: usize, halfspaces: Vec<HalfSpace>) -> Result<Polytope> {
        check_dim(dim)?;
        for h in &halfspaces {
            if h.normal.len() != dim {
                return invalid(format!("half-space of length {} in dimension {dim}", h.normal.len()));
            }
            if h.normal.iter().all(Zero::is_zero) {
                return invalid("half-space with zero normal");
            }
        }
        let normals: Vec<RationalVector> = halfspaces.iter().map(|h| h.normal.clone()).collect();
        if rank(&normals) < dim {
            return Err(Error::Degenerate("half-spaces do not bound a polytope".into()));
        }
        for subset in combinations(halfspaces.len(), dim.saturating_sub(1)) {
            let rows: Vec<RationalVector> = subset.iter().map(|&i| normals[i].clone()).collect();
            let ker = kernel(&rows, dim);
            if ker.len() != 1 {
                continue;
            }
            let d = &ker[0];
            for sign in [1, -1] {
                let dir: RationalVector = d.iter().map(|x| x * int(sign)).collect();
                if normals.iter().all(|n| !dot(n, &dir).is_negative()) {
                    return Err(Error::Degenerate("half-spaces define an unbounded region".into()));
                }
            }
        }
        let mut verts: BTreeSet<RationalVector> = BTreeSet::new();
        for subset in combinations(halfspaces.len(), dim) {
            let a: Vec<RationalVector> = subset.iter().map(|&i| normals[i].clone()).collect();
            let b: RationalVector = subset.iter().map(|&i| -halfspaces[i].offset.clone()).collect();
            if let Some(y) = solve(&a, &b) {
                if halfspaces.iter().all(|h| !h.eval(&y).is_negative()) {
                    verts.insert(y);
                }
            }
        }
        if verts.is_empty() {
            return Err(Error::Degenerate("half-spaces define an empty region".into()));
        }
        Polytope::from_parts(dim, verts.into_iter().collect(), halfspaces)
    }

    /// Convex hull of a finite point set.
    pub fn from_vertices(dim: usize, points: &[RationalVector]) -> Result<Polytope> {
        check_dim(dim)?;
        if points.iter().any(|p| p.len() != dim) {
            return invalid("point of wrong dimension");
        }
        let pts: Vec<RationalVector> = points.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
        let refs: Vec<&[Rational]> = pts.iter().map(|p| p.as_slice()).collect();
        if affine_rank(&refs) != Some(dim) {
            return Err(Error::Degenerate("points are not full-dimensional".into()));
        }
        let k = int(pts.len() as i64);
        let centroid: RationalVector = (0..dim)
            .map(|j| pts.iter().fold(Rational::zero(), |acc, p| acc + &p[j]) / &k)
            .collect();
        let polar_hs: Vec<HalfSpace> = pts
            .iter()
            .map(|p| HalfSpace::new(sub(p, &centroid), Rational::one()))
            .collect();
        let polar = Polytope::from_halfspaces(dim, polar_hs)?;
        let facets: Vec<HalfSpace> = polar
            .vertices
            .iter()
            .map(|w| HalfSpace::new(w.clone(), Rational::one() - dot(w, &centroid)))
            .collect();
        let extreme: Vec<RationalVector> = pts
            .into_iter()
            .filter(|p| {
                let tight: Vec<RationalVector> = facets
                    .iter()
                    .filter(|h| h.eval(p).is_zero())
                    .map(|h| h.normal.clone())
                    .collect();
                rank(&tight) == dim
            })
            .collect();
        Polytope::from_parts(dim, extreme, facets)
    }

    /// Assembles a polytope from its exact vertex set and a superset of its facet inequalities.
    fn from_parts(dim: usize, mut vertices: Vec<RationalVector>, candidates: Vec<HalfSpace>) -> Result<Polytope> {
        vertices.sort();
        vertices.dedup();
        let refs: Vec<&[Rational]> = vertices.iter().map(|p| p.as_slice()).collect();
        if affine_rank(&refs) != Some(dim) {
            return Err(Error::Degenerate("polytope is not full-dimensional".into()));
        }
        let mut halfspaces = Vec::new();
        let mut incidence: Vec<Vec<usize>> = Vec::new();
        for h in candidates {
            let sat: Vec<usize> = (0..vertices.len()).filter(|&i| h.eval(&vertices[i]).is_zero()).collect();
            if sat.len() < dim || incidence.contains(&sat) {
                continue;
            }
            let pts: Vec<&[Rational]> = sat.iter().map(|&i| vertices[i].as_slice()).collect();
            if affine_rank(&pts) == Some(dim - 1) {
                halfspaces.push(h);
                incidence.push(sat);
            }
        }
        Ok(Polytope { dim, vertices, halfspaces, incidence })
    }

    pub fn contains(&self, y: &[Rational]) -> bool {
        self.halfspaces.iter().all(|h| !h.eval(y).is_negative())
    }

    pub fn contains_in_interior(&self, y: &[Rational]) -> bool {
        self.halfspaces.iter().all(|h| h.eval(y).is_positive())
    }

    pub fn contains_origin_in_interior(&self) -> bool {
        self.halfspaces.iter().all(|h| h.offset.is_positive())
    }

    pub fn is_lattice(&self) -> bool {
        self.vertices.iter().flatten().all(is_integral)
    }

    /// Pairs of vertex indices spanning an edge.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut facets_of: Vec<Vec<usize>> = vec![Vec::new(); self.vertices.len()];
        for (f, inc) in self.incidence.iter().enumerate() {
            for &v in inc {
                facets_of[v].push(f);
            }
        }
        let mut out = Vec::new();
        for i in 0..self.vertices.len() {
            for j in (i + 1)..self.vertices.len() {
                let common: Vec<RationalVector> = facets_of[i]
                    .iter()
                    .filter(|f| facets_of[j].contains(f))
                    .map(|&f| self.halfspaces[f].normal.clone())
                    .collect();
                if common.len() + 1 >= self.dim && rank(&common) == self.dim - 1 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Intersection with a half-space.
    pub fn clip(&self, hs: &HalfSpace) -> ClipResult {
        let vals: Vec<Rational> = self.vertices.iter().map(|v| hs.eval(v)).collect();
        if vals.iter().all(|v| !v.is_negative()) {
            return ClipResult::Full(self.clone());
        }
        if vals.iter().all(|v| v.is_negative()) {
            return ClipResult::Empty;
        }
        if vals.iter().all(|v| !v.is_positive()) {
            let face: Vec<RationalVector> = self
                .vertices
                .iter()
                .zip(&vals)
                .filter(|(_, v)| v.is_zero())
                .map(|(p, _)| p.clone())
                .collect();
            return ClipResult::LowerDim(EmbeddedPolytope::from_points(self.dim, &face));
        }
        let mut kept: Vec<RationalVector> = self
            .vertices
            .iter()
            .zip(&vals)
            .filter(|(_, v)| !v.is_negative())
            .map(|(p, _)| p.clone())
            .collect();
        for (i, j) in self.edges() {
            let (a, b) = (&vals[i], &vals[j]);
            if (a.is_positive() && b.is_negative()) || (a.is_negative() && b.is_positive()) {
                let s = a / (a - b);
                let p: RationalVector = self.vertices[i]
                    .iter()
                    .zip(&self.vertices[j])
                    .map(|(u, w)| u + (w - u) * &s)
                    .collect();
                kept.push(p);
            }
        }
        let mut hs_all = self.halfspaces.clone();
        hs_all.push(hs.clone());
        match Polytope::from_parts(self.dim, kept, hs_all) {
            Ok(p) => ClipResult::Full(p),
            Err(_) => ClipResult::Empty,
        }
    }

    /// Pulling triangulation. The cone apex is the origin when it is strictly
    /// interior, otherwise the lexicographically smallest vertex of each face.
    pub fn triangulate(&self) -> Vec<Simplex> {
        let mut out = Vec::new();
        if self.contains_origin_in_interior() {
            let origin = vec![Rational::zero(); self.dim];
            for inc in &self.incidence {
                for s in self.triangulate_face(inc, self.dim - 1) {
                    let mut verts: Vec<RationalVector> = s.iter().map(|&i| self.vertices[i].clone()).collect();
                    verts.insert(0, origin.clone());
                    out.push(Simplex { vertices: verts });
                }
            }
        } else {
            let all: Vec<usize> = (0..self.vertices.len()).collect();
            for s in self.triangulate_face(&all, self.dim) {
                out.push(Simplex { vertices: s.iter().map(|&i| self.vertices[i].clone()).collect() });
            }
        }
        out
    }

    /// Triangulates the face with (sorted) vertex indices `face` of dimension `k`.
    pub fn triangulate_face(&self, face: &[usize], k: usize) -> Vec<Vec<usize>> {
        if face.len() == k + 1 {
            return vec![face.to_vec()];
        }
        let apex = face[0];
        let mut subfaces: BTreeSet<Vec<usize>> = BTreeSet::new();
        for inc in &self.incidence {
            let inter: Vec<usize> = face.iter().copied().filter(|v| inc.contains(v)).collect();
            if inter.len() < k || inter.contains(&apex) || subfaces.contains(&inter) {
                continue;
            }
            let pts: Vec<&[Rational]> = inter.iter().map(|&i| self.vertices[i].as_slice()).collect();
            if affine_rank(&pts) == Some(k - 1) {
                subfaces.insert(inter);
            }
        }
        let mut out = Vec::new();
        for sf in subfaces {
            for mut s in self.triangulate_face(&sf, k - 1) {
                s.insert(0, apex);
                out.push(s);
            }
        }
        out
    }

    /// Simplices of a triangulation of facet `i`, as vertex index lists.
    pub fn facet_simplices(&self, i: usize) -> Vec<Vec<usize>> {
        self.triangulate_face(&self.incidence[i], self.dim - 1)
    }

    pub fn volume(&self) -> Rational {
        self.triangulate().iter().map(Simplex::volume).fold(Rational::zero(), |a, b| a + b)
    }

    /// Image under the linear map `y -> m y`.
    pub fn linear_image(&self, m: &[Vec<Rational>]) -> Result<Polytope> {
        let pts: Vec<RationalVector> = self.vertices.iter().map(|v| mat_vec(m, v)).collect();
        Polytope::from_vertices(self.dim, &pts)
    }
}

pub(crate) fn mat_vec(m: &[Vec<Rational>], v: &[Rational]) -> RationalVector {
    m.iter().map(|row| dot(row, v)).collect()
}

/// Full-dimensional simplex, listed by its vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct Simplex {
    pub vertices: Vec<RationalVector>,
}

impl Simplex {
    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    /// `|det(v_i - v_0)|`, i.e. `n!` times the volume.
    pub fn abs_det(&self) -> Rational {
        let v0 = &self.vertices[0];
        let rows: Vec<RationalVector> = self.vertices[1..].iter().map(|v| sub(v, v0)).collect();
        determinant(&rows).abs()
    }

    pub fn volume(&self) -> Rational {
        self.abs_det() / Rational::from_integer(factorial(self.dim()))
    }
}

/// Affine parametrisation of a rational affine subspace by pivot coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineChart {
    pub origin: RationalVector,
    pub pivots: Vec<usize>,
    pub basis: Vec<RationalVector>,
}

impl AffineChart {
    /// Chart of the affine hull of `points` (non-empty).
    pub fn of_points(points: &[RationalVector]) -> AffineChart {
        let origin = points[0].clone();
        let n = origin.len();
        let mut rows: Vec<RationalVector> = points[1..].iter().map(|p| sub(p, &origin)).collect();
        let mut basis = Vec::new();
        let mut pivots = Vec::new();
        // reduced row echelon form of the difference vectors
        let mut r = 0;
        for c in 0..n {
            let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
                continue;
            };
            rows.swap(r, p);
            let inv = rows[r][c].recip();
            rows[r] = rows[r].iter().map(|x| x * &inv).collect();
            for i in 0..rows.len() {
                if i != r && !rows[i][c].is_zero() {
                    let f = rows[i][c].clone();
                    let pr = rows[r].clone();
                    for (x, y) in rows[i].iter_mut().zip(&pr) {
                        *x -= &f * y;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        for row in rows.into_iter().take(r) {
            basis.push(row);
        }
        AffineChart { origin, pivots, basis }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn coords(&self, y: &[Rational]) -> RationalVector {
        self.pivots.iter().map(|&p| &y[p] - &self.origin[p]).collect()
    }

    pub fn lift(&self, z: &[Rational]) -> RationalVector {
        let mut y = self.origin.clone();
        for (zj, b) in z.iter().zip(&self.basis) {
            for (yi, bi) in y.iter_mut().zip(b) {
                *yi += zj * bi;
            }
        }
        y
    }

    pub fn pull_back(&self, hs: &HalfSpace) -> (RationalVector, Rational) {
        let normal: RationalVector = self.basis.iter().map(|b| dot(&hs.normal, b)).collect();
        (normal, hs.eval(&self.origin))
    }
}

/// Polytope of possibly lower dimension sitting in `R^ambient_dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedPolytope {
    pub ambient_dim: usize,
    pub chart: AffineChart,
    /// `None` when the polytope is a single point.
    pub inner: Option<Polytope>,
}

impl EmbeddedPolytope {
    pub fn from_points(ambient_dim: usize, points: &[RationalVector]) -> EmbeddedPolytope {
        let chart = AffineChart::of_points(points);
        let inner = if chart.dim() == 0 {
            None
        } else {
            let local: Vec<RationalVector> = points.iter().map(|p| chart.coords(p)).collect();
            Some(Polytope::from_vertices(chart.dim(), &local).expect("chart coordinates are full-dimensional"))
        };
        EmbeddedPolytope { ambient_dim, chart, inner }
    }

    pub fn from_polytope(p: &Polytope) -> EmbeddedPolytope {
        EmbeddedPolytope::from_points(p.dim, &p.vertices)
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn vertices(&self) -> Vec<RationalVector> {
        match &self.inner {
            None => vec![self.chart.origin.clone()],
            Some(p) => p.vertices.iter().map(|z| self.chart.lift(z)).collect(),
        }
    }

    /// Intersection with a half-space; `None` if empty.
    pub fn clip(&self, hs: &HalfSpace) -> Option<EmbeddedPolytope> {
        let (normal, offset) = self.chart.pull_back(hs);
        match &self.inner {
            None => (!offset.is_negative()).then(|| self.clone()),
            Some(p) => {
                if normal.iter().all(Zero::is_zero) {
                    return (!offset.is_negative()).then(|| self.clone());
                }
                match p.clip(&HalfSpace::new(normal, offset)) {
                    ClipResult::Empty => None,
                    ClipResult::Full(q) => Some(EmbeddedPolytope {
                        ambient_dim: self.ambient_dim,
                        chart: self.chart.clone(),
                        inner: Some(q),
                    }),
                    ClipResult::LowerDim(e) => {
                        let pts: Vec<RationalVector> = e.vertices().iter().map(|z| self.chart.lift(z)).collect();
                        Some(EmbeddedPolytope::from_points(self.ambient_dim, &pts))
                    }
                }
            }
        }
    }

    /// Simplices of dimension `dim()` covering the polytope, lifted to the ambient space.
    pub fn triangulate(&self) -> Vec<Vec<RationalVector>> {
        match &self.inner {
            None => vec![vec![self.chart.origin.clone()]],
            Some(p) => p
                .triangulate()
                .into_iter()
                .map(|s| s.vertices.iter().map(|z| self.chart.lift(z)).collect())
                .collect(),
        }
    }
}

/// Fano polytope `q` together with its dual `delta = { y : <p, y> + 1 >= 0, p in V(q) }`.
///
/// `delta.halfspaces[a]` is the inequality of `fano_vertices[a]`, which
/// is also `q.vertices[a]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FanoPair {
    pub q: Polytope,
    pub delta: Polytope,
    pub fano_vertices: Vec<Vec<BigInt>>,
}

/// Dual polytope `{ y : <p, y> + 1 >= 0 for p in V(q) }` of a polytope with the origin in its interior.
pub fn dual_polytope(q: &Polytope) -> Result<Polytope> {
    if !q.contains_origin_in_interior() {
        return Err(Error::NotFano("origin is not an interior point".into()));
    }
    let hs = q
        .vertices
        .iter()
        .map(|p| HalfSpace::new(p.clone(), Rational::one()))
        .collect();
    Polytope::from_halfspaces(q.dim, hs)
}

fn to_bigint_vec(v: &[Rational]) -> Option<Vec<BigInt>> {
    v.iter().map(|x| is_integral(x).then(|| x.to_integer())).collect()
}

fn is_primitive(v: &[BigInt]) -> bool {
    use num_integer::Integer;
    v.iter().fold(BigInt::zero(), |g, x| g.gcd(x)).is_one()
}

impl FanoPair {
    /// Pair built from the vertices of the Fano polytope `q`.
    pub fn from_fano_vertices(dim: usize, points: &[RationalVector]) -> Result<FanoPair> {
        let q = Polytope::from_vertices(dim, points)?;
        if q.vertices.len() != points.iter().collect::<BTreeSet<_>>().len() {
            return invalid("listed Fano vertices are not in convex position");
        }
        let mut fano_vertices = Vec::new();
        for v in &q.vertices {
            let iv = to_bigint_vec(v).ok_or_else(|| Error::NotFano("Fano vertex is not a lattice point".into()))?;
            if !is_primitive(&iv) {
                return Err(Error::NotFano("Fano vertex is not primitive".into()));
            }
            fano_vertices.push(iv);
        }
        let delta = dual_polytope(&q)?;
        Ok(FanoPair { q, delta, fano_vertices })
    }

    /// Pair built from the moment polytope `delta`.
    pub fn from_delta(delta: &Polytope) -> Result<FanoPair> {
        if !delta.contains_origin_in_interior() {
            return Err(Error::NotFano("origin is not an interior point of the moment polytope".into()));
        }
        let pts: Vec<RationalVector> = delta
            .halfspaces
            .iter()
            .map(|h| h.normal.iter().map(|x| x / &h.offset).collect())
            .collect();
        FanoPair::from_fano_vertices(delta.dim, &pts)
    }

    pub fn from_delta_vertices(dim: usize, points: &[RationalVector]) -> Result<FanoPair> {
        FanoPair::from_delta(&Polytope::from_vertices(dim, points)?)
    }

    pub fn from_halfspaces(dim: usize, hs: Vec<HalfSpace>) -> Result<FanoPair> {
        FanoPair::from_delta(&Polytope::from_halfspaces(dim, hs)?)
    }

    pub fn dim(&self) -> usize {
        self.q.dim
    }

    /// Pair for `q' = T q`, whose moment polytope is `T^{-T} delta`.
    pub fn transform(&self, t: &IntMatrix) -> Result<FanoPair> {
        let m = int_matrix(t, self.dim())?;
        let pts: Vec<RationalVector> = self.q.vertices.iter().map(|v| mat_vec(&m, v)).collect();
        FanoPair::from_fano_vertices(self.dim(), &pts)
    }
}

/// Checks shape and unimodularity of `t`, returning it as a rational matrix.
pub fn int_matrix(t: &IntMatrix, n: usize) -> Result<Vec<Vec<Rational>>> {
    if t.len() != n || t.iter().any(|r| r.len() != n) {
        return invalid("matrix has wrong shape");
    }
    let m: Vec<Vec<Rational>> = t.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect();
    if determinant(&m).abs() != Rational::one() {
        return invalid("matrix is not unimodular");
    }
    Ok(m)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StructureReport {
    pub dim: usize,
    pub num_fano_vertices: usize,
    pub num_delta_vertices: usize,
    pub reflexive: bool,
    pub gorenstein_index: BigInt,
    pub simplicial: bool,
    pub smooth: bool,
    pub delta_volume: Rational,
}

pub fn structure_report(pair: &FanoPair) -> StructureReport {
    let n = pair.dim();
    let gorenstein_index = lcm_denominators(pair.delta.vertices.iter().flatten());
    let simplicial = pair.q.incidence.iter().all(|f| f.len() == n);
    let smooth = simplicial
        && pair.q.incidence.iter().all(|f| {
            let rows: Vec<RationalVector> = f.iter().map(|&i| pair.q.vertices[i].clone()).collect();
            determinant(&rows).abs().is_one()
        });
    StructureReport {
        dim: n,
        num_fano_vertices: pair.q.vertices.len(),
        num_delta_vertices: pair.delta.vertices.len(),
        reflexive: gorenstein_index.is_one(),
        gorenstein_index,
        simplicial,
        smooth,
        delta_volume: pair.delta.volume(),
    }
}

/// A matrix `A` in `GL(n, Z)` with `A V(a) = V(b)`, if one exists.
pub fn lattice_equivalence(a: &Polytope, b: &Polytope) -> Option<IntMatrix> {
    let n = a.dim;
    if b.dim != n || a.vertices.len() != b.vertices.len() {
        return None;
    }
    let frame = combinations(a.vertices.len(), n).into_iter().find(|s| {
        let rows: Vec<RationalVector> = s.iter().map(|&i| a.vertices[i].clone()).collect();
        rank(&rows) == n
    })?;
    let src: Vec<RationalVector> = frame.iter().map(|&i| a.vertices[i].clone()).collect();
    let target: BTreeSet<RationalVector> = b.vertices.iter().cloned().collect();
    let m = b.vertices.len();
    let mut stack: Vec<Vec<usize>> = vec![vec![]];
    while let Some(tuple) = stack.pop() {
        if tuple.len() < n {
            for j in 0..m {
                if !tuple.contains(&j) {
                    let mut t = tuple.clone();
                    t.push(j);
                    stack.push(t);
                }
            }
            continue;
        }
        // A src_k = dst_k for each frame vertex: solve row by row.
        let dst: Vec<RationalVector> = tuple.iter().map(|&j| b.vertices[j].clone()).collect();
        let mut rows = Vec::with_capacity(n);
        let mut ok = true;
        for r in 0..n {
            let rhs: RationalVector = dst.iter().map(|d| d[r].clone()).collect();
            match solve(&src, &rhs) {
                Some(row) if row.iter().all(is_integral) => rows.push(row),
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok || determinant(&rows).abs() != Rational::one() {
            continue;
        }
        if a.vertices.iter().all(|v| target.contains(&mat_vec(&rows, v))) {
            return Some(
                rows.iter()
                    .map(|r| r.iter().map(|x| x.to_integer().to_i64().unwrap()).collect())
                    .collect(),
            );
        }
    }
    None
}
