//! Exact polynomial integration over polytopes and facets.
//!
//! Monomials are expanded in barycentric coordinates of each simplex and
//! integrated with `∫ λ^a = k! M ∏ a_j! / (k + |a|)!`, where `M` is the simplex
//! measure. The same kernel serves Lebesgue integrals over full-dimensional
//! simplices and lattice-normalised integrals over facets.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::Result;
use crate::function::{AffineFunction, PlConvexFunction};
use crate::geometry::{EmbeddedPolytope, FanoPair, Polytope, RationalVector, Simplex};
use crate::invariants::linearity_regions;
use crate::rational::{determinant, factorial, int, solve, sub, to_f64, Rational};

/// `∫_s y^alpha` over a full-dimensional simplex.
pub fn simplex_monomial_integral(s: &Simplex, alpha: &[u32]) -> Rational {
    let measure = s.volume();
    simplex_integral_with_measure(&s.vertices, &measure, alpha)
}

/// `∫ y^alpha` over the `k`-simplex with the given vertices, for the measure giving it total mass `measure`.
pub fn simplex_integral_with_measure(vertices: &[RationalVector], measure: &Rational, alpha: &[u32]) -> Rational {
    let k = vertices.len() - 1;
    let mut poly: HashMap<Vec<u32>, Rational> = HashMap::new();
    poly.insert(vec![0; k + 1], Rational::one());
    for (i, &a) in alpha.iter().enumerate() {
        for _ in 0..a {
            let mut next: HashMap<Vec<u32>, Rational> = HashMap::new();
            for (exp, c) in &poly {
                for (j, v) in vertices.iter().enumerate() {
                    if v[i].is_zero() {
                        continue;
                    }
                    let mut e = exp.clone();
                    e[j] += 1;
                    *next.entry(e).or_insert_with(Rational::zero) += c * &v[i];
                }
            }
            poly = next;
        }
    }
    let total: u32 = alpha.iter().sum();
    let denom = Rational::from_integer(factorial(k + total as usize));
    let kf = Rational::from_integer(factorial(k));
    let mut acc = Rational::zero();
    for (exp, c) in poly {
        let num: BigInt = exp.iter().map(|&a| factorial(a as usize)).product();
        acc += c * Rational::from_integer(num);
    }
    acc * kf * measure / denom
}

/// Exact moments `∫ y^alpha` for all `|alpha| <= max_degree`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentTable {
    pub dim: usize,
    pub max_degree: u32,
    pub moments: BTreeMap<Vec<u32>, Rational>,
}

pub(crate) fn multi_indices(dim: usize, max_degree: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![0; dim]];
    for _ in 0..max_degree {
        let mut next = Vec::new();
        for a in &out {
            for i in 0..dim {
                let mut b = a.clone();
                b[i] += 1;
                next.push(b);
            }
        }
        out.extend(next);
        out.sort();
        out.dedup();
    }
    out
}

pub fn moment_table(p: &Polytope, max_degree: u32) -> MomentTable {
    let alphas = multi_indices(p.dim, max_degree);
    let mut moments: BTreeMap<Vec<u32>, Rational> = alphas.iter().map(|a| (a.clone(), Rational::zero())).collect();
    for s in p.triangulate() {
        let vol = s.volume();
        for a in &alphas {
            *moments.get_mut(a).unwrap() += simplex_integral_with_measure(&s.vertices, &vol, a);
        }
    }
    MomentTable { dim: p.dim, max_degree, moments }
}

fn unit(dim: usize, i: usize) -> Vec<u32> {
    let mut a = vec![0; dim];
    a[i] = 1;
    a
}

impl MomentTable {
    pub fn moment(&self, alpha: &[u32]) -> &Rational {
        &self.moments[alpha]
    }

    pub fn volume(&self) -> &Rational {
        self.moment(&vec![0; self.dim])
    }

    /// `∫ y_i`.
    pub fn first(&self, i: usize) -> &Rational {
        self.moment(&unit(self.dim, i))
    }

    /// `∫ y_i y_j`.
    pub fn second(&self, i: usize, j: usize) -> &Rational {
        let mut a = vec![0; self.dim];
        a[i] += 1;
        a[j] += 1;
        self.moment(&a)
    }

    pub fn barycenter(&self) -> RationalVector {
        (0..self.dim).map(|i| self.first(i) / self.volume()).collect()
    }

    /// `M_ab = ∫ y_a y_b` with `y_0 = 1`.
    pub fn gram(&self) -> Vec<Vec<Rational>> {
        let n = self.dim;
        (0..=n)
            .map(|a| {
                (0..=n)
                    .map(|b| match (a, b) {
                        (0, 0) => self.volume().clone(),
                        (0, j) | (j, 0) => self.first(j - 1).clone(),
                        (i, j) => self.second(i - 1, j - 1).clone(),
                    })
                    .collect()
            })
            .collect()
    }

    /// `(∫ y_a)_a` with `y_0 = 1`.
    pub fn first_moments(&self) -> RationalVector {
        let mut v = vec![self.volume().clone()];
        v.extend((0..self.dim).map(|i| self.first(i).clone()));
        v
    }

    pub fn integrate_affine(&self, f: &AffineFunction) -> Rational {
        f.coeffs.iter().zip(self.first_moments()).map(|(c, m)| c * m).sum()
    }

    pub fn integrate_product(&self, f: &AffineFunction, g: &AffineFunction) -> Rational {
        let m = self.gram();
        let mut acc = Rational::zero();
        for (a, fa) in f.coeffs.iter().enumerate() {
            if fa.is_zero() {
                continue;
            }
            for (b, gb) in g.coeffs.iter().enumerate() {
                acc += fa * gb * &m[a][b];
            }
        }
        acc
    }
}

/// Lattice frame of the hyperplane orthogonal to a primitive normal.
#[derive(Clone, Debug)]
pub struct SigmaFrame {
    /// Rows of `U^{-1}` for a unimodular `U` whose first column pairs to 1 with the normal.
    inverse: Vec<Vec<Rational>>,
}

impl SigmaFrame {
    pub fn new(normal: &[BigInt]) -> SigmaFrame {
        let u = crate::rational::unimodular_completion(normal);
        let n = normal.len();
        let ur: Vec<Vec<Rational>> = u
            .iter()
            .map(|r| r.iter().map(|x| Rational::from_integer(x.clone())).collect())
            .collect();
        let mut cols: Vec<Vec<Rational>> = Vec::with_capacity(n);
        for i in 0..n {
            let e: Vec<Rational> = (0..n).map(|j| int((i == j) as i64)).collect();
            cols.push(solve(&ur, &e).expect("unimodular matrix is invertible"));
        }
        let inverse = (0..n).map(|r| (0..n).map(|c| cols[c][r].clone()).collect()).collect();
        SigmaFrame { inverse }
    }

    /// `(n-1)!` times the lattice-normalised volume of an `(n-1)`-simplex in a translate of the hyperplane.
    pub fn simplex_det(&self, vertices: &[RationalVector]) -> Rational {
        let v0 = &vertices[0];
        let rows: Vec<Vec<Rational>> = vertices[1..]
            .iter()
            .map(|v| {
                let e = sub(v, v0);
                let c: Vec<Rational> = self.inverse.iter().map(|r| crate::rational::dot(r, &e)).collect();
                debug_assert!(c[0].is_zero(), "edge leaves the hyperplane");
                c[1..].to_vec()
            })
            .collect();
        determinant(&rows).abs()
    }

    pub fn simplex_measure(&self, vertices: &[RationalVector]) -> Rational {
        self.simplex_det(vertices) / Rational::from_integer(factorial(vertices.len() - 1))
    }
}

/// Lattice-normalised `(n-1)`-volumes of the facets of `delta`, in Fano-vertex order.
pub fn facet_sigma_measures(pair: &FanoPair) -> Vec<Rational> {
    let d = &pair.delta;
    (0..d.halfspaces.len())
        .map(|a| {
            let frame = SigmaFrame::new(&pair.fano_vertices[a]);
            d.facet_simplices(a)
                .iter()
                .map(|s| {
                    let pts: Vec<RationalVector> = s.iter().map(|&i| d.vertices[i].clone()).collect();
                    frame.simplex_measure(&pts)
                })
                .sum()
        })
        .collect()
}

/// `∫ f dσ` over the part of facet `a` of the moment polytope lying in the cell `cell`.
pub(crate) fn sigma_integral_on_cell(pair: &FanoPair, frame: &SigmaFrame, a: usize, cell: &Polytope, f: &AffineFunction) -> Rational {
    let hs = &pair.delta.halfspaces[a];
    let face: Vec<RationalVector> = cell.vertices.iter().filter(|v| hs.eval(v).is_zero()).cloned().collect();
    if face.len() < pair.dim() {
        return Rational::zero();
    }
    let emb = EmbeddedPolytope::from_points(pair.dim(), &face);
    if emb.dim() + 1 != pair.dim() {
        return Rational::zero();
    }
    let k = int(pair.dim() as i64);
    emb.triangulate()
        .iter()
        .map(|s| {
            let mean: Rational = s.iter().map(|v| f.eval(v)).sum::<Rational>() / &k;
            frame.simplex_measure(s) * mean
        })
        .sum()
}

/// `∫_{∂Δ} g dσ`.
pub fn boundary_integral(pair: &FanoPair, g: &PlConvexFunction) -> Result<Rational> {
    let regions = linearity_regions(pair, g)?;
    let mut total = Rational::zero();
    for a in 0..pair.delta.halfspaces.len() {
        let frame = SigmaFrame::new(&pair.fano_vertices[a]);
        for r in &regions.regions {
            total += sigma_integral_on_cell(pair, &frame, a, &r.cell, &g.pieces[r.piece]);
        }
    }
    Ok(total)
}

/// Moment table rendered with float mirrors, for diagnostics.
pub fn moment_summary(t: &MomentTable) -> Vec<(Vec<u32>, Rational, f64)> {
    t.moments.iter().map(|(a, v)| (a.clone(), v.clone(), to_f64(v))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn pts(v: &[&[i64]]) -> Vec<RationalVector> {
        v.iter().map(|p| p.iter().map(|&x| int(x)).collect()).collect()
    }

    #[test]
    fn unit_triangle_moments() {
        let s = Simplex { vertices: pts(&[&[0, 0], &[1, 0], &[0, 1]]) };
        assert_eq!(simplex_monomial_integral(&s, &[0, 0]), rat(1, 2));
        assert_eq!(simplex_monomial_integral(&s, &[1, 0]), rat(1, 6));
        assert_eq!(simplex_monomial_integral(&s, &[1, 1]), rat(1, 24));
        assert_eq!(simplex_monomial_integral(&s, &[2, 0]), rat(1, 12));
    }

    #[test]
    fn p2_moment_polytope_is_balanced() {
        let p = Polytope::from_vertices(2, &pts(&[&[-1, -1], &[2, -1], &[-1, 2]])).unwrap();
        let t = moment_table(&p, 2);
        assert_eq!(*t.volume(), rat(9, 2));
        assert_eq!(t.barycenter(), vec![int(0), int(0)]);
    }

    #[test]
    fn square_sigma_measure() {
        let pair = FanoPair::from_fano_vertices(2, &pts(&[&[1, 0], &[0, 1], &[-1, 0], &[0, -1]])).unwrap();
        let m = facet_sigma_measures(&pair);
        assert_eq!(m, vec![int(2); 4]);
    }

    #[test]
    fn sigma_measure_uses_lattice_length() {
        // facet y1 + y2 = 1 of the P2 triangle has Euclidean length 3*sqrt(2) and lattice length 3
        let pair = FanoPair::from_fano_vertices(2, &pts(&[&[1, 0], &[0, 1], &[-1, -1]])).unwrap();
        assert_eq!(facet_sigma_measures(&pair), vec![int(3); 3]);
    }

    #[test]
    fn multi_index_count() {
        assert_eq!(multi_indices(3, 2).len(), 10);
        assert_eq!(multi_indices(2, 3).len(), 10);
    }
}
