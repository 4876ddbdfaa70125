//! Symplectic potentials on a polytope and their Legendre transforms.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Polytope;
use crate::linalg::{dot, solve};
use crate::rational::to_f64;

/// Float copy of a polytope: affine functions `l_α = <n_α, y> + o_α` positive on the interior,
/// its vertices and a triangulation.
#[derive(Clone, Debug)]
pub struct Domain {
    pub normals: Vec<Vec<f64>>,
    pub offsets: Vec<f64>,
    pub vertices: Vec<Vec<f64>>,
    pub simplices: Vec<Vec<Vec<f64>>>,
    pub volume: f64,
}

impl Domain {
    pub fn from_polytope(p: &Polytope) -> Domain {
        let conv = |v: &[crate::Rational]| v.iter().map(to_f64).collect::<Vec<f64>>();
        Domain {
            normals: p.halfspaces.iter().map(|h| conv(&h.normal)).collect(),
            offsets: p.halfspaces.iter().map(|h| to_f64(&h.offset)).collect(),
            vertices: p.vertices.iter().map(|v| conv(v)).collect(),
            simplices: p
                .triangulate()
                .iter()
                .map(|s| s.vertices.iter().map(|v| conv(v)).collect())
                .collect(),
            volume: to_f64(&p.volume()),
        }
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn slacks(&self, y: &[f64]) -> Vec<f64> {
        self.normals.iter().zip(&self.offsets).map(|(n, o)| dot(n, y) + o).collect()
    }

    pub fn is_interior(&self, y: &[f64]) -> bool {
        self.slacks(y).iter().all(|&s| s > 0.0)
    }

    /// Largest `s` with `y + s d` still in the closed domain.
    pub fn max_step(&self, y: &[f64], d: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        for (n, o) in self.normals.iter().zip(&self.offsets) {
            let rate = dot(n, d);
            if rate < 0.0 {
                best = best.min(-(dot(n, y) + o) / rate);
            }
        }
        best
    }

    pub fn centroid(&self) -> Vec<f64> {
        let n = self.dim();
        let m = self.vertices.len() as f64;
        (0..n).map(|i| self.vertices.iter().map(|v| v[i]).sum::<f64>() / m).collect()
    }

    /// Distance from the origin to the boundary, `min_α o_α / |n_α|`.
    pub fn inradius_at_origin(&self) -> f64 {
        self.normals
            .iter()
            .zip(&self.offsets)
            .map(|(n, o)| o / dot(n, n).sqrt())
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialTag {
    Guillemin,
    GuilleminPlusTg,
    ClosedFormCp2,
    Quadratic,
}

/// Strictly convex function on the interior of a polytope.
pub trait SymplecticPotential: Sync {
    fn tag(&self) -> PotentialTag;
    fn domain(&self) -> &Domain;
    /// Value on the closed polytope (continuous extension on the boundary).
    fn value(&self, y: &[f64]) -> f64;
    fn gradient(&self, y: &[f64]) -> Vec<f64>;
    fn hessian(&self, y: &[f64]) -> Vec<Vec<f64>>;

    fn dim(&self) -> usize {
        self.domain().dim()
    }

    /// `exp(v - <y, ∇v>)`, the Monge-Ampère density factor.
    fn exp_neg_psi(&self, y: &[f64]) -> f64 {
        (self.value(y) - dot(y, &self.gradient(y))).exp()
    }
}

fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// `v_0 = Σ_α l_α log l_α`.
#[derive(Clone, Debug)]
pub struct GuilleminPotential {
    pub domain: Domain,
}

impl GuilleminPotential {
    pub fn new(domain: Domain) -> Self {
        GuilleminPotential { domain }
    }
}

impl SymplecticPotential for GuilleminPotential {
    fn tag(&self) -> PotentialTag {
        PotentialTag::Guillemin
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn value(&self, y: &[f64]) -> f64 {
        self.domain.slacks(y).into_iter().map(xlogx).sum()
    }

    fn gradient(&self, y: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; y.len()];
        for (n, l) in self.domain.normals.iter().zip(self.domain.slacks(y)) {
            let c = l.ln() + 1.0;
            for (gi, ni) in g.iter_mut().zip(n) {
                *gi += c * ni;
            }
        }
        g
    }

    fn hessian(&self, y: &[f64]) -> Vec<Vec<f64>> {
        let d = y.len();
        let mut h = vec![vec![0.0; d]; d];
        for (n, l) in self.domain.normals.iter().zip(self.domain.slacks(y)) {
            for i in 0..d {
                for j in 0..d {
                    h[i][j] += n[i] * n[j] / l;
                }
            }
        }
        h
    }

    fn exp_neg_psi(&self, y: &[f64]) -> f64 {
        // y·∇v - v = Σ (l - o)(log l + 1) - l log l; with o = 1 this is Σ l - 1 - log l
        let mut prod = 1.0;
        let mut expo = 0.0;
        for (o, l) in self.domain.offsets.iter().zip(self.domain.slacks(y)) {
            prod *= l.powf(*o);
            expo += o - l;
        }
        prod * expo.exp()
    }
}

/// `½|y|²` restricted to a polytope.
#[derive(Clone, Debug)]
pub struct QuadraticPotential {
    pub domain: Domain,
}

impl SymplecticPotential for QuadraticPotential {
    fn tag(&self) -> PotentialTag {
        PotentialTag::Quadratic
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn value(&self, y: &[f64]) -> f64 {
        0.5 * dot(y, y)
    }

    fn gradient(&self, y: &[f64]) -> Vec<f64> {
        y.to_vec()
    }

    fn hessian(&self, y: &[f64]) -> Vec<Vec<f64>> {
        (0..y.len()).map(|i| (0..y.len()).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LegendrePoint {
    /// `u(x)`.
    pub value: f64,
    /// The maximiser `y*`.
    pub argmax: Vec<f64>,
    pub iterations: usize,
}

pub const LEGENDRE_MAX_ITER: usize = 200;

/// Maximises `y ↦ <w, y> - v(y)` over `(origin + span(basis)) ∩ Δ°` by damped Newton ascent that
/// never leaves the interior. `origin` must be interior.
pub fn maximize_on_slice(v: &dyn SymplecticPotential, w: &[f64], origin: &[f64], basis: &[Vec<f64>]) -> Result<LegendrePoint> {
    let objective = |y: &[f64]| dot(w, y) - v.value(y);
    let k = basis.len();
    let mut y = origin.to_vec();
    let mut f = objective(&y);
    if k == 0 {
        return Ok(LegendrePoint { value: f, argmax: y, iterations: 0 });
    }
    let mut history = Vec::new();
    let mut polish_prev: Option<f64> = None;
    for it in 0..LEGENDRE_MAX_ITER {
        let grad: Vec<f64> = w.iter().zip(v.gradient(&y)).map(|(a, b)| a - b).collect();
        let hess = v.hessian(&y);
        let gz: Vec<f64> = basis.iter().map(|e| dot(e, &grad)).collect();
        let hz: Vec<Vec<f64>> = basis
            .iter()
            .map(|ei| {
                let he: Vec<f64> = hess.iter().map(|row| dot(row, ei)).collect();
                basis.iter().map(|ej| dot(ej, &he)).collect()
            })
            .collect();
        let dz = solve(&hz, &gz).ok_or_else(|| Error::Quadrature("singular Hessian in Legendre transform".into()))?;
        let decrement = dot(&gz, &dz);
        history.push(decrement);
        if decrement <= 1e-20 * (1.0 + f.abs()) {
            return Ok(LegendrePoint { value: f, argmax: y, iterations: it });
        }
        let mut dy = vec![0.0; y.len()];
        for (zj, e) in dz.iter().zip(basis) {
            for (d, ei) in dy.iter_mut().zip(e) {
                *d += zj * ei;
            }
        }
        let room = v.domain().max_step(&y, &dy);
        // Near the maximum, value comparisons drown in rounding, so take plain Newton
        // steps while the decrement keeps shrinking.
        if decrement <= 1e-10 * (1.0 + f.abs()) && room > 1.0 {
            if polish_prev.is_some_and(|p| decrement >= p) {
                return Ok(LegendrePoint { value: f, argmax: y, iterations: it });
            }
            polish_prev = Some(decrement);
            y.iter_mut().zip(&dy).for_each(|(a, b)| *a += b);
            f = objective(&y);
            continue;
        }
        let mut step = (0.95 * room).min(1.0);
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = y.iter().zip(&dy).map(|(a, b)| a + step * b).collect();
            let ft = objective(&trial);
            if ft >= f + 1e-4 * step * decrement {
                accepted = Some((trial, ft));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((trial, ft)) => {
                let stalled = ft <= f;
                y = trial;
                f = ft;
                // no measurable increase: the remaining gap is below rounding level
                if stalled && decrement <= 1e-12 * (1.0 + f.abs()) {
                    return Ok(LegendrePoint { value: f, argmax: y, iterations: it + 1 });
                }
            }
            None if decrement <= 1e-12 * (1.0 + f.abs()) => {
                return Ok(LegendrePoint { value: f, argmax: y, iterations: it });
            }
            None => {
                return Err(Error::NonConvergence {
                    solver: "legendre".into(),
                    iterations: it,
                    residual: decrement,
                    history,
                })
            }
        }
    }
    Err(Error::NonConvergence {
        solver: "legendre".into(),
        iterations: LEGENDRE_MAX_ITER,
        residual: *history.last().unwrap_or(&f64::NAN),
        history,
    })
}

/// `u(x) = sup_{y ∈ Δ} <x, y> - v(y)` with its maximiser.
pub fn legendre_dual(v: &dyn SymplecticPotential, x: &[f64]) -> Result<LegendrePoint> {
    let n = v.dim();
    if x.len() != n {
        return Err(Error::InvalidInput(format!("point has dimension {}, potential has {n}", x.len())));
    }
    let basis: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let start = if v.domain().is_interior(&vec![0.0; n]) { vec![0.0; n] } else { v.domain().centroid() };
    maximize_on_slice(v, x, &start, &basis)
}
