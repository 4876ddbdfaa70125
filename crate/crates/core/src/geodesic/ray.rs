//! The toric geodesic ray `v_t = v_0 + t g` and its Ding functional
//! `𝒟(t) = ∫_Δ v_t - |Δ| log ∫_{R^n} e^{-u_t}`.
//!
//! The gradient of `u_t` maps `R^n` onto Δ°. Sorting `x` by the face `G` of the
//! linearity decomposition of `g` that contains `∇u_t(x)` in its relative interior,
//! `x = ∇v_0(y) + t q` with `y ∈ G`, `q ∈ Q_G = conv{∇h_β : β active on G}`, and
//! `u_t(x) = ψ(y) - t c(q)` where `ψ = <y, ∇v_0> - v_0` and `c(q) = g(y) - <q, y>`.
//! The partition function therefore splits as
//! `Z(t) = Σ_G t^{n-k} W_G ∫_{Q_G} e^{t c(q)} dq` with t-independent weights
//! `W_G = ∫_G e^{-ψ} |det[∇²v_0 E_G | F_G]|`.

use num_traits::Signed;
use rayon::prelude::*;
use serde::Serialize;

use super::cubature::{exp_affine_integral, exponential_tail, integrate_box, integrate_simplex, pairwise_sum};
use super::potential::{maximize_on_slice, Domain, GuilleminPotential, SymplecticPotential};
use super::{check_dim, QuadratureConfig};
use crate::error::{Error, Result};
use crate::function::PlConvexFunction;
use crate::geometry::{EmbeddedPolytope, FanoPair, RationalVector};
use crate::invariants::linearity_regions;
use crate::linalg::{determinant, dot, orthonormal_basis};
use crate::rational::{dot as rdot, to_f64, Rational};

/// A face of the linearity decomposition whose relative interior meets Δ°.
#[derive(Clone, Debug)]
pub struct RayFace {
    /// Distinct pieces of `g` that are maximal on the relative interior.
    pub active: Vec<usize>,
    pub dim: usize,
    /// Relative interior point.
    pub point: Vec<f64>,
    /// Orthonormal bases of the face direction and of the dual cell `Q_G`.
    pub tangent: Vec<Vec<f64>>,
    pub normal: Vec<Vec<f64>>,
    /// Slope and constant term of one active piece.
    pub slope: Vec<f64>,
    pub constant: f64,
    /// Triangulation of `Q_G` with `c(q) - g(0)` at each vertex.
    pub dual_cells: Vec<(Vec<Vec<f64>>, Vec<f64>)>,
    /// `W_G` at the configured order and at half of it.
    pub weight: f64,
    pub weight_coarse: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PartitionValue {
    /// `log Z(t)`.
    pub log_z: f64,
    /// `|log Z - log Z_coarse|`, the change when the cubature order is halved.
    pub error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoxPartition {
    pub log_z: f64,
    /// Cubature error estimate plus tail bound, relative to `Z`.
    pub relative_error: f64,
    pub tail: f64,
    pub radius: f64,
    pub cells: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct DingValue {
    pub t: f64,
    pub value: f64,
    pub integral_v: f64,
    pub log_z: f64,
    pub error: f64,
}

pub struct GeodesicRay {
    pub pair: FanoPair,
    pub g: PlConvexFunction,
    pub base: GuilleminPotential,
    pub faces: Vec<RayFace>,
    pieces: Vec<(Vec<f64>, f64)>,
    g_origin: f64,
    pub volume: Rational,
    pub integral_g: Rational,
    pub integral_v0: f64,
    pub integral_v0_coarse: f64,
}

fn to_vec(v: &[Rational]) -> Vec<f64> {
    v.iter().map(to_f64).collect()
}

fn centroid(points: &[RationalVector]) -> RationalVector {
    let m = Rational::from_integer(points.len().into());
    (0..points[0].len()).map(|i| points.iter().map(|p| p[i].clone()).sum::<Rational>() / &m).collect()
}

fn chart_directions(e: &EmbeddedPolytope) -> Vec<Vec<f64>> {
    orthonormal_basis(&e.chart.basis.iter().map(|b| to_vec(b)).collect::<Vec<_>>())
}

impl GeodesicRay {
    pub fn new(pair: &FanoPair, g: &PlConvexFunction, cfg: &QuadratureConfig) -> Result<GeodesicRay> {
        let n = pair.dim();
        check_dim(n)?;
        let regions = linearity_regions(pair, g)?;
        let mut distinct: Vec<usize> = Vec::new();
        for (i, p) in g.pieces.iter().enumerate() {
            if !distinct.iter().any(|&j| g.pieces[j] == *p) {
                distinct.push(i);
            }
        }
        let cell_pieces: Vec<usize> = regions.regions.iter().map(|r| r.piece).collect();
        if cell_pieces.len() > 16 {
            return Err(Error::InvalidInput("too many linearity regions for the face decomposition".into()));
        }
        let g0 = g.at_origin();
        let base = GuilleminPotential::new(Domain::from_polytope(&pair.delta));

        let mut faces = Vec::new();
        let mut seen: Vec<Vec<usize>> = Vec::new();
        for mask in 1u32..(1 << cell_pieces.len()) {
            let subset: Vec<usize> = (0..cell_pieces.len()).filter(|i| mask >> i & 1 == 1).collect();
            let first = &regions.regions[subset[0]];
            let h0 = &g.pieces[first.piece];
            let mut cell = Some(EmbeddedPolytope::from_polytope(&first.cell));
            for &i in &subset[1..] {
                let Some(hs) = g.pieces[cell_pieces[i]].sub(h0).nonneg_halfspace() else {
                    cell = None;
                    break;
                };
                cell = cell.and_then(|c| c.clip(&hs));
            }
            let Some(cell) = cell else { continue };
            let yc = centroid(&cell.vertices());
            if !pair.delta.halfspaces.iter().all(|h| h.eval(&yc).is_positive()) {
                continue;
            }
            let gy = g.eval(&yc);
            let active: Vec<usize> = distinct.iter().copied().filter(|&j| g.pieces[j].eval(&yc) == gy).collect();
            let active_cells: Vec<usize> =
                (0..cell_pieces.len()).filter(|&i| g.pieces[cell_pieces[i]].eval(&yc) == gy).collect();
            if active_cells != subset || seen.contains(&active) {
                continue;
            }
            seen.push(active.clone());
            let slopes: Vec<RationalVector> = active.iter().map(|&j| g.pieces[j].slope().to_vec()).collect();
            let dual = EmbeddedPolytope::from_points(n, &slopes);
            if dual.dim() + cell.dim() != n {
                return Err(Error::Consistency(format!(
                    "face of dimension {} has a dual cell of dimension {}",
                    cell.dim(),
                    dual.dim()
                )));
            }
            let dual_cells = dual
                .triangulate()
                .into_iter()
                .map(|s| {
                    let c: Vec<f64> = s.iter().map(|q| to_f64(&(&gy - rdot(q, &yc) - &g0))).collect();
                    (s.iter().map(|q| to_vec(q)).collect(), c)
                })
                .collect();
            let simplices: Vec<Vec<Vec<f64>>> =
                cell.triangulate().iter().map(|s| s.iter().map(|p| to_vec(p)).collect()).collect();
            let mut face = RayFace {
                active,
                dim: cell.dim(),
                point: to_vec(&yc),
                tangent: chart_directions(&cell),
                normal: chart_directions(&dual),
                slope: to_vec(h0.slope()),
                constant: to_f64(h0.constant()),
                dual_cells,
                weight: 0.0,
                weight_coarse: 0.0,
            };
            (face.weight, face.weight_coarse) = face_weights(&base, &face, &simplices, cfg.order);
            faces.push(face);
        }
        if faces.iter().all(|f| f.dim != n) {
            return Err(Error::Consistency("no full-dimensional cell in the face decomposition".into()));
        }

        let v0 = |y: &[f64]| base.value(y);
        let integral_v0 = pairwise_sum(
            &base.domain.simplices.par_iter().map(|s| integrate_simplex(s, cfg.potential_order, v0)).collect::<Vec<_>>(),
        );
        let integral_v0_coarse = pairwise_sum(
            &base
                .domain
                .simplices
                .par_iter()
                .map(|s| integrate_simplex(s, cfg.potential_order / 2, v0))
                .collect::<Vec<_>>(),
        );
        let pieces = distinct.iter().map(|&j| (to_vec(g.pieces[j].slope()), to_f64(g.pieces[j].constant()))).collect();
        Ok(GeodesicRay {
            pair: pair.clone(),
            g: g.clone(),
            base,
            faces,
            pieces,
            g_origin: to_f64(&g0),
            volume: pair.delta.volume(),
            integral_g: regions.integral(g),
            integral_v0,
            integral_v0_coarse,
        })
    }

    pub fn dim(&self) -> usize {
        self.pair.dim()
    }

    fn g_f64(&self, y: &[f64]) -> f64 {
        self.pieces.iter().map(|(s, c)| dot(s, y) + c).fold(f64::NEG_INFINITY, f64::max)
    }

    /// `v_t(y) = v_0(y) + t g(y)`.
    pub fn potential_value(&self, t: f64, y: &[f64]) -> f64 {
        self.base.value(y) + t * self.g_f64(y)
    }

    fn shifted_sum(&self, t: f64, coarse: bool) -> f64 {
        let n = self.dim();
        let terms: Vec<f64> = self
            .faces
            .iter()
            .map(|f| {
                let w = if coarse { f.weight_coarse } else { f.weight };
                let q: f64 = f
                    .dual_cells
                    .iter()
                    .map(|(verts, c)| {
                        let scaled: Vec<f64> = c.iter().map(|ci| t * ci).collect();
                        exp_affine_integral(verts, &scaled)
                    })
                    .sum();
                t.powi((n - f.dim) as i32) * w * q
            })
            .collect();
        pairwise_sum(&terms)
    }

    /// `log Z(t)` from the face decomposition.
    pub fn partition_function(&self, t: f64) -> Result<PartitionValue> {
        if !(t >= 0.0) {
            return Err(Error::InvalidInput(format!("ray parameter must be non-negative, got {t}")));
        }
        let fine = self.shifted_sum(t, false);
        let coarse = self.shifted_sum(t, true);
        if !(fine > 0.0 && fine.is_finite()) {
            return Err(Error::Quadrature(format!("partition function evaluated to {fine} at t = {t}")));
        }
        Ok(PartitionValue { log_z: t * self.g_origin + fine.ln(), error: (fine.ln() - coarse.ln()).abs() })
    }

    /// `𝒟(u_t)`, with the error estimate from halving every cubature order.
    pub fn ding(&self, t: f64) -> Result<DingValue> {
        let z = self.partition_function(t)?;
        let vol = to_f64(&self.volume);
        let integral_v = self.integral_v0 + t * to_f64(&self.integral_g);
        Ok(DingValue {
            t,
            value: integral_v - vol * z.log_z,
            integral_v,
            log_z: z.log_z,
            error: vol * z.error + (self.integral_v0 - self.integral_v0_coarse).abs(),
        })
    }

    /// `u_t(x)`: the restricted maximum over each face, the largest of which is the true one.
    pub fn legendre(&self, t: f64, x: &[f64]) -> Result<f64> {
        if t == 0.0 {
            let n = self.dim();
            let id: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
            return Ok(maximize_on_slice(&self.base, x, &vec![0.0; n], &id)?.value);
        }
        let mut best = f64::NEG_INFINITY;
        for f in &self.faces {
            let w: Vec<f64> = x.iter().zip(&f.slope).map(|(a, s)| a - t * s).collect();
            let p = maximize_on_slice(&self.base, &w, &f.point, &f.tangent)?;
            let y = &p.argmax;
            best = best.max(dot(x, y) - self.potential_value(t, y));
        }
        Ok(best)
    }

    /// `log Z(t)` by adaptive cubature of `e^{-u_t}` over a box, with the tail outside bounded by
    /// `u_t(x) >= ρ|x| - max_Δ v_t`.
    pub fn partition_function_box(&self, t: f64, cfg: &QuadratureConfig) -> Result<BoxPartition> {
        let n = self.dim();
        let c = self
            .base
            .domain
            .vertices
            .iter()
            .map(|y| self.potential_value(t, y))
            .fold(f64::NEG_INFINITY, f64::max);
        let shift = t * self.g_origin;
        let rho = self.base.domain.inradius_at_origin();
        let corners: Vec<(Vec<f64>, f64)> =
            self.base.domain.vertices.iter().map(|y| (y.clone(), self.potential_value(t, y))).collect();
        let f = |x: &[f64]| envelope_guard(self.legendre(t, x), &corners, x, shift);
        box_partition(n, rho, c - shift, shift, cfg, f)
    }
}

/// Integrand below which a failed Legendre solve is treated as zero.
const NEGLIGIBLE: f64 = 1e-14;

/// `e^{-u(x) - shift}`, falling back to zero when the maximiser is lost in rounding next to the
/// boundary and the vertex envelope `e^{-u} <= min_v e^{v(v) - <x, v>}` shows the value is negligible.
fn envelope_guard(u: Result<f64>, corners: &[(Vec<f64>, f64)], x: &[f64], shift: f64) -> Result<f64> {
    match u {
        Ok(u) => Ok((-u - shift).exp()),
        Err(e) => {
            let lower = corners.iter().map(|(y, vy)| dot(x, y) - vy).fold(f64::NEG_INFINITY, f64::max);
            if (-lower - shift).exp() <= NEGLIGIBLE {
                Ok(0.0)
            } else {
                Err(e)
            }
        }
    }
}

/// `W_G` at `order` and `order / 2`.
fn face_weights(base: &GuilleminPotential, face: &RayFace, simplices: &[Vec<Vec<f64>>], order: usize) -> (f64, f64) {
    let n = face.point.len();
    let density = |y: &[f64]| {
        let h = base.hessian(y);
        let mut cols: Vec<Vec<f64>> = face.tangent.iter().map(|e| h.iter().map(|row| dot(row, e)).collect()).collect();
        cols.extend(face.normal.iter().cloned());
        let m: Vec<Vec<f64>> = (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
        base.exp_neg_psi(y) * determinant(&m).abs()
    };
    let at = |ord: usize| -> f64 {
        pairwise_sum(&simplices.par_iter().map(|s| integrate_simplex(s, ord, density)).collect::<Vec<_>>())
    };
    (at(order), at((order / 2).max(1)))
}

/// Box route for `log ∫ e^{-u}`: integrates `e^{-u - shift}` and grows the radius until the tail
/// bound `∫_{|x|>R} e^{c - ρ|x|}` is below the tolerance.
pub(crate) fn box_partition<F>(n: usize, rho: f64, c: f64, shift: f64, cfg: &QuadratureConfig, f: F) -> Result<BoxPartition>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    if !(rho > 0.0) {
        return Err(Error::InvalidInput("the origin must be interior for the tail bound".into()));
    }
    // start where the tail drops below the tolerance relative to a unit-size integral
    let mut radius = ((c - cfg.rel_tol.ln()) / rho).max(1.0);
    while exponential_tail(n, rho, c, radius) > cfg.rel_tol * 1e-3 {
        radius *= 1.1;
    }
    for _ in 0..8 {
        let r = integrate_box(n, radius, cfg.rel_tol, 0.0, cfg.max_cells, &f)?;
        let tail = exponential_tail(n, rho, c, radius);
        let relative_error = (r.error + tail) / r.value;
        if tail <= cfg.rel_tol * r.value {
            return Ok(BoxPartition {
                log_z: shift + r.value.ln(),
                relative_error,
                tail: tail / r.value,
                radius,
                cells: r.cells,
            });
        }
        radius += (tail / (cfg.rel_tol * r.value)).ln() / rho + 1.0;
    }
    Err(Error::Quadrature(format!("tail bound still above tolerance at radius {radius:.1}")))
}

/// Ding functional of a smooth potential: `∫_Δ v - |Δ| log ∫ e^{-u}` with `u` its Legendre transform.
pub fn ding_functional(v: &dyn SymplecticPotential, cfg: &QuadratureConfig) -> Result<DingValue> {
    let n = v.dim();
    check_dim(n)?;
    let d = v.domain();
    let integral = |ord: usize| {
        pairwise_sum(&d.simplices.par_iter().map(|s| integrate_simplex(s, ord, |y| v.value(y))).collect::<Vec<_>>())
    };
    let integral_v = integral(cfg.potential_order);
    let coarse = integral(cfg.potential_order / 2);
    let c = d.vertices.iter().map(|y| v.value(y)).fold(f64::NEG_INFINITY, f64::max);
    // min u = -v(0), so e^{-u - v(0)} <= 1
    let shift = v.value(&vec![0.0; n]);
    let rho = d.inradius_at_origin();
    let corners: Vec<(Vec<f64>, f64)> = d.vertices.iter().map(|y| (y.clone(), v.value(y))).collect();
    let z = box_partition(n, rho, c - shift, shift, cfg, |x: &[f64]| {
        envelope_guard(super::potential::legendre_dual(v, x).map(|p| p.value), &corners, x, shift)
    })?;
    Ok(DingValue {
        t: 0.0,
        value: integral_v - d.volume * z.log_z,
        integral_v,
        log_z: z.log_z,
        error: (integral_v - coarse).abs() + d.volume * z.relative_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::AffineFunction;
    use crate::geometry::FanoPair;
    use crate::rational::int;

    fn square() -> FanoPair {
        let pts: Vec<RationalVector> = [[1, 0], [0, 1], [-1, 0], [0, -1]].iter().map(|p| vec![int(p[0]), int(p[1])]).collect();
        FanoPair::from_fano_vertices(2, &pts).unwrap()
    }

    fn p2() -> FanoPair {
        let pts: Vec<RationalVector> = [[1, 0], [0, 1], [-1, -1]].iter().map(|p| vec![int(p[0]), int(p[1])]).collect();
        FanoPair::from_fano_vertices(2, &pts).unwrap()
    }

    fn pl(pieces: &[&[i64]]) -> PlConvexFunction {
        PlConvexFunction::new(2, pieces.iter().map(|c| AffineFunction::from_ints(c)).collect()).unwrap()
    }

    #[test]
    fn square_partition_function_is_linear_in_t() {
        let ray = GeodesicRay::new(&square(), &pl(&[&[0, 0, 0], &[0, 1, 0]]), &QuadratureConfig::default()).unwrap();
        assert_eq!(ray.faces.len(), 3);
        for t in [0.0, 0.5, 1.0, 7.0, 50.0] {
            let z = ray.partition_function(t).unwrap();
            let exact = (4.0 * (t + 4.0)).ln();
            assert!((z.log_z - exact).abs() < 1e-12, "t={t}: {} vs {exact}", z.log_z);
        }
    }

    #[test]
    fn box_route_agrees_with_faces() {
        let cfg = QuadratureConfig { rel_tol: 1e-7, ..QuadratureConfig::default() };
        for (pair, g) in [(square(), pl(&[&[0, 0, 0], &[0, 1, 0]])), (p2(), pl(&[&[0, 1, 0], &[0, 0, 1], &[0, 0, 0]]))] {
            let ray = GeodesicRay::new(&pair, &g, &cfg).unwrap();
            for t in [0.0, 1.0] {
                let faces = ray.partition_function(t).unwrap().log_z;
                let boxed = ray.partition_function_box(t, &cfg).unwrap();
                assert!((faces - boxed.log_z).abs() < 1e-6, "t={t}: {faces} vs {boxed:?}");
                assert!(boxed.tail <= cfg.rel_tol);
            }
        }
    }

    #[test]
    fn legendre_of_the_ray_at_t_zero_matches_the_base() {
        let ray = GeodesicRay::new(&p2(), &pl(&[&[0, 1, 0], &[0, 0, 1], &[0, 0, 0]]), &QuadratureConfig::default()).unwrap();
        let x = [0.7, -2.0];
        let direct = super::super::potential::legendre_dual(&ray.base, &x).unwrap().value;
        assert!((ray.legendre(0.0, &x).unwrap() - direct).abs() < 1e-12);
        // small t: u_t is within t * max|g| of u_0
        let u = ray.legendre(1e-3, &x).unwrap();
        assert!((u - direct).abs() <= 1e-3 * 2.0 + 1e-12);
    }

    #[test]
    fn ding_is_invariant_under_adding_constants() {
        struct Shifted(GuilleminPotential, f64);
        impl SymplecticPotential for Shifted {
            fn tag(&self) -> super::super::PotentialTag {
                self.0.tag()
            }
            fn domain(&self) -> &Domain {
                self.0.domain()
            }
            fn value(&self, y: &[f64]) -> f64 {
                self.0.value(y) + self.1
            }
            fn gradient(&self, y: &[f64]) -> Vec<f64> {
                self.0.gradient(y)
            }
            fn hessian(&self, y: &[f64]) -> Vec<Vec<f64>> {
                self.0.hessian(y)
            }
        }
        let cfg = QuadratureConfig { rel_tol: 1e-9, ..QuadratureConfig::default() };
        let base = GuilleminPotential::new(Domain::from_polytope(&p2().delta));
        let d0 = ding_functional(&Shifted(base.clone(), 0.0), &cfg).unwrap();
        let d1 = ding_functional(&Shifted(base.clone(), 1.7), &cfg).unwrap();
        assert!((d0.value - d1.value).abs() < 1e-7, "{d0:?} {d1:?}");
        let ray = GeodesicRay::new(&p2(), &pl(&[&[0, 0, 0]]), &cfg).unwrap();
        assert!((ray.ding(0.0).unwrap().value - d0.value).abs() < 1e-6);
    }

    #[test]
    fn ding_error_estimate_bounds_a_resolution_change() {
        let g = pl(&[&[0, 1, 0], &[0, 0, 1], &[0, 0, 0]]);
        let coarse = QuadratureConfig { order: 12, potential_order: 32, ..QuadratureConfig::default() };
        let fine = QuadratureConfig::default();
        let a = GeodesicRay::new(&p2(), &g, &coarse).unwrap().ding(3.0).unwrap();
        let b = GeodesicRay::new(&p2(), &g, &fine).unwrap().ding(3.0).unwrap();
        assert!((a.value - b.value).abs() <= a.error, "{a:?} {b:?}");
    }
}
