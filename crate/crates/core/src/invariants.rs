//! Ding and Donaldson-Futaki type invariants of piecewise-linear convex test functions.
//!
//! For `g` convex PL on the moment polytope Δ:
//! - `I(g) = -g(0) + ⨍ g`
//! - `I_A(g) = -g(0) + ∫ g A`
//! - `L(g) = (∫_∂ g dσ - n ∫ g) / |Δ|`
//! - `L_θ(g) = (∫_∂ g dσ - (n+1) ∫ g + |Δ| ∫ g ℓ) / |Δ|`, with ℓ the Ricci affine function.
//!
//! `L(g) - I(g) = (n+1)/|Δ| ∫ (ḡ - g)` where `ḡ` is the radially affine
//! interpolation of `g` between the origin and the boundary.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{invalid, Error, Result};
use crate::function::{AffineFunction, PlConvexFunction};
use crate::geometry::{ClipResult, FanoPair, HalfSpace, Polytope, RationalVector, Simplex};
use crate::moments::{moment_table, sigma_integral_on_cell, MomentTable, SigmaFrame};
use crate::rational::{factorial, int, lcm_denominators, Rational};

/// Closed cell of the moment polytope on which piece `piece` attains the maximum.
#[derive(Clone, Debug)]
pub struct Region {
    pub piece: usize,
    pub cell: Polytope,
    pub table: MomentTable,
}

#[derive(Clone, Debug)]
pub struct LinearityRegions {
    pub regions: Vec<Region>,
    /// Pieces whose cell is empty or lower-dimensional (including exact duplicates).
    pub dropped: Vec<usize>,
}

impl LinearityRegions {
    pub fn integral(&self, g: &PlConvexFunction) -> Rational {
        self.regions.iter().map(|r| r.table.integrate_affine(&g.pieces[r.piece])).sum()
    }
}

/// `{ y : h_b(y) >= h_c(y) }` intersected with `p`, or `None` if that is not full-dimensional.
fn clip_by_difference(p: &Polytope, hb: &AffineFunction, hc: &AffineFunction) -> Option<Polytope> {
    let diff = hb.sub(hc);
    match diff.nonneg_halfspace() {
        None => (!diff.constant().is_negative()).then(|| p.clone()),
        Some(hs) => p.clip(&hs).full(),
    }
}

/// Cells of the linearity decomposition of `g` restricted to `Δ`.
pub fn linearity_regions(pair: &FanoPair, g: &PlConvexFunction) -> Result<LinearityRegions> {
    if g.dim() != pair.dim() {
        return invalid("test function dimension does not match the polytope");
    }
    let mut regions = Vec::new();
    let mut dropped = Vec::new();
    'piece: for (b, hb) in g.pieces.iter().enumerate() {
        if g.pieces[..b].contains(hb) {
            dropped.push(b);
            continue;
        }
        let mut cell = pair.delta.clone();
        for (c, hc) in g.pieces.iter().enumerate() {
            if c == b || hc == hb {
                continue;
            }
            match clip_by_difference(&cell, hb, hc) {
                Some(next) => cell = next,
                None => {
                    dropped.push(b);
                    continue 'piece;
                }
            }
        }
        let table = moment_table(&cell, 2);
        regions.push(Region { piece: b, cell, table });
    }
    Ok(LinearityRegions { regions, dropped })
}

/// `I(g) = -g(0) + (1/|Δ|) ∫ g`.
pub fn ding_invariant(pair: &FanoPair, g: &PlConvexFunction) -> Result<Rational> {
    let regions = linearity_regions(pair, g)?;
    Ok(ding_from_regions(g, &regions))
}

fn ding_from_regions(g: &PlConvexFunction, regions: &LinearityRegions) -> Rational {
    let vol: Rational = regions.regions.iter().map(|r| r.table.volume().clone()).sum();
    regions.integral(g) / vol - g.at_origin()
}

/// Weight in `I_A`.
#[derive(Clone, Debug)]
pub enum Weight {
    Affine(AffineFunction),
    Pl(PlConvexFunction),
}

/// `I_A(g) = -g(0) + ∫ g A`.
pub fn weighted_invariant(pair: &FanoPair, g: &PlConvexFunction, weight: &Weight) -> Result<Rational> {
    let regions = linearity_regions(pair, g)?;
    Ok(integral_against(pair, g, &regions, weight)? - g.at_origin())
}

/// `∫ g A` over `Δ`.
pub(crate) fn integral_against(pair: &FanoPair, g: &PlConvexFunction, regions: &LinearityRegions, weight: &Weight) -> Result<Rational> {
    match weight {
        Weight::Affine(a) => Ok(regions
            .regions
            .iter()
            .map(|r| r.table.integrate_product(&g.pieces[r.piece], a))
            .sum()),
        Weight::Pl(a) => {
            let a_regions = linearity_regions(pair, a)?;
            let mut acc = Rational::zero();
            for rg in &regions.regions {
                for ra in &a_regions.regions {
                    let mut cell = Some(rg.cell.clone());
                    for hs in &ra.cell.halfspaces {
                        cell = match cell.as_ref().map(|c| c.clip(hs)) {
                            Some(ClipResult::Full(p)) => Some(p),
                            _ => None,
                        };
                        if cell.is_none() {
                            break;
                        }
                    }
                    if let Some(c) = cell {
                        let t = moment_table(&c, 2);
                        acc += t.integrate_product(&g.pieces[rg.piece], &a.pieces[ra.piece]);
                    }
                }
            }
            Ok(acc)
        }
    }
}

/// `∫ f^2` over `Δ`.
pub fn l2_norm_sq(pair: &FanoPair, f: &PlConvexFunction) -> Result<Rational> {
    let regions = linearity_regions(pair, f)?;
    Ok(regions
        .regions
        .iter()
        .map(|r| {
            let p = &f.pieces[r.piece];
            r.table.integrate_product(p, p)
        })
        .sum())
}

fn boundary_from_regions(pair: &FanoPair, g: &PlConvexFunction, regions: &LinearityRegions) -> Rational {
    let mut total = Rational::zero();
    for a in 0..pair.delta.halfspaces.len() {
        let frame = SigmaFrame::new(&pair.fano_vertices[a]);
        for r in &regions.regions {
            total += sigma_integral_on_cell(pair, &frame, a, &r.cell, &g.pieces[r.piece]);
        }
    }
    total
}

/// `L(g) = (∫_∂ g dσ - n ∫ g) / |Δ|`.
pub fn df_invariant(pair: &FanoPair, g: &PlConvexFunction) -> Result<Rational> {
    let regions = linearity_regions(pair, g)?;
    let vol = pair_volume(&regions);
    let n = int(pair.dim() as i64);
    Ok((boundary_from_regions(pair, g, &regions) - n * regions.integral(g)) / vol)
}

fn pair_volume(regions: &LinearityRegions) -> Rational {
    regions.regions.iter().map(|r| r.table.volume().clone()).sum()
}

/// `∫ ḡ` computed by integrating over the cones from the origin over boundary cells.
fn radial_interpolant_integral(pair: &FanoPair, g: &PlConvexFunction, regions: &LinearityRegions) -> Rational {
    let n = pair.dim();
    let g0 = g.at_origin();
    let origin: RationalVector = vec![Rational::zero(); n];
    let mut total = Rational::zero();
    for (a, hs) in pair.delta.halfspaces.iter().enumerate() {
        let p = &pair.delta.halfspaces[a].normal;
        for r in &regions.regions {
            let piece = &g.pieces[r.piece];
            let face: Vec<RationalVector> = r.cell.vertices.iter().filter(|v| hs.eval(v).is_zero()).cloned().collect();
            if face.len() < n {
                continue;
            }
            let emb = crate::geometry::EmbeddedPolytope::from_points(n, &face);
            if emb.dim() + 1 != n {
                continue;
            }
            // On the cone over this face, ḡ(y) = g0 + s·y + (g0 - c)<p, y>.
            let shift = &g0 - piece.constant();
            let mut coeffs = vec![g0.clone()];
            coeffs.extend(piece.slope().iter().zip(p).map(|(s, pi)| s + &shift * pi));
            let bar = AffineFunction::new(coeffs);
            for s in emb.triangulate() {
                let mut verts = vec![origin.clone()];
                verts.extend(s);
                let mean: Rational = verts.iter().map(|v| bar.eval(v)).sum::<Rational>() / int(n as i64 + 1);
                total += Simplex { vertices: verts }.volume() * mean;
            }
        }
    }
    total
}

/// The two evaluations of `L(g) - I(g)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GapReport {
    /// `L(g) - I(g)` from the boundary measure.
    pub difference: Rational,
    /// `(n+1)/|Δ| ∫ (ḡ - g)` from cone integration.
    pub cone: Rational,
}

/// Computes `L(g) - I(g)` two ways and fails with a consistency error if they disagree.
pub fn df_ding_gap(pair: &FanoPair, g: &PlConvexFunction) -> Result<GapReport> {
    let regions = linearity_regions(pair, g)?;
    let vol = pair_volume(&regions);
    let n = int(pair.dim() as i64);
    let int_g = regions.integral(g);
    let l = (boundary_from_regions(pair, g, &regions) - &n * &int_g) / &vol;
    let i = &int_g / &vol - g.at_origin();
    let difference = l - i;
    let bar = radial_interpolant_integral(pair, g, &regions);
    let cone = (n + Rational::one()) * (bar - int_g) / vol;
    if difference != cone {
        return Err(Error::Consistency(format!(
            "L - I = {difference} but cone integration gives {cone}"
        )));
    }
    Ok(GapReport { difference, cone })
}

/// Data of the log-canonical-threshold evaluation of the Ding invariant.
#[derive(Clone, Debug, PartialEq)]
pub struct LctReport {
    pub ding: Rational,
    pub lct: Rational,
    pub l_cap: BigInt,
    pub r: BigInt,
    /// Volume of `{ (y, z) : y in Δ, 0 <= z <= L - g(y) }`.
    pub box_volume: Rational,
    /// Top self-intersection `L̄^{n+1} = (n+1)! r^{n+1} vol`.
    pub top_intersection: Rational,
}

/// Ding invariant through the test-configuration model: intersection number of the
/// polarisation plus the log canonical threshold of the boundary divisor.
///
/// `l_cap` must exceed `max g` on Δ and `r` must make the scaled polytope integral;
/// defaults are `⌈max g⌉ + 1` and the lcm of the relevant denominators.
pub fn ding_via_lct(pair: &FanoPair, g: &PlConvexFunction, l_cap: Option<BigInt>, r: Option<BigInt>) -> Result<LctReport> {
    let n = pair.dim();
    if n + 1 > crate::geometry::DIM_CAP {
        return Err(Error::DimensionCap { dim: n + 1, cap: crate::geometry::DIM_CAP });
    }
    let regions = linearity_regions(pair, g)?;
    let max_g = g.max_over(&pair.delta.vertices);
    let l_cap = l_cap.unwrap_or_else(|| max_g.ceil().to_integer() + BigInt::one());
    let l_rat = Rational::from_integer(l_cap.clone());
    if l_rat <= max_g {
        return invalid(format!("L = {l_cap} does not exceed max g = {max_g}"));
    }
    let mut hs: Vec<HalfSpace> = pair
        .delta
        .halfspaces
        .iter()
        .map(|h| {
            let mut nrm = h.normal.clone();
            nrm.push(Rational::zero());
            HalfSpace::new(nrm, h.offset.clone())
        })
        .collect();
    let mut up = vec![Rational::zero(); n];
    up.push(Rational::one());
    hs.push(HalfSpace::new(up, Rational::zero()));
    let live: Vec<&AffineFunction> = regions.regions.iter().map(|r| &g.pieces[r.piece]).collect();
    for p in &live {
        let mut nrm: Vec<Rational> = p.slope().iter().map(|s| -s).collect();
        nrm.push(-Rational::one());
        hs.push(HalfSpace::new(nrm, &l_rat - p.constant()));
    }
    let boxp = Polytope::from_halfspaces(n + 1, hs)?;
    let b0s: Vec<Rational> = live.iter().map(|p| p.constant().clone()).collect();
    let natural = lcm_denominators(b0s.iter().chain(boxp.vertices.iter().flatten()));
    let r = r.unwrap_or(natural.clone());
    if !r.is_positive() || !r.is_multiple_of(&natural) {
        return invalid(format!("r = {r} does not clear the denominators (need a multiple of {natural})"));
    }
    let box_volume = boxp.volume();
    let r_rat = Rational::from_integer(r.clone());
    let r_pow = num_traits::pow(r_rat.clone(), n + 1);
    let top_intersection = Rational::from_integer(factorial(n + 1)) * &r_pow * &box_volume;
    // boundary divisor coefficients 1 + (b0 - L - 1) m_b; lct = min (1 - coeff) / m_b
    let mut lct: Option<Rational> = None;
    for p in &live {
        let m = Rational::from_integer(lcm_denominators(p.slope().iter()));
        let coeff = Rational::one() + (p.constant() - &l_rat - Rational::one()) * &m;
        let cand = (Rational::one() - coeff) / m;
        lct = Some(match lct {
            Some(c) if c <= cand => c,
            _ => cand,
        });
    }
    let lct = lct.expect("at least one live piece");
    let anticanonical = Rational::from_integer(factorial(n)) * pair_volume(&regions);
    let ding = -&top_intersection / (int(n as i64 + 1) * &r_pow * anticanonical) - (Rational::one() - &lct);
    Ok(LctReport { ding, lct, l_cap, r, box_volume, top_intersection })
}

/// All invariants of a test function, with float mirrors produced by the I/O layer.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantReport {
    pub ding: Rational,
    pub df: Rational,
    pub df_relative: Rational,
    pub gap: GapReport,
    pub ding_weighted_ricci: Rational,
    pub integral: Rational,
    pub boundary_integral: Rational,
    pub l2_norm_sq: Rational,
    pub value_at_origin: Rational,
    pub num_regions: usize,
    pub dropped_pieces: Vec<usize>,
}

pub fn invariant_report(pair: &FanoPair, g: &PlConvexFunction) -> Result<InvariantReport> {
    let regions = linearity_regions(pair, g)?;
    let vol = pair_volume(&regions);
    let n = int(pair.dim() as i64);
    let integral = regions.integral(g);
    let boundary_integral = boundary_from_regions(pair, g, &regions);
    let ding = ding_from_regions(g, &regions);
    let df = (&boundary_integral - &n * &integral) / &vol;
    let ricci = crate::stability::ricci_affine(&pair.delta, &moment_table(&pair.delta, 2))?;
    let int_gl = integral_against(pair, g, &regions, &Weight::Affine(ricci.l.clone()))?;
    let df_relative = (&boundary_integral - (&n + Rational::one()) * &integral + &vol * &int_gl) / &vol;
    let gap = df_ding_gap(pair, g)?;
    let l2_norm_sq = regions
        .regions
        .iter()
        .map(|r| r.table.integrate_product(&g.pieces[r.piece], &g.pieces[r.piece]))
        .sum();
    Ok(InvariantReport {
        ding,
        df,
        df_relative,
        gap,
        ding_weighted_ricci: int_gl - g.at_origin(),
        integral,
        boundary_integral,
        l2_norm_sq,
        value_at_origin: g.at_origin(),
        num_regions: regions.regions.len(),
        dropped_pieces: regions.dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn pts(v: &[&[i64]]) -> Vec<RationalVector> {
        v.iter().map(|p| p.iter().map(|&x| int(x)).collect()).collect()
    }

    fn square() -> FanoPair {
        FanoPair::from_fano_vertices(2, &pts(&[&[1, 0], &[0, 1], &[-1, 0], &[0, -1]])).unwrap()
    }

    fn p2() -> FanoPair {
        FanoPair::from_fano_vertices(2, &pts(&[&[1, 0], &[0, 1], &[-1, -1]])).unwrap()
    }

    fn pl(pieces: &[&[i64]]) -> PlConvexFunction {
        PlConvexFunction::new(pieces[0].len() - 1, pieces.iter().map(|p| AffineFunction::from_ints(p)).collect()).unwrap()
    }

    #[test]
    fn square_with_half_plane_function() {
        let g = pl(&[&[0, 0, 0], &[0, 1, 0]]);
        assert_eq!(ding_invariant(&square(), &g).unwrap(), rat(1, 4));
        // g is homogeneous, so the two invariants agree
        assert_eq!(df_invariant(&square(), &g).unwrap(), rat(1, 4));
        assert!(df_ding_gap(&square(), &g).unwrap().difference.is_zero());
    }

    #[test]
    fn p2_with_tropical_function() {
        let g = pl(&[&[0, 1, 0], &[0, 0, 1], &[0, 0, 0]]);
        assert_eq!(ding_invariant(&p2(), &g).unwrap(), rat(31, 54));
        let lct = ding_via_lct(&p2(), &g, None, None).unwrap();
        assert_eq!(lct.ding, rat(31, 54));
        assert_eq!(lct.l_cap, BigInt::from(3));
    }

    #[test]
    fn radially_affine_function_has_no_gap() {
        // max_a(-<p_a, y>) is linear on each cone over a facet
        let g = pl(&[&[0, -1, 0], &[0, 0, -1], &[0, 1, 1]]);
        let gap = df_ding_gap(&p2(), &g).unwrap();
        assert!(gap.difference.is_zero());
    }

    #[test]
    fn affine_functions_have_zero_invariant_on_balanced_polytope() {
        let g = pl(&[&[3, 2, -5]]);
        assert!(ding_invariant(&p2(), &g).unwrap().is_zero());
        assert!(df_invariant(&p2(), &g).unwrap().is_zero());
    }

    #[test]
    fn duplicate_and_dominated_pieces_are_dropped() {
        let g = pl(&[&[0, 1, 0], &[0, 1, 0], &[-10, 0, 0]]);
        let r = linearity_regions(&square(), &g).unwrap();
        assert_eq!(r.regions.len(), 1);
        assert_eq!(r.dropped, vec![1, 2]);
    }

    #[test]
    fn lct_route_validates_parameters() {
        let g = pl(&[&[0, 1, 0], &[0, 0, 1], &[0, 0, 0]]);
        assert!(ding_via_lct(&p2(), &g, Some(BigInt::from(2)), None).is_err());
        assert!(ding_via_lct(&p2(), &g, None, Some(BigInt::from(0))).is_err());
        // the cell vertex (1/2, 1/2) forces an even r
        assert!(ding_via_lct(&p2(), &g, Some(BigInt::from(7)), Some(BigInt::from(3))).is_err());
        let custom = ding_via_lct(&p2(), &g, Some(BigInt::from(7)), Some(BigInt::from(4))).unwrap();
        assert_eq!(custom.ding, rat(31, 54));
    }

    #[test]
    fn weighted_invariant_with_pl_weight_matches_affine_weight() {
        let g = pl(&[&[0, 1, 0], &[0, 0, 0]]);
        let a = AffineFunction::new(vec![rat(2, 9), rat(0, 1), rat(0, 1)]);
        let w1 = weighted_invariant(&p2(), &g, &Weight::Affine(a.clone())).unwrap();
        let w2 = weighted_invariant(&p2(), &g, &Weight::Pl(PlConvexFunction::affine(a))).unwrap();
        assert_eq!(w1, w2);
        assert_eq!(w1, ding_invariant(&p2(), &g).unwrap());
    }
}
