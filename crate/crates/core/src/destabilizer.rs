//! Optimal destabilizer `B = max{0, h}` and the infimum of the Ding energy.
//!
//! `h` is characterised by `∫_{Δ_h} h = 1` and `∫_{Δ_h} y_i h = 0`, where
//! `Δ_h = Δ ∩ {h >= 0}`. Writing `F(c)_a = ∫_{Δ_c} y_a h_c - δ_{a0}`, the
//! Jacobian of `F` is the Gram matrix of `Δ_c` because `h_c` vanishes on the
//! moving part of the boundary. Coefficients are kept on a dyadic grid so all
//! moments are exact rationals; only the Newton update is done in floating point.

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::function::{AffineFunction, PlConvexFunction};
use crate::geometry::{FanoPair, Polytope};
use crate::invariants::{ding_invariant, l2_norm_sq, linearity_regions, Weight};
use crate::linalg;
use crate::moments::{moment_table, MomentTable};
use crate::rational::{from_f64, int, snap_dyadic, solve, to_f64, Rational};
use crate::stability::{classify, ricci_affine};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Solver {
    Newton,
    FixedPoint,
    Both,
}

impl Solver {
    pub fn as_str(&self) -> &'static str {
        match self {
            Solver::Newton => "newton",
            Solver::FixedPoint => "fixed_point",
            Solver::Both => "both",
        }
    }
}

/// Grid on which iterates live.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    /// Doubles, with the Newton correction solved in `f64`.
    Standard,
    /// Multiples of `2^-200`, with exact rational Newton corrections.
    High,
}

const HIGH_BITS: usize = 200;
const MIN_STEP: f64 = 1.0 / (1u64 << 40) as f64;

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub precision: Precision,
    pub init: Option<AffineFunction>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-12, max_iter: 200, precision: Precision::Standard, init: None }
    }
}

#[derive(Clone, Debug)]
pub struct OptimalDestabilizer {
    /// Coefficients `[c0, c1, .., cn]` on the solver grid.
    pub h: AffineFunction,
    /// `Δ_h = Δ ∩ {h >= 0}`.
    pub delta_h: Polytope,
    pub volume: Rational,
    pub residual_norm: f64,
    pub iterations: usize,
    pub solver: Solver,
    pub history: Vec<f64>,
    /// True when the pair is stable and `B = ℓ` exactly.
    pub exact: bool,
}

impl OptimalDestabilizer {
    pub fn b_at_zero(&self) -> Rational {
        let c = self.h.constant();
        if c.is_positive() {
            c.clone()
        } else {
            Rational::zero()
        }
    }

    pub fn b(&self) -> PlConvexFunction {
        let n = self.h.dim();
        PlConvexFunction { pieces: vec![AffineFunction::zero(n), self.h.clone()] }
    }
}

fn snap(x: &Rational, precision: Precision) -> Rational {
    match precision {
        Precision::Standard => from_f64(to_f64(x)),
        Precision::High => snap_dyadic(x, HIGH_BITS),
    }
}

fn snap_fn(h: &AffineFunction, precision: Precision) -> AffineFunction {
    AffineFunction::new(h.coeffs.iter().map(|c| snap(c, precision)).collect())
}

struct Iterate {
    h: AffineFunction,
    cell: Polytope,
    table: MomentTable,
    residual: Vec<Rational>,
    norm: f64,
}

/// Evaluates `F` at `h`, or `None` if `h(0) <= 0` or `Δ_h` is not full-dimensional.
fn evaluate(delta: &Polytope, h: AffineFunction) -> Option<Iterate> {
    if !h.constant().is_positive() {
        return None;
    }
    let cell = match h.nonneg_halfspace() {
        Some(hs) => delta.clip(&hs).full()?,
        None => delta.clone(),
    };
    let table = moment_table(&cell, 2);
    let gram = table.gram();
    let residual: Vec<Rational> = gram
        .iter()
        .enumerate()
        .map(|(a, row)| {
            let v: Rational = row.iter().zip(&h.coeffs).map(|(m, c)| m * c).sum();
            if a == 0 {
                v - int(1)
            } else {
                v
            }
        })
        .collect();
    let norm = residual.iter().map(|r| to_f64(r).abs()).fold(0.0, f64::max);
    Some(Iterate { h, cell, table, residual, norm })
}

fn stable_result(pair: &FanoPair, solver: Solver) -> Result<Option<OptimalDestabilizer>> {
    let report = classify(pair)?;
    if report.ricci.min_value.is_negative() {
        return Ok(None);
    }
    Ok(Some(OptimalDestabilizer {
        h: report.ricci.l.clone(),
        delta_h: pair.delta.clone(),
        volume: report.ricci.volume.clone(),
        residual_norm: 0.0,
        iterations: 0,
        solver,
        history: vec![0.0],
        exact: true,
    }))
}

fn initial(pair: &FanoPair, opts: &SolverOptions) -> Result<AffineFunction> {
    let h = match &opts.init {
        Some(h) => h.clone(),
        None => classify(pair)?.ricci.l,
    };
    if h.dim() != pair.dim() {
        return crate::error::invalid("initial guess has the wrong dimension");
    }
    Ok(snap_fn(&h, opts.precision))
}

fn finish(pair: &FanoPair, it: Iterate, iterations: usize, solver: Solver, history: Vec<f64>) -> OptimalDestabilizer {
    OptimalDestabilizer {
        h: it.h,
        delta_h: it.cell,
        volume: pair.delta.volume(),
        residual_norm: it.norm,
        iterations,
        solver,
        history,
        exact: false,
    }
}

/// Damped Newton iteration on `F`.
pub fn solve_newton(pair: &FanoPair, opts: &SolverOptions) -> Result<OptimalDestabilizer> {
    if let Some(d) = stable_result(pair, Solver::Newton)? {
        return Ok(d);
    }
    let h0 = initial(pair, opts)?;
    let mut it = evaluate(&pair.delta, h0).ok_or_else(|| Error::Degenerate("initial guess leaves an empty region".into()))?;
    let mut history = vec![it.norm];
    for iter in 0..opts.max_iter {
        if it.norm <= opts.tol {
            return Ok(finish(pair, it, iter, Solver::Newton, history));
        }
        let gram = it.table.gram();
        let neg: Vec<Rational> = it.residual.iter().map(|r| -r.clone()).collect();
        let step: Vec<Rational> = match opts.precision {
            Precision::High => solve(&gram, &neg).ok_or_else(|| Error::Degenerate("singular Jacobian".into()))?,
            Precision::Standard => {
                let g: Vec<Vec<f64>> = gram.iter().map(|r| r.iter().map(to_f64).collect()).collect();
                let f: Vec<f64> = neg.iter().map(to_f64).collect();
                linalg::solve(&g, &f)
                    .ok_or_else(|| Error::Degenerate("singular Jacobian".into()))?
                    .into_iter()
                    .map(from_f64)
                    .collect()
            }
        };
        let mut alpha = 1.0;
        let next = loop {
            let a = from_f64(alpha);
            let cand = AffineFunction::new(it.h.coeffs.iter().zip(&step).map(|(c, s)| c + s * &a).collect());
            let cand = snap_fn(&cand, opts.precision);
            if let Some(c) = evaluate(&pair.delta, cand) {
                if c.norm < it.norm {
                    break c;
                }
            }
            alpha *= 0.5;
            if alpha < MIN_STEP {
                return Err(Error::DampingUnderflow { solver: "newton".into(), iteration: iter, residual: it.norm });
            }
        };
        it = next;
        history.push(it.norm);
    }
    if it.norm <= opts.tol {
        return Ok(finish(pair, it, opts.max_iter, Solver::Newton, history));
    }
    Err(Error::NonConvergence { solver: "newton".into(), iterations: opts.max_iter, residual: it.norm, history })
}

/// Iterates `h -> ricci_affine(Δ ∩ {h >= 0})`.
pub fn solve_fixed_point(pair: &FanoPair, opts: &SolverOptions) -> Result<OptimalDestabilizer> {
    if let Some(d) = stable_result(pair, Solver::FixedPoint)? {
        return Ok(d);
    }
    let h0 = initial(pair, opts)?;
    let mut it = evaluate(&pair.delta, h0).ok_or_else(|| Error::Degenerate("initial guess leaves an empty region".into()))?;
    let mut history = Vec::new();
    for iter in 0..opts.max_iter {
        let next_h = snap_fn(&ricci_affine(&it.cell, &it.table)?.l, opts.precision);
        let change = next_h
            .coeffs
            .iter()
            .zip(&it.h.coeffs)
            .map(|(a, b)| to_f64(&(a - b)).abs())
            .fold(0.0, f64::max);
        history.push(change);
        let next = evaluate(&pair.delta, next_h).ok_or_else(|| Error::NonConvergence {
            solver: "fixed_point".into(),
            iterations: iter + 1,
            residual: f64::INFINITY,
            history: history.clone(),
        })?;
        it = next;
        if change <= opts.tol {
            return Ok(finish(pair, it, iter + 1, Solver::FixedPoint, history));
        }
    }
    Err(Error::NonConvergence { solver: "fixed_point".into(), iterations: opts.max_iter, residual: it.norm, history })
}

/// Result of [`optimal_destabilizer`]: the primary solution and, for `Solver::Both`, the cross-check.
#[derive(Clone, Debug)]
pub struct DestabilizerRun {
    pub primary: OptimalDestabilizer,
    pub secondary: Option<OptimalDestabilizer>,
    /// Largest coefficient difference between the two solvers.
    pub agreement: Option<f64>,
}

pub fn optimal_destabilizer(pair: &FanoPair, solver: Solver, opts: &SolverOptions) -> Result<DestabilizerRun> {
    match solver {
        Solver::Newton => Ok(DestabilizerRun { primary: solve_newton(pair, opts)?, secondary: None, agreement: None }),
        Solver::FixedPoint => Ok(DestabilizerRun { primary: solve_fixed_point(pair, opts)?, secondary: None, agreement: None }),
        Solver::Both => {
            let a = solve_newton(pair, opts)?;
            let b = solve_fixed_point(pair, opts)?;
            let diff = a
                .h
                .coeffs
                .iter()
                .zip(&b.h.coeffs)
                .map(|(x, y)| to_f64(&(x - y)).abs())
                .fold(0.0, f64::max);
            if diff > 10.0 * opts.tol.max(f64::EPSILON) {
                return Err(Error::Consistency(format!("newton and fixed-point solutions differ by {diff:.3e}")));
            }
            Ok(DestabilizerRun { primary: a, secondary: Some(b), agreement: Some(diff) })
        }
    }
}

#[derive(Clone, Debug)]
pub struct EnergyReport {
    pub b_at_zero: f64,
    /// `|Δ| B(0) - 1`.
    pub energy_infimum: f64,
    /// Exact value when `h` is exact (stable pairs).
    pub energy_infimum_exact: Option<Rational>,
    /// `|Δ| ‖B - 1/|Δ|‖₂`.
    pub mw_supremum: f64,
    /// `max{0, h} - 1/|Δ|`.
    pub witness: PlConvexFunction,
    /// `-|Δ| I(w) / ‖w‖₂` for the witness `w`, zero when `w = 0`.
    pub witness_ratio: f64,
}

pub fn energy_report(pair: &FanoPair, d: &OptimalDestabilizer) -> Result<EnergyReport> {
    let vol = &d.volume;
    let b0 = d.b_at_zero();
    let energy = vol * &b0 - int(1);
    let b = d.b();
    let regions = linearity_regions(pair, &b)?;
    let int_b = regions.integral(&b);
    let int_b2: Rational = regions
        .regions
        .iter()
        .map(|r| r.table.integrate_product(&b.pieces[r.piece], &b.pieces[r.piece]))
        .sum();
    let inv_vol = vol.recip();
    let mw_sq_norm = &int_b2 - int(2) * &int_b * &inv_vol + &inv_vol;
    let mw = to_f64(vol) * to_f64(&mw_sq_norm).max(0.0).sqrt();
    let n = pair.dim();
    let shift = AffineFunction::constant_fn(n, -inv_vol.clone());
    let witness = PlConvexFunction { pieces: vec![shift.clone(), d.h.add(&shift)] };
    let i_w = ding_invariant(pair, &witness)?;
    let norm_w = to_f64(&l2_norm_sq(pair, &witness)?).max(0.0).sqrt();
    let witness_ratio = if norm_w == 0.0 { 0.0 } else { -to_f64(vol) * to_f64(&i_w) / norm_w };
    Ok(EnergyReport {
        b_at_zero: to_f64(&b0),
        energy_infimum: to_f64(&energy),
        energy_infimum_exact: d.exact.then_some(energy),
        mw_supremum: mw,
        witness,
        witness_ratio,
    })
}

#[derive(Clone, Debug)]
pub struct BalancingCheck {
    /// `∫B - 1`.
    pub mass_defect: f64,
    /// `∫ y_i B`.
    pub first_moments: Vec<f64>,
    /// `∫B² - B(0)`.
    pub l2_defect: f64,
    pub samples: usize,
    /// Smallest `I_B(g)` over the sampled convex functions.
    pub min_weighted_ding: f64,
    pub norm_comparisons: usize,
    /// Smallest `‖A‖² - ‖B‖²` over the sampled balancing densities.
    pub min_norm_gap: f64,
    pub passed: bool,
    pub diagnostics: Vec<String>,
}

fn random_pl(rng: &mut ChaCha8Rng, n: usize, pieces: usize) -> PlConvexFunction {
    let ps = (0..pieces)
        .map(|_| AffineFunction::new((0..=n).map(|_| crate::rational::rat(rng.gen_range(-6..=6), rng.gen_range(1..=4))).collect()))
        .collect();
    PlConvexFunction { pieces: ps }
}

fn coordinate(n: usize, a: usize) -> AffineFunction {
    let mut e = vec![Rational::zero(); n + 1];
    e[a] = int(1);
    AffineFunction::new(e)
}

fn integrate_against_affine(f: &PlConvexFunction, regions: &crate::invariants::LinearityRegions, a: &AffineFunction) -> Rational {
    regions.regions.iter().map(|r| r.table.integrate_product(&f.pieces[r.piece], a)).sum()
}

/// Minimum of a PL function over Δ, attained at a vertex of one of its cells.
fn pl_min(f: &PlConvexFunction, regions: &crate::invariants::LinearityRegions) -> Rational {
    regions
        .regions
        .iter()
        .flat_map(|r| r.cell.vertices.iter().map(move |v| f.pieces[r.piece].eval(v)))
        .min()
        .expect("non-empty decomposition")
}

/// Checks that `B` is balancing and minimises the L² norm, using seeded random samples.
pub fn verify_balancing(pair: &FanoPair, d: &OptimalDestabilizer, samples: usize, seed: u64, tol: f64) -> Result<BalancingCheck> {
    let n = pair.dim();
    let b = d.b();
    let b_regions = linearity_regions(pair, &b)?;
    let mass = b_regions.integral(&b);
    let firsts: Vec<f64> = (1..=n)
        .map(|a| to_f64(&integrate_against_affine(&b, &b_regions, &coordinate(n, a))))
        .collect();
    let l2: Rational = b_regions
        .regions
        .iter()
        .map(|r| r.table.integrate_product(&b.pieces[r.piece], &b.pieces[r.piece]))
        .sum();
    let mass_defect = to_f64(&(&mass - int(1)));
    let l2_defect = to_f64(&(&l2 - d.b_at_zero()));
    let scale = 1.0 + to_f64(&d.volume);
    let mut diagnostics = Vec::new();
    if mass_defect.abs() > tol * scale {
        diagnostics.push(format!("∫B - 1 = {mass_defect:.3e}"));
    }
    for (i, m) in firsts.iter().enumerate() {
        if m.abs() > tol * scale {
            diagnostics.push(format!("∫y{}B = {m:.3e}", i + 1));
        }
    }
    if l2_defect.abs() > tol * scale {
        diagnostics.push(format!("∫B² - B(0) = {l2_defect:.3e}"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_weighted = f64::INFINITY;
    for k in 0..samples {
        let g = random_pl(&mut rng, n, 1 + k % 4);
        let v = to_f64(&crate::invariants::weighted_invariant(pair, &g, &Weight::Pl(b.clone()))?);
        let gscale = g.pieces.iter().flat_map(|p| p.to_f64()).fold(1.0_f64, |m, x| m.max(x.abs()));
        if v < -tol * scale * gscale {
            diagnostics.push(format!("I_B(g) = {v:.3e} < 0 for sample {k}"));
        }
        min_weighted = min_weighted.min(v);
    }

    // Positive PL densities, rebalanced by an affine correction and kept only if still non-negative.
    let b_norm = to_f64(&l2);
    let gram = moment_table(&pair.delta, 2).gram();
    let mut comparisons = 0;
    let mut min_gap = f64::INFINITY;
    for _ in 0..samples {
        let g = random_pl(&mut rng, n, 2);
        let g_regions = linearity_regions(pair, &g)?;
        let lift = crate::rational::rat(rng.gen_range(1..=8), 4) / &d.volume - pl_min(&g, &g_regions);
        let rho = g.add_affine(&AffineFunction::constant_fn(n, lift));
        let regions = linearity_regions(pair, &rho)?;
        let rhs: Vec<Rational> = (0..=n)
            .map(|a| {
                let m = integrate_against_affine(&rho, &regions, &coordinate(n, a));
                if a == 0 {
                    int(1) - m
                } else {
                    -m
                }
            })
            .collect();
        let corr = AffineFunction::new(solve(&gram, &rhs).ok_or_else(|| Error::Degenerate("singular moment matrix".into()))?);
        let a_fn = rho.add_affine(&corr);
        let a_regions = linearity_regions(pair, &a_fn)?;
        if pl_min(&a_fn, &a_regions).is_negative() {
            continue;
        }
        let a_norm: Rational = a_regions
            .regions
            .iter()
            .map(|r| r.table.integrate_product(&a_fn.pieces[r.piece], &a_fn.pieces[r.piece]))
            .sum();
        let gap = to_f64(&a_norm) - b_norm;
        comparisons += 1;
        if gap < -tol * scale {
            diagnostics.push(format!("balancing density with smaller norm (gap {gap:.3e})"));
        }
        min_gap = min_gap.min(gap);
    }

    // Mixtures (1-λ) B + λ 1_P/|P| with P = Δ ∩ -Δ ∩ slab, which is centrally symmetric.
    let mut sym = pair.delta.clone();
    for hs in &pair.delta.halfspaces {
        let reflected = crate::geometry::HalfSpace::new(hs.normal.iter().map(|x| -x).collect(), hs.offset.clone());
        sym = sym.clip(&reflected).full().expect("origin is interior");
    }
    for _ in 0..samples {
        let v: Vec<Rational> = (0..n).map(|_| int(rng.gen_range(-3..=3))).collect();
        let width = crate::rational::rat(rng.gen_range(1..=8), 8);
        let mut p = sym.clone();
        if v.iter().any(|x| !x.is_zero()) {
            for sign in [1, -1] {
                let hs = crate::geometry::HalfSpace::new(v.iter().map(|x| x * int(sign)).collect(), width.clone());
                if let Some(q) = p.clip(&hs).full() {
                    p = q;
                }
            }
        }
        let lambda = crate::rational::rat(rng.gen_range(1..=4), 4);
        let p_vol = p.volume();
        let int_b_on_p = match d.h.nonneg_halfspace().map(|hs| p.clip(&hs)) {
            None => moment_table(&p, 1).integrate_affine(&d.h),
            Some(crate::geometry::ClipResult::Full(q)) => moment_table(&q, 1).integrate_affine(&d.h),
            Some(_) => Rational::zero(),
        };
        let one = int(1);
        let a_norm = &lambda * &lambda / &p_vol
            + int(2) * &lambda * (&one - &lambda) * &int_b_on_p / &p_vol
            + (&one - &lambda) * (&one - &lambda) * &l2;
        let gap = to_f64(&a_norm) - b_norm;
        comparisons += 1;
        if gap < -tol * scale {
            diagnostics.push(format!("symmetric balancing density with smaller norm (gap {gap:.3e})"));
        }
        min_gap = min_gap.min(gap);
    }
    Ok(BalancingCheck {
        mass_defect,
        first_moments: firsts,
        l2_defect,
        samples,
        min_weighted_ding: min_weighted,
        norm_comparisons: comparisons,
        min_norm_gap: min_gap,
        passed: diagnostics.is_empty(),
        diagnostics,
    })
}
