//! The explicit Mabuchi potential on `P^2` blown up at a point, with
//! `Δ = { y_i > -1, -1 < y_1 + y_2 < 1 }` and `Y = y_1 + y_2`:
//!
//! `v = Σ (1+y_i) log(1+y_i) + (1+Y) log(1+Y) + (1-Y) log(1-Y) - (Y+2) log(Y+2)
//!      + (1/√7)((√7+Y) log(√7+Y) + (√7-Y) log(√7-Y)) + log(3/88)`,
//!
//! which solves `e^{v - <y, ∇v>} det ∇²v = ℓ(y)`.

use serde::Serialize;

use super::potential::{Domain, PotentialTag, SymplecticPotential};
use crate::catalog::cpn_blowup;
use crate::error::{Error, Result};
use crate::stability::classify;

const SQRT7: f64 = 2.645_751_311_064_590_6;

fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

#[derive(Clone, Debug)]
pub struct Cp2MabuchiPotential {
    pub domain: Domain,
    pub constant: f64,
}

impl Cp2MabuchiPotential {
    pub fn new() -> Result<Self> {
        Self::with_constant((3.0f64 / 88.0).ln())
    }

    pub fn with_constant(constant: f64) -> Result<Self> {
        let pair = cpn_blowup(2)?;
        Ok(Cp2MabuchiPotential { domain: Domain::from_polytope(&pair.delta), constant })
    }

    /// Radial part `F(Y)` and its first two derivatives.
    fn radial(y: f64) -> (f64, f64, f64) {
        let f = xlogx(1.0 + y) + xlogx(1.0 - y) - xlogx(y + 2.0) + (xlogx(SQRT7 + y) + xlogx(SQRT7 - y)) / SQRT7;
        let df = (1.0 + y).ln() - (1.0 - y).ln() - (y + 2.0).ln() - 1.0 + ((SQRT7 + y) / (SQRT7 - y)).ln() / SQRT7;
        let ddf = 1.0 / (1.0 + y) + 1.0 / (1.0 - y) - 1.0 / (y + 2.0) + 2.0 / (7.0 - y * y);
        (f, df, ddf)
    }
}

impl SymplecticPotential for Cp2MabuchiPotential {
    fn tag(&self) -> PotentialTag {
        PotentialTag::ClosedFormCp2
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn value(&self, y: &[f64]) -> f64 {
        xlogx(1.0 + y[0]) + xlogx(1.0 + y[1]) + Self::radial(y[0] + y[1]).0 + self.constant
    }

    fn gradient(&self, y: &[f64]) -> Vec<f64> {
        let df = Self::radial(y[0] + y[1]).1;
        vec![(1.0 + y[0]).ln() + 1.0 + df, (1.0 + y[1]).ln() + 1.0 + df]
    }

    fn hessian(&self, y: &[f64]) -> Vec<Vec<f64>> {
        let ddf = Self::radial(y[0] + y[1]).2;
        vec![vec![1.0 / (1.0 + y[0]) + ddf, ddf], vec![ddf, 1.0 / (1.0 + y[1]) + ddf]]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MabuchiCheck {
    pub samples: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// Coefficients `[ℓ_0, ℓ_1, ℓ_2]` used on the right-hand side.
    pub ricci: Vec<f64>,
    pub ode_max_residual: f64,
}

/// `max |e^{v - <y, ∇v>} det ∇²v - ℓ(y)|` over `samples`, for the potential with its constant
/// shifted by `constant_shift`. Only `n = 2` has a closed form.
pub fn mabuchi_residual(n: usize, samples: &[Vec<f64>], constant_shift: f64) -> Result<MabuchiCheck> {
    if n != 2 {
        return Err(Error::InvalidInput(format!("closed-form Mabuchi potential is available for n = 2 only, got {n}")));
    }
    let v = Cp2MabuchiPotential::with_constant((3.0f64 / 88.0).ln() + constant_shift)?;
    let report = classify(&cpn_blowup(2)?)?;
    let l = report.ricci.l.to_f64();
    let mut residuals = Vec::with_capacity(samples.len());
    for y in samples {
        if y.len() != 2 || !v.domain.is_interior(y) {
            return Err(Error::InvalidInput(format!("sample {y:?} is not interior to the polytope")));
        }
        let h = v.hessian(y);
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        let lhs = v.exp_neg_psi(y) * det;
        residuals.push((lhs - (l[0] + l[1] * y[0] + l[2] * y[1])).abs());
    }
    let s_grid: Vec<f64> = (1..40).map(|i| 1.0 + 2.0 * i as f64 / 40.0).collect();
    Ok(MabuchiCheck {
        samples: samples.to_vec(),
        max_residual: residuals.iter().cloned().fold(0.0, f64::max),
        residuals,
        ricci: l,
        ode_max_residual: mabuchi_ode_residual(&s_grid, constant_shift),
    })
}

/// Residual of the reduced equation `e^{h - (s-2) h'} h'' = s (a s + b)` on `s ∈ (1, 3)`,
/// with `a = -3/22`, `b = 6/11` and `h(s) = F(s - 2) + log(3/88)`.
pub fn mabuchi_ode_residual(s_values: &[f64], constant_shift: f64) -> f64 {
    let (a, b) = (-3.0 / 22.0, 6.0 / 11.0);
    let c = (3.0f64 / 88.0).ln() + constant_shift;
    s_values
        .iter()
        .map(|&s| {
            let (f, df, ddf) = Cp2MabuchiPotential::radial(s - 2.0);
            // h = F + s log s + c, so h' = F' + log s + 1 and h'' = F'' + 1/s
            let h = f + xlogx(s) + c;
            let dh = df + s.ln() + 1.0;
            let ddh = ddf + 1.0 / s;
            ((h - (s - 2.0) * dh).exp() * ddh - s * (a * s + b)).abs()
        })
        .fold(0.0, f64::max)
}

/// Deterministic interior points of `Δ` (Halton sequence in bases 2 and 3, kept at distance
/// at least `margin` from every facet).
pub fn mabuchi_interior_samples(count: usize, margin: f64) -> Vec<Vec<f64>> {
    let halton = |mut i: usize, base: usize| {
        let (mut f, mut r) = (1.0, 0.0);
        while i > 0 {
            f /= base as f64;
            r += f * (i % base) as f64;
            i /= base;
        }
        r
    };
    let mut out = Vec::with_capacity(count);
    let mut i = 1;
    while out.len() < count {
        let y = vec![-1.0 + 3.0 * halton(i, 2), -1.0 + 3.0 * halton(i, 3)];
        let s = y[0] + y[1];
        if y[0] > -1.0 + margin && y[1] > -1.0 + margin && s.abs() < 1.0 - margin {
            out.push(y);
        }
        i += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_vanishes_at_the_origin() {
        let r = mabuchi_residual(2, &[vec![0.0, 0.0]], 0.0).unwrap();
        assert!(r.max_residual <= 1e-10, "{}", r.max_residual);
        assert_eq!(r.ricci.len(), 3);
        assert!((r.ricci[0] - 3.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn residual_small_on_interior_samples_and_sensitive_to_the_constant() {
        let pts = mabuchi_interior_samples(20, 0.02);
        assert_eq!(pts.len(), 20);
        let ok = mabuchi_residual(2, &pts, 0.0).unwrap();
        assert!(ok.max_residual <= 1e-8, "{}", ok.max_residual);
        assert!(ok.ode_max_residual <= 1e-10, "{}", ok.ode_max_residual);
        let bad = mabuchi_residual(2, &pts, 0.01).unwrap();
        assert!(bad.max_residual >= 1e-3);
        assert!(bad.ode_max_residual >= 1e-3);
    }

    #[test]
    fn boundary_samples_are_rejected() {
        assert!(mabuchi_residual(2, &[vec![-1.0, 0.5]], 0.0).is_err());
        assert!(mabuchi_residual(3, &[vec![0.0, 0.0, 0.0]], 0.0).is_err());
    }

    #[test]
    fn gradient_and_hessian_match_differences() {
        let v = Cp2MabuchiPotential::new().unwrap();
        let y = [0.2, -0.5];
        let h = 1e-6;
        let g = v.gradient(&y);
        for i in 0..2 {
            let mut p = y;
            let mut m = y;
            p[i] += h;
            m[i] -= h;
            assert!(((v.value(&p) - v.value(&m)) / (2.0 * h) - g[i]).abs() < 1e-7);
            let (gp, gm) = (v.gradient(&p), v.gradient(&m));
            for j in 0..2 {
                assert!(((gp[j] - gm[j]) / (2.0 * h) - v.hessian(&y)[i][j]).abs() < 1e-6);
            }
        }
    }
}
