//! The Ricci affine function ℓ and relative Ding stability classification.
//!
//! ℓ is the unique affine function with `∫_Δ y_a ℓ = δ_{a0}` (with `y_0 = 1`),
//! i.e. the L² projection of the Dirac mass at the origin onto affine functions.
//! The pair is relatively Ding stable iff `min_Δ ℓ > 0`.

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::function::AffineFunction;
use crate::geometry::{FanoPair, Polytope, RationalVector};
use crate::moments::{moment_table, MomentTable};
use crate::rational::{int, solve, Rational};

#[derive(Clone, Debug, PartialEq)]
pub struct RicciAffine {
    pub l: AffineFunction,
    /// `θ = 1 - |Δ| ℓ`.
    pub theta: AffineFunction,
    /// `δ = min_Δ ℓ`, attained at a vertex.
    pub min_value: Rational,
    pub argmin: Vec<RationalVector>,
    /// `α = 1 - |Δ| δ = max_Δ θ`.
    pub alpha: Rational,
    pub volume: Rational,
}

/// Solves the Gram system of `table` for ℓ and evaluates its minimum over the vertices of `delta`.
pub fn ricci_affine(delta: &Polytope, table: &MomentTable) -> Result<RicciAffine> {
    let n = table.dim;
    let mut rhs = vec![Rational::zero(); n + 1];
    rhs[0] = int(1);
    let c = solve(&table.gram(), &rhs).ok_or_else(|| Error::Degenerate("singular moment matrix".into()))?;
    let l = AffineFunction::new(c);
    let volume = table.volume().clone();
    let theta = AffineFunction::constant_fn(n, int(1)).sub(&l.scale(&volume));
    let values: Vec<Rational> = delta.vertices.iter().map(|v| l.eval(v)).collect();
    let min_value = values.iter().min().cloned().expect("polytope has vertices");
    let argmin = delta
        .vertices
        .iter()
        .zip(&values)
        .filter(|(_, v)| **v == min_value)
        .map(|(p, _)| p.clone())
        .collect();
    let alpha = int(1) - &volume * &min_value;
    Ok(RicciAffine { l, theta, min_value, argmin, alpha, volume })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Classification {
    KahlerEinstein,
    UniformlyStable,
    Semistable,
    Unstable,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::KahlerEinstein => "KahlerEinstein",
            Classification::UniformlyStable => "UniformlyStable",
            Classification::Semistable => "Semistable",
            Classification::Unstable => "Unstable",
        }
    }

    /// Accepts the names of [`Classification::as_str`] in any case, with or without hyphens.
    pub fn parse(s: &str) -> Option<Classification> {
        let key: String = s.chars().filter(|c| *c != '-' && *c != '_').collect::<String>().to_lowercase();
        [
            Classification::KahlerEinstein,
            Classification::UniformlyStable,
            Classification::Semistable,
            Classification::Unstable,
        ]
        .into_iter()
        .find(|c| c.as_str().to_lowercase() == key)
    }

    /// Sign of `min ℓ`: +1 for the stable classes, 0 semistable, -1 unstable.
    pub fn sign(&self) -> i32 {
        match self {
            Classification::KahlerEinstein | Classification::UniformlyStable => 1,
            Classification::Semistable => 0,
            Classification::Unstable => -1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport {
    pub classification: Classification,
    pub ricci: RicciAffine,
    pub barycenter: RationalVector,
    pub table: MomentTable,
}

pub fn classify(pair: &FanoPair) -> Result<StabilityReport> {
    let table = moment_table(&pair.delta, 2);
    let ricci = ricci_affine(&pair.delta, &table)?;
    let barycenter = table.barycenter();
    let classification = if barycenter.iter().all(Zero::is_zero) {
        Classification::KahlerEinstein
    } else if ricci.min_value.is_positive() {
        Classification::UniformlyStable
    } else if ricci.min_value.is_zero() {
        Classification::Semistable
    } else {
        Classification::Unstable
    };
    Ok(StabilityReport { classification, ricci, barycenter, table })
}

/// `⨍ h - ∫ h ℓ = (1/|Δ|) ∫ h θ`, the Futaki invariant of the affine function `h`.
pub fn futaki_pairing(table: &MomentTable, ricci: &RicciAffine, h: &AffineFunction) -> Rational {
    table.integrate_affine(h) / table.volume() - table.integrate_product(h, &ricci.l)
}
