//! Floating-point checks of the analytic side: Legendre transforms of symplectic
//! potentials, the Ding functional along the geodesic ray `v_0 + t g` of a PL
//! convex function, convergence of its slope to `|Δ| I(g)`, and the closed-form
//! Mabuchi metric on the blow-up of `P^2`.

pub mod cubature;
pub mod mabuchi;
pub mod potential;
pub mod ray;
pub mod slope;

use serde::Serialize;

use crate::error::{Error, Result};

pub use mabuchi::{mabuchi_interior_samples, mabuchi_ode_residual, mabuchi_residual, Cp2MabuchiPotential, MabuchiCheck};
pub use potential::{legendre_dual, Domain, GuilleminPotential, LegendrePoint, PotentialTag, QuadraticPotential, SymplecticPotential};
pub use ray::{ding_functional, BoxPartition, DingValue, GeodesicRay, PartitionValue};
pub use slope::{slope_convergence, RaySample, SlopeReport, DEFAULT_T_GRID};

/// Largest dimension handled by the cubature.
pub const NUMERIC_DIM_CAP: usize = 3;

pub(crate) fn check_dim(n: usize) -> Result<()> {
    if n > NUMERIC_DIM_CAP {
        return Err(Error::DimensionCap { dim: n, cap: NUMERIC_DIM_CAP });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadratureConfig {
    /// Gauss-Legendre nodes per axis for the face weights; the error estimate uses half as many.
    pub order: usize,
    /// Nodes per axis for `∫_Δ v`, whose integrand has logarithmic boundary terms.
    pub potential_order: usize,
    /// Relative tolerance of the box cubature; the tail bound must also fall below it.
    pub rel_tol: f64,
    pub max_cells: usize,
    /// Relative distance of the final slope from `|Δ| I(g)` counted as converged.
    pub slope_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { order: 24, potential_order: 64, rel_tol: 1e-8, max_cells: 20_000, slope_tol: 0.01 }
    }
}
