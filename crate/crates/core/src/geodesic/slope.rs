//! Finite-difference slopes of the Ding functional along a geodesic ray.

use serde::Serialize;

use super::ray::GeodesicRay;
use super::QuadratureConfig;
use crate::error::{Error, Result};
use crate::function::PlConvexFunction;
use crate::geometry::FanoPair;
use crate::invariants::ding_invariant;
use crate::rational::{format_rational, to_f64, Rational};

pub const DEFAULT_T_GRID: [f64; 6] = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0];

#[derive(Clone, Debug, Serialize)]
pub struct RaySample {
    pub t: f64,
    pub ding_value: f64,
    /// Centred difference with step `min(0.1, t/10)`.
    pub slope_fd: f64,
    pub log_z: f64,
    /// Bound on the slope error from the cubature error of `log Z` at `t ± dt`.
    pub noise: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SlopeReport {
    pub samples: Vec<RaySample>,
    pub ding_invariant: String,
    /// `|Δ| I(g)`, the limit of the slope.
    pub target_slope: String,
    pub target_slope_f64: f64,
    pub final_relative_error: f64,
    pub monotone: bool,
    pub converged: bool,
    pub num_faces: usize,
}

pub fn slope_convergence(pair: &FanoPair, g: &PlConvexFunction, t_grid: &[f64], cfg: &QuadratureConfig) -> Result<SlopeReport> {
    if t_grid.is_empty() || t_grid.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidInput("t grid must be non-empty and positive".into()));
    }
    let ray = GeodesicRay::new(pair, g, cfg)?;
    let vol = to_f64(&ray.volume);
    let mut samples = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let dt = (t / 10.0).min(0.1);
        let centre = ray.ding(t)?;
        let plus = ray.ding(t + dt)?;
        let minus = ray.ding(t - dt)?;
        let zp = ray.partition_function(t + dt)?;
        let zm = ray.partition_function(t - dt)?;
        samples.push(RaySample {
            t,
            ding_value: centre.value,
            slope_fd: (plus.value - minus.value) / (2.0 * dt),
            log_z: centre.log_z,
            // cubature error of log Z plus a rounding floor on the difference
            noise: (vol * (zp.error + zm.error) + 8.0 * f64::EPSILON * (plus.value.abs() + minus.value.abs() + vol)) / (2.0 * dt),
        });
    }
    let ding = ding_invariant(pair, g)?;
    let target: Rational = &ray.volume * &ding;
    let target_f64 = to_f64(&target);
    let last = samples.last().unwrap();
    // absolute when the target vanishes
    let scale = if target_f64 == 0.0 { 1.0 } else { target_f64.abs() };
    let final_relative_error = (last.slope_fd - target_f64).abs() / scale;
    let monotone = samples.windows(2).all(|w| w[1].slope_fd >= w[0].slope_fd - (w[0].noise + w[1].noise));
    Ok(SlopeReport {
        ding_invariant: format_rational(&ding),
        target_slope: format_rational(&target),
        target_slope_f64: target_f64,
        final_relative_error,
        monotone,
        converged: final_relative_error <= cfg.slope_tol,
        num_faces: ray.faces.len(),
        samples,
    })
}
