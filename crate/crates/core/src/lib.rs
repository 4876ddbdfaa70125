//! Relative Ding stability of toric Fano varieties from polytope data.
//!
//! A toric Fano variety is given by its Fano polytope `Q` (or the dual
//! moment polytope Δ). The crate computes, exactly over the rationals, the
//! Ricci affine function ℓ and the stability class, Ding and
//! Donaldson-Futaki invariants of piecewise-linear test functions and the
//! optimal destabilizer `B = max{0, h}` with the Ding-energy infimum. The
//! [`geodesic`] module checks the slope formula numerically along
//! geodesic rays of Guillemin-type potentials.

pub mod catalog;
pub mod destabilizer;
pub mod error;
pub mod function;
pub mod geodesic;
pub mod geometry;
pub mod invariants;
pub mod io;
pub mod linalg;
pub mod moments;
pub mod rational;
pub mod stability;

pub use error::{Error, Result};
pub use function::{AffineFunction, PlConvexFunction};
pub use geometry::{ClipResult, FanoPair, HalfSpace, Polytope, RationalVector, Simplex};
pub use moments::MomentTable;
pub use rational::Rational;
pub use stability::{classify, Classification, RicciAffine, StabilityReport};
