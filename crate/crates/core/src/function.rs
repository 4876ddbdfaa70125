//! Affine functions and piecewise-linear convex functions `max_b (c_b + <s_b, y>)`.

use num_traits::{ToPrimitive, Zero};

use crate::error::{invalid, Result};
use crate::geometry::{HalfSpace, RationalVector};
use crate::rational::{dot, int, lcm_denominators, to_f64, Rational};

/// `y -> c0 + <c[1..], y>`, stored as `[c0, c1, .., cn]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AffineFunction {
    pub coeffs: Vec<Rational>,
}

impl AffineFunction {
    pub fn new(coeffs: Vec<Rational>) -> Self {
        assert!(!coeffs.is_empty(), "affine function needs a constant term");
        AffineFunction { coeffs }
    }

    pub fn from_ints(c: &[i64]) -> Self {
        AffineFunction::new(c.iter().map(|&x| int(x)).collect())
    }

    pub fn zero(dim: usize) -> Self {
        AffineFunction::new(vec![Rational::zero(); dim + 1])
    }

    pub fn constant_fn(dim: usize, c: Rational) -> Self {
        let mut f = AffineFunction::zero(dim);
        f.coeffs[0] = c;
        f
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn constant(&self) -> &Rational {
        &self.coeffs[0]
    }

    pub fn slope(&self) -> &[Rational] {
        &self.coeffs[1..]
    }

    pub fn eval(&self, y: &[Rational]) -> Rational {
        dot(self.slope(), y) + self.constant()
    }

    pub fn eval_f64(&self, y: &[f64]) -> f64 {
        let c = self.to_f64();
        c[0] + c[1..].iter().zip(y).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(to_f64).collect()
    }

    pub fn add(&self, other: &AffineFunction) -> AffineFunction {
        AffineFunction::new(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &AffineFunction) -> AffineFunction {
        AffineFunction::new(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, s: &Rational) -> AffineFunction {
        AffineFunction::new(self.coeffs.iter().map(|a| a * s).collect())
    }

    /// `{ y : self(y) >= 0 }`; `None` when the function is constant.
    pub fn nonneg_halfspace(&self) -> Option<HalfSpace> {
        if self.slope().iter().all(Zero::is_zero) {
            None
        } else {
            Some(HalfSpace::new(self.slope().to_vec(), self.constant().clone()))
        }
    }

    /// `y -> self(m^T y)`; slopes transform by `m`.
    pub fn compose_transpose(&self, m: &[Vec<Rational>]) -> AffineFunction {
        let mut c = vec![self.constant().clone()];
        c.extend(m.iter().map(|row| dot(row, self.slope())));
        AffineFunction::new(c)
    }
}

/// Convex piecewise-linear function, the maximum of finitely many affine pieces.
#[derive(Clone, Debug, PartialEq)]
pub struct PlConvexFunction {
    pub pieces: Vec<AffineFunction>,
}

impl PlConvexFunction {
    pub fn new(dim: usize, pieces: Vec<AffineFunction>) -> Result<Self> {
        if pieces.is_empty() {
            return invalid("piecewise-linear function needs at least one piece");
        }
        if pieces.iter().any(|p| p.dim() != dim) {
            return invalid(format!("piece of wrong dimension (expected {dim})"));
        }
        Ok(PlConvexFunction { pieces })
    }

    pub fn affine(f: AffineFunction) -> Self {
        PlConvexFunction { pieces: vec![f] }
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].dim()
    }

    pub fn eval(&self, y: &[Rational]) -> Rational {
        self.pieces.iter().map(|p| p.eval(y)).max().unwrap()
    }

    pub fn eval_f64(&self, y: &[f64]) -> f64 {
        self.pieces.iter().map(|p| p.eval_f64(y)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn at_origin(&self) -> Rational {
        self.pieces.iter().map(|p| p.constant().clone()).max().unwrap()
    }

    pub fn add_affine(&self, h: &AffineFunction) -> PlConvexFunction {
        PlConvexFunction { pieces: self.pieces.iter().map(|p| p.add(h)).collect() }
    }

    pub fn scale(&self, s: &Rational) -> PlConvexFunction {
        assert!(*s >= Rational::zero(), "only non-negative scalings preserve convexity");
        PlConvexFunction { pieces: self.pieces.iter().map(|p| p.scale(s)).collect() }
    }

    pub fn compose_transpose(&self, m: &[Vec<Rational>]) -> PlConvexFunction {
        PlConvexFunction { pieces: self.pieces.iter().map(|p| p.compose_transpose(m)).collect() }
    }

    /// Smallest positive integer `m` such that `m * slope` is integral for every piece.
    pub fn slope_denominator_lcm(&self) -> u64 {
        lcm_denominators(self.pieces.iter().flat_map(|p| p.slope().iter()))
            .to_u64()
            .unwrap_or(u64::MAX)
    }

    pub fn max_over(&self, points: &[RationalVector]) -> Rational {
        points.iter().map(|y| self.eval(y)).max().expect("non-empty point set")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn evaluation_and_arithmetic() {
        let f = AffineFunction::new(vec![rat(3, 11), rat(-3, 22), rat(-3, 22)]);
        assert_eq!(f.eval(&[int(-1), int(2)]), rat(3, 22));
        let g = PlConvexFunction::new(2, vec![AffineFunction::zero(2), AffineFunction::from_ints(&[0, 1, 0])]).unwrap();
        assert_eq!(g.eval(&[int(-1), int(5)]), int(0));
        assert_eq!(g.eval(&[int(2), int(5)]), int(2));
        assert!((g.eval_f64(&[0.5, 0.0]) - 0.5).abs() < 1e-15);
        assert!(PlConvexFunction::new(3, vec![AffineFunction::zero(2)]).is_err());
    }

    #[test]
    fn transpose_composition_moves_slopes() {
        let f = AffineFunction::from_ints(&[1, 1, 0]);
        let m = vec![vec![int(1), int(2)], vec![int(0), int(1)]];
        let g = f.compose_transpose(&m);
        let y = vec![int(3), int(-1)];
        let mty: Vec<Rational> = (0..2).map(|j| (0..2).map(|i| &m[i][j] * &y[i]).sum()).collect();
        assert_eq!(g.eval(&y), f.eval(&mty));
    }
}
