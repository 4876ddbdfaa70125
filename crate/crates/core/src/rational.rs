//! Exact rational scalars and the small amount of exact linear algebra the
//! geometry needs (elimination, rank, determinants, kernels).

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{invalid, Result};

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"p/q"`, `"p"` or a finite decimal such as `"-0.25"`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad(s))?;
        let q: BigInt = q.trim().parse().map_err(|_| bad(s))?;
        if q.is_zero() {
            return invalid(format!("zero denominator in {s:?}"));
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let neg = whole.starts_with('-');
        let digits = format!("{}{}", whole.trim_start_matches(['-', '+']), frac);
        let num: BigInt = digits.parse().map_err(|_| bad(s))?;
        let den = num_traits::pow(BigInt::from(10), frac.len());
        let r = Rational::new(num, den);
        return Ok(if neg { -r } else { r });
    }
    let p: BigInt = s.parse().map_err(|_| bad(s))?;
    Ok(Rational::from_integer(p))
}

fn bad(s: &str) -> crate::error::Error {
    crate::error::Error::InvalidInput(format!("cannot parse rational {s:?}"))
}

pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Nearest double (ties to even), saturating to ±∞.
pub fn to_f64(r: &Rational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let n = r.numer().abs();
    let d = r.denom();
    // scale so the integer quotient has 66 to 67 bits, then fold the remainder into a sticky bit
    let shift = 66 + d.bits() as i64 - n.bits() as i64;
    let (num, den) = if shift >= 0 { (n << shift as usize, d.clone()) } else { (n, d << (-shift) as usize) };
    let (q, rem) = num.div_rem(&den);
    let q = q.to_u128().expect("quotient fits in 128 bits") | u128::from(!rem.is_zero());
    let magnitude = if shift > 1000 {
        (q as f64) * 2f64.powi(-1000) * 2f64.powi(-(shift as i32 - 1000))
    } else if shift < -1000 {
        (q as f64) * 2f64.powi(1000) * 2f64.powi(-(shift as i32) - 1000)
    } else {
        (q as f64) * 2f64.powi(-(shift as i32))
    };
    if r.is_negative() {
        -magnitude
    } else {
        magnitude
    }
}

/// Exact value of a finite double.
pub fn from_f64(x: f64) -> Rational {
    Rational::from_float(x).expect("finite float")
}

/// Nearest multiple of `2^-bits`.
pub fn snap_dyadic(r: &Rational, bits: usize) -> Rational {
    let scale = BigInt::one() << bits;
    let scaled = r * Rational::from_integer(scale.clone());
    Rational::new(scaled.round().to_integer(), scale)
}

pub fn lcm_denominators<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()))
}

pub fn is_integral(r: &Rational) -> bool {
    r.denom().is_one()
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

pub fn sub(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Row echelon form in place; returns pivot columns.
fn echelon(m: &mut [Vec<Rational>]) -> Vec<usize> {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for j in c..cols {
            m[r][j] = &m[r][j] * &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in c..cols {
                    let delta = &f * &m[r][j];
                    m[i][j] -= delta;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(rows: &[Vec<Rational>]) -> usize {
    let mut m = rows.to_vec();
    echelon(&mut m).len()
}

/// Affine rank of a point set (dimension of its affine hull); `None` for the empty set.
pub fn affine_rank(points: &[&[Rational]]) -> Option<usize> {
    let (first, rest) = points.split_first()?;
    let diffs: Vec<Vec<Rational>> = rest.iter().map(|p| sub(p, first)).collect();
    Some(rank(&diffs))
}

/// Unique solution of the square system `a x = b`, or `None` if singular.
pub fn solve(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let n = a.len();
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let pivots = echelon(&mut m);
    if pivots.len() != n || pivots.iter().any(|&p| p >= n) {
        return None;
    }
    Some(m.into_iter().map(|mut row| row.pop().unwrap()).collect())
}

pub fn determinant(a: &[Vec<Rational>]) -> Rational {
    let n = a.len();
    let mut m = a.to_vec();
    let mut det = Rational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !m[i][c].is_zero()) else {
            return Rational::zero();
        };
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        det *= &m[c][c];
        let inv = m[c][c].recip();
        for i in (c + 1)..n {
            if !m[i][c].is_zero() {
                let f = &m[i][c] * &inv;
                for j in c..n {
                    let delta = &f * &m[c][j];
                    m[i][j] -= delta;
                }
            }
        }
    }
    det
}

/// Basis of the null space `{x : rows * x = 0}`.
pub fn kernel(rows: &[Vec<Rational>], cols: usize) -> Vec<Vec<Rational>> {
    let mut m = rows.to_vec();
    let pivots = echelon(&mut m);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Rational::zero(); cols];
            v[f] = Rational::one();
            for (r, &p) in pivots.iter().enumerate() {
                v[p] = -m[r][f].clone();
            }
            v
        })
        .collect()
}

/// Integer unimodular matrix `U` (columns) with `p^T U = (g, 0, .., 0)`, `g = gcd(p)`.
/// Columns `2..n` of `U` form a lattice basis of `p^⊥ ∩ Z^n`.
pub fn unimodular_completion(p: &[BigInt]) -> Vec<Vec<BigInt>> {
    let n = p.len();
    let mut u: Vec<Vec<BigInt>> = (0..n)
        .map(|i| (0..n).map(|j| BigInt::from((i == j) as i32)).collect())
        .collect();
    let mut row: Vec<BigInt> = p.to_vec();
    // Euclid on the row via column operations, mirrored on U.
    loop {
        let nonzero: Vec<usize> = (0..n).filter(|&j| !row[j].is_zero()).collect();
        if nonzero.len() <= 1 {
            let j = nonzero.first().copied().unwrap_or(0);
            if j != 0 {
                row.swap(0, j);
                for r in u.iter_mut() {
                    r.swap(0, j);
                }
            }
            if row[0].is_negative() {
                row[0] = -row[0].clone();
                for r in u.iter_mut() {
                    r[0] = -r[0].clone();
                }
            }
            return u;
        }
        let piv = *nonzero.iter().min_by_key(|&&j| row[j].abs()).unwrap();
        for &j in &nonzero {
            if j == piv {
                continue;
            }
            let q = row[j].div_floor(&row[piv]);
            row[j] = &row[j] - &q * &row[piv];
            for r in u.iter_mut() {
                let delta = &q * &r[piv];
                r[j] -= delta;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversion_to_f64_is_correctly_rounded() {
        for (p, q) in [(1i64, 11i64), (-1, 11), (5, 11), (3, 22), (31, 54), (2, 3), (1, 3 << 20), (7, 1)] {
            assert_eq!(to_f64(&rat(p, q)), p as f64 / q as f64, "{p}/{q}");
        }
        assert_eq!(to_f64(&from_f64(0.1)), 0.1);
        assert_eq!(to_f64(&from_f64(-1e-300)), -1e-300);
    }

    #[test]
    fn parse_and_format_round_trip() {
        for s in ["3/11", "-57/349", "4", "0"] {
            assert_eq!(format_rational(&parse_rational(s).unwrap()), s);
        }
        assert_eq!(parse_rational("-0.25").unwrap(), rat(-1, 4));
        assert_eq!(parse_rational("6/4").unwrap(), rat(3, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn solve_and_determinant() {
        let a = vec![vec![int(2), int(1)], vec![int(1), int(3)]];
        let x = solve(&a, &[int(1), int(2)]).unwrap();
        assert_eq!(x, vec![rat(1, 5), rat(3, 5)]);
        assert_eq!(determinant(&a), int(5));
        let singular = vec![vec![int(1), int(2)], vec![int(2), int(4)]];
        assert!(solve(&singular, &[int(0), int(0)]).is_none());
        assert_eq!(rank(&singular), 1);
    }

    #[test]
    fn kernel_is_annihilated() {
        let rows = vec![vec![int(1), int(1), int(2)]];
        let k = kernel(&rows, 3);
        assert_eq!(k.len(), 2);
        for v in k {
            assert!(dot(&rows[0], &v).is_zero());
        }
    }

    #[test]
    fn unimodular_completion_of_primitive_vector() {
        let p: Vec<BigInt> = [-1i64, -1, -2].iter().map(|&x| BigInt::from(x)).collect();
        let u = unimodular_completion(&p);
        let ur: Vec<Vec<Rational>> = u
            .iter()
            .map(|r| r.iter().map(|x| Rational::from_integer(x.clone())).collect())
            .collect();
        assert_eq!(determinant(&ur).abs(), int(1));
        for j in 0..3 {
            let s: BigInt = (0..3).map(|i| &p[i] * &u[i][j]).sum();
            assert_eq!(s, BigInt::from((j == 0) as i32));
        }
    }

    #[test]
    fn snapping() {
        assert_eq!(snap_dyadic(&rat(1, 3), 2), rat(1, 4));
        assert_eq!(from_f64(0.5), rat(1, 2));
    }
}
