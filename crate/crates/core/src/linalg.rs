//! Small dense floating-point helpers.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut x = b.to_vec();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        if m[p][c].abs() < 1e-300 {
            return None;
        }
        m.swap(p, c);
        x.swap(p, c);
        for i in (c + 1)..n {
            let f = m[i][c] / m[c][c];
            if f != 0.0 {
                for j in c..n {
                    m[i][j] -= f * m[c][j];
                }
                x[i] -= f * x[c];
            }
        }
    }
    for c in (0..n).rev() {
        let s: f64 = ((c + 1)..n).map(|j| m[c][j] * x[j]).sum();
        x[c] = (x[c] - s) / m[c][c];
    }
    Some(x)
}

pub fn determinant(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut m = a.to_vec();
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))
            .unwrap();
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        det *= m[c][c];
        for i in (c + 1)..n {
            let f = m[i][c] / m[c][c];
            for j in c..n {
                m[i][j] -= f * m[c][j];
            }
        }
    }
    det
}

/// Orthonormal basis of the span of `vectors` (modified Gram-Schmidt, drops dependent ones).
pub fn orthonormal_basis(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let nw = norm(&w);
        if nw > 1e-12 * norm(v).max(1.0) {
            basis.push(w.iter().map(|x| x / nw).collect());
        }
    }
    basis
}

/// Square root of the Gram determinant of the columns `vectors`: the k-volume of their parallelotope.
pub fn gram_volume(vectors: &[Vec<f64>]) -> f64 {
    let k = vectors.len();
    if k == 0 {
        return 1.0;
    }
    let g: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| dot(&vectors[i], &vectors[j])).collect())
        .collect();
    determinant(&g).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let a = vec![vec![0.0, 2.0], vec![1.0, 1.0]];
        let x = solve(&a, &[2.0, 3.0]).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
        assert!((determinant(&a) + 2.0).abs() < 1e-15);
    }

    #[test]
    fn gram_schmidt_and_volume() {
        let b = orthonormal_basis(&[vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0], vec![0.0, 1.0, 0.0]]);
        assert_eq!(b.len(), 2);
        assert!(dot(&b[0], &b[1]).abs() < 1e-15);
        assert!((gram_volume(&[vec![1.0, 1.0], vec![0.0, 2.0]]) - 2.0).abs() < 1e-14);
    }
}
