//! Quadrature building blocks: Duffy-collapsed Gauss-Legendre rules on simplices,
//! exponentials of affine functions over simplices, and adaptive tensor
//! Gauss-Kronrod integration over boxes.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::gram_volume;

/// Gauss-Legendre nodes and weights mapped to `[0, 1]`.
pub fn gauss_legendre_unit(order: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(order.max(1)).unwrap());
    rule.as_node_weight_pairs().iter().map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect()
}

/// Sum in a fixed binary-tree order, so the result depends only on the input order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => pairwise_sum(&values[..n / 2]) + pairwise_sum(&values[n / 2..]),
    }
}

/// k-volume of the simplex with the given float vertices.
pub fn simplex_volume(vertices: &[Vec<f64>]) -> f64 {
    let edges: Vec<Vec<f64>> = vertices[1..]
        .iter()
        .map(|v| v.iter().zip(&vertices[0]).map(|(a, b)| a - b).collect())
        .collect();
    let k = edges.len();
    gram_volume(&edges) / (1..=k).map(|i| i as f64).product::<f64>()
}

/// Points and weights of a collapsed tensor rule on a k-simplex (`order` nodes per axis).
pub fn simplex_rule(vertices: &[Vec<f64>], order: usize) -> Vec<(Vec<f64>, f64)> {
    let k = vertices.len() - 1;
    let scale = simplex_volume(vertices) * (1..=k).map(|i| i as f64).product::<f64>();
    if k == 0 {
        return vec![(vertices[0].clone(), 1.0)];
    }
    let gl = gauss_legendre_unit(order);
    let mut out = Vec::with_capacity(gl.len().pow(k as u32));
    let mut idx = vec![0usize; k];
    loop {
        // cube point u -> reference simplex x
        let mut x = vec![0.0; k];
        let mut rest = 1.0;
        let mut w = scale;
        for j in 0..k {
            let (u, wu) = gl[idx[j]];
            x[j] = rest * u;
            w *= wu * rest;
            rest *= 1.0 - u;
        }
        let mut y = vertices[0].clone();
        for j in 0..k {
            for (yi, (a, b)) in y.iter_mut().zip(vertices[j + 1].iter().zip(&vertices[0])) {
                *yi += x[j] * (a - b);
            }
        }
        out.push((y, w));
        let mut j = 0;
        loop {
            idx[j] += 1;
            if idx[j] < gl.len() {
                break;
            }
            idx[j] = 0;
            j += 1;
            if j == k {
                return out;
            }
        }
    }
}

/// `∫_S f` with the collapsed rule.
pub fn integrate_simplex(vertices: &[Vec<f64>], order: usize, f: impl Fn(&[f64]) -> f64) -> f64 {
    let terms: Vec<f64> = simplex_rule(vertices, order).iter().map(|(y, w)| w * f(y)).collect();
    pairwise_sum(&terms)
}

/// Divided difference `exp[a_0, ..., a_m]`, read off the exponential of the bidiagonal matrix
/// with diagonal `a` and unit superdiagonal.
pub fn exp_divided_difference(a: &[f64]) -> f64 {
    let m = a.len();
    let shift = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let spread = a.iter().map(|x| shift - x).fold(0.0, f64::max) + 1.0;
    let squarings = (spread / 0.25).log2().ceil().max(0.0) as u32;
    let s = 0.5f64.powi(squarings as i32);
    let mut base = vec![vec![0.0; m]; m];
    for i in 0..m {
        base[i][i] = (a[i] - shift) * s;
        if i + 1 < m {
            base[i][i + 1] = s;
        }
    }
    let matmul = |x: &[Vec<f64>], y: &[Vec<f64>]| -> Vec<Vec<f64>> {
        (0..m)
            .map(|i| (0..m).map(|j| (0..m).map(|l| x[i][l] * y[l][j]).sum()).collect())
            .collect()
    };
    let mut result: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut term = result.clone();
    for d in 1..=24 {
        term = matmul(&term, &base);
        for row in term.iter_mut() {
            for x in row.iter_mut() {
                *x /= d as f64;
            }
        }
        for i in 0..m {
            for j in 0..m {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    result[0][m - 1] * shift.exp()
}

/// `∫_S exp(φ)` for φ affine with vertex values `values`.
pub fn exp_affine_integral(vertices: &[Vec<f64>], values: &[f64]) -> f64 {
    let k = vertices.len() - 1;
    let fact: f64 = (1..=k).map(|i| i as f64).product();
    fact * simplex_volume(vertices) * exp_divided_difference(values)
}

/// Tensor Gauss-Kronrod 7/15 nodes on `[-1, 1]`.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// 15 Kronrod nodes with Kronrod weights and (zero off the Gauss subset) Gauss weights.
fn gk15() -> Vec<(f64, f64, f64)> {
    let mut out = Vec::with_capacity(15);
    for i in 0..8 {
        let wg = if i % 2 == 1 { WG[i / 2] } else { 0.0 };
        out.push((-XGK[i], WGK[i], wg));
        if i < 7 {
            out.push((XGK[i], WGK[i], wg));
        }
    }
    out
}

#[derive(Clone, Debug)]
struct Cell {
    lo: Vec<f64>,
    hi: Vec<f64>,
    kronrod: f64,
    error: f64,
}

fn eval_cell<F>(lo: Vec<f64>, hi: Vec<f64>, rule: &[(f64, f64, f64)], f: &F) -> Result<Cell>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let n = lo.len();
    let half: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (b - a)).collect();
    let mid: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let jac: f64 = half.iter().product();
    let mut idx = vec![0usize; n];
    let mut kron = Vec::with_capacity(rule.len().pow(n as u32));
    let mut gauss = Vec::with_capacity(kron.capacity());
    let mut x = vec![0.0; n];
    loop {
        let mut wk = jac;
        let mut wg = jac;
        for j in 0..n {
            let (node, k, g) = rule[idx[j]];
            x[j] = mid[j] + half[j] * node;
            wk *= k;
            wg *= g;
        }
        let v = f(&x)?;
        kron.push(wk * v);
        gauss.push(wg * v);
        let mut j = 0;
        loop {
            if j == n {
                let kronrod = pairwise_sum(&kron);
                let error = (kronrod - pairwise_sum(&gauss)).abs();
                return Ok(Cell { lo, hi, kronrod, error });
            }
            idx[j] += 1;
            if idx[j] < rule.len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

fn bisect(c: &Cell) -> Vec<(Vec<f64>, Vec<f64>)> {
    let n = c.lo.len();
    (0..1usize << n)
        .map(|mask| {
            let mut lo = c.lo.clone();
            let mut hi = c.hi.clone();
            for j in 0..n {
                let m = 0.5 * (c.lo[j] + c.hi[j]);
                if mask >> j & 1 == 1 {
                    lo[j] = m;
                } else {
                    hi[j] = m;
                }
            }
            (lo, hi)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoxIntegral {
    pub value: f64,
    pub error: f64,
    pub cells: usize,
}

/// Adaptive integration of `f` over `[-radius, radius]^n`. Cells are evaluated in parallel and
/// summed in a fixed order, so the result does not depend on scheduling.
pub fn integrate_box<F>(n: usize, radius: f64, rel_tol: f64, abs_tol: f64, max_cells: usize, f: F) -> Result<BoxIntegral>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let rule = gk15();
    let initial = 4usize;
    let step = 2.0 * radius / initial as f64;
    let mut seeds = Vec::new();
    for idx in 0..initial.pow(n as u32) {
        let mut lo = vec![0.0; n];
        let mut hi = vec![0.0; n];
        let mut r = idx;
        for j in 0..n {
            let i = r % initial;
            r /= initial;
            lo[j] = -radius + step * i as f64;
            hi[j] = lo[j] + step;
        }
        seeds.push((lo, hi));
    }
    let mut cells: Vec<Cell> = seeds
        .into_par_iter()
        .map(|(lo, hi)| eval_cell(lo, hi, &rule, &f))
        .collect::<Result<_>>()?;
    loop {
        let value = pairwise_sum(&cells.iter().map(|c| c.kronrod).collect::<Vec<_>>());
        let error = pairwise_sum(&cells.iter().map(|c| c.error).collect::<Vec<_>>());
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(BoxIntegral { value, error, cells: cells.len() });
        }
        if cells.len() >= max_cells {
            return Err(Error::Quadrature(format!(
                "adaptive cubature stopped at {} cells with error {error:.3e} (value {value:.6e})",
                cells.len()
            )));
        }
        // refine every cell above the mean error
        let mean = error / cells.len() as f64;
        let (split, keep): (Vec<Cell>, Vec<Cell>) = cells.into_iter().partition(|c| c.error >= mean);
        let children: Vec<(Vec<f64>, Vec<f64>)> = split.iter().flat_map(bisect).collect();
        let fresh: Vec<Cell> = children
            .into_par_iter()
            .map(|(lo, hi)| eval_cell(lo, hi, &rule, &f))
            .collect::<Result<_>>()?;
        cells = keep;
        cells.extend(fresh);
    }
}

/// Area of the unit sphere `S^{n-1}`.
pub fn sphere_area(n: usize) -> f64 {
    use std::f64::consts::PI;
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => {
            // |S^{k+1}| = 2π |S^{k-1}| / k
            let mut s = if n.is_multiple_of(2) { 2.0 * PI } else { 4.0 * PI };
            let mut k = if n.is_multiple_of(2) { 2 } else { 3 };
            while k < n {
                s *= 2.0 * PI / k as f64;
                k += 2;
            }
            s
        }
    }
}

/// `∫_{|x| > R} e^{c - ρ|x|} dx` in `R^n`.
pub fn exponential_tail(n: usize, rho: f64, c: f64, radius: f64) -> f64 {
    // ∫_R^∞ r^{n-1} e^{-ρ r} dr = e^{-ρR} Σ_j (n-1)!/j! R^j / ρ^{n-j}
    let mut sum = 0.0;
    let mut fact_ratio = (1..n).map(|i| i as f64).product::<f64>();
    for j in 0..n {
        if j > 0 {
            fact_ratio /= j as f64;
        }
        sum += fact_ratio * radius.powi(j as i32) / rho.powi((n - j) as i32);
    }
    sphere_area(n) * (c - rho * radius).exp() * sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_rule_integrates_polynomials() {
        let tri = vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 1.0]];
        assert!((integrate_simplex(&tri, 6, |_| 1.0) - 1.0).abs() < 1e-14);
        // ∫ x over the triangle = area * centroid_x = 1 * 2/3
        assert!((integrate_simplex(&tri, 6, |y| y[0]) - 2.0 / 3.0).abs() < 1e-14);
        let tet = vec![vec![0.0; 3], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        // ∫ xyz over the unit tetrahedron = 1/720
        assert!((integrate_simplex(&tet, 6, |y| y[0] * y[1] * y[2]) - 1.0 / 720.0).abs() < 1e-15);
    }

    #[test]
    fn divided_differences_of_exp() {
        let (a, b) = (-3.0f64, 0.5f64);
        assert!((exp_divided_difference(&[a, b]) - (b.exp() - a.exp()) / (b - a)).abs() < 1e-14);
        assert!((exp_divided_difference(&[1.0, 1.0]) - 1f64.exp()).abs() < 1e-14);
        let c = -40.0f64;
        let d2 = ((c.exp() - b.exp()) / (c - b) - (b.exp() - a.exp()) / (b - a)) / (c - a);
        assert!((exp_divided_difference(&[a, b, c]) - d2).abs() < 1e-14);
        let seg = vec![vec![0.0], vec![3.0]];
        let exact = ((-6.0f64).exp() - 1.0) / -2.0;
        assert!((exp_affine_integral(&seg, &[0.0, -6.0]) - exact).abs() < 1e-14);
    }

    #[test]
    fn box_integral_of_a_gaussian() {
        let r = integrate_box(2, 8.0, 1e-12, 0.0, 10_000, |x| Ok((-(x[0] * x[0] + x[1] * x[1])).exp())).unwrap();
        assert!((r.value - std::f64::consts::PI).abs() < 1e-10, "{r:?}");
    }

    #[test]
    fn tail_formula_matches_direct_sums() {
        // n = 1: 2 ∫_R^∞ e^{c-ρr} = 2 e^{c-ρR}/ρ
        assert!((exponential_tail(1, 2.0, 1.0, 3.0) - 2.0 * (1.0f64 - 6.0).exp() / 2.0).abs() < 1e-15);
        // n = 2 at R = 0 recovers 2π/ρ²
        assert!((exponential_tail(2, 0.5, 0.0, 0.0) - 2.0 * std::f64::consts::PI * 4.0).abs() < 1e-12);
        assert!((sphere_area(4) - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-12);
    }
}
