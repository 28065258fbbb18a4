//! Small dense linear algebra and compensated arithmetic.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::point::C64;

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching unit eigenvectors.
pub fn hermitian_eigen(m: &[Vec<C64>]) -> (Vec<f64>, Vec<Vec<C64>>) {
    let n = m.len();
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    // Hermitian part; the input is Hermitian up to round-off.
    let mat = DMatrix::from_fn(n, n, |i, j| (m[i][j] + m[j][i].conj()) * 0.5);
    let eig = SymmetricEigen::new(mat);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = order
        .iter()
        .map(|&k| eig.eigenvectors.column(k).iter().copied().collect())
        .collect();
    (values, vectors)
}

/// Ascending eigenvalues and eigenvectors of a real symmetric matrix.
pub fn symmetric_eigen(m: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = m.len();
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let mat = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[i][j] + m[j][i]));
    let eig = SymmetricEigen::new(mat);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = order
        .iter()
        .map(|&k| eig.eigenvectors.column(k).iter().copied().collect())
        .collect();
    (values, vectors)
}

/// Frobenius norm of a complex matrix.
pub fn frobenius(m: &[Vec<C64>]) -> f64 {
    m.iter()
        .flat_map(|row| row.iter())
        .map(|c| c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Orthonormalises `candidates` against the (already orthonormal) `fixed`
/// vectors with two passes of modified Gram-Schmidt, keeping those with
/// residual norm above `drop_tol`, until `want` vectors are collected.
pub fn gram_schmidt(
    fixed: &[Vec<C64>],
    candidates: impl IntoIterator<Item = Vec<C64>>,
    want: usize,
    drop_tol: f64,
) -> Vec<Vec<C64>> {
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(want);
    for mut v in candidates {
        if basis.len() == want {
            break;
        }
        for _ in 0..2 {
            for q in fixed.iter().chain(basis.iter()) {
                let p: C64 = v.iter().zip(q).map(|(a, b)| a * b.conj()).sum();
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= p * y;
                }
            }
        }
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm > drop_tol {
            basis.push(v.into_iter().map(|c| c / norm).collect());
        }
    }
    basis
}

/// Error-free product: `a * b = hi + lo` exactly.
#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let hi = a * b;
    (hi, a.mul_add(b, -hi))
}

/// Error-free sum: `a + b = s + e` exactly.
#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Double-double accumulator for sums of products.
#[derive(Debug, Clone, Copy, Default)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    pub fn new(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    pub fn add(&mut self, x: f64) {
        let (s, e) = two_sum(self.hi, x);
        let lo = self.lo + e;
        let (hi, lo) = two_sum(s, lo);
        self.hi = hi;
        self.lo = lo;
    }

    pub fn add_product(&mut self, a: f64, b: f64) {
        let (p, e) = two_prod(a, b);
        self.add(p);
        self.add(e);
    }

    pub fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// `r^2 - |u|^2` with compensated arithmetic; accurate even when `|u|` is
/// within a few ulps of `r`.
pub fn radius_defect_sq(r: f64, u: &[C64]) -> f64 {
    let mut acc = DoubleDouble::default();
    acc.add_product(r, r);
    for c in u {
        acc.add_product(-c.re, c.re);
        acc.add_product(-c.im, c.im);
    }
    acc.value()
}

/// `r - |u|` evaluated as `(r^2 - |u|^2) / (r + |u|)`.
pub fn radius_defect(r: f64, u: &[C64]) -> f64 {
    let norm = u.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    radius_defect_sq(r, u) / (r + norm)
}

/// Solves `A x = b` for a small real system by LU; `None` if singular.
pub fn solve_real(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let rhs = DVector::from_column_slice(b);
    m.lu().solve(&rhs).map(|x| x.iter().copied().collect())
}
