//! Complex gradients, Levi matrices and forms, real Hessians, complex tangent
//! spaces, the second-order Taylor split and the Levi polynomial.
//!
//! Conventions: `<u, v> = sum u_j conj(v_j)`; the complex gradient is
//! `(df/dz_1, ..., df/dz_n)`; the Levi form is
//! `L_d f(z) = sum_{j,k} d^2 f/dz_j d conj(z_k) * d_j * conj(d_k)`.
//! Real coordinates are interleaved as `(x_1, y_1, x_2, y_2, ...)` with
//! `z_j = x_j + i y_j`.

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{self, wirtinger, Expr};
use crate::numerics::{frobenius, gram_schmidt, hermitian_eigen};
use crate::point::{inner, CPoint, CVector, C64};
use crate::sampling::gaussian_vector;

/// Tolerance on the imaginary part of a Levi form, relative to its scale.
pub const LEVI_FORM_IMAG_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexGradient {
    pub components: Vec<C64>,
    pub base: CPoint,
}

impl ComplexGradient {
    pub fn norm(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `<d, conj(grad f)> = sum d_j df/dz_j`.
    pub fn pairing(&self, d: &[C64]) -> C64 {
        d.iter().zip(&self.components).map(|(a, g)| a * g).sum()
    }
}

/// `H[j][k] = d^2 f / dz_j d conj(z_k)` at `base`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeviMatrix {
    pub entries: Vec<Vec<C64>>,
    pub base: CPoint,
}

impl LeviMatrix {
    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    /// `sum H_jk u_j conj(v_k)`; `bilinear(d, d)` is the Levi form.
    pub fn bilinear(&self, u: &[C64], v: &[C64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (j, row) in self.entries.iter().enumerate() {
            for (k, h) in row.iter().enumerate() {
                acc += h * u[j] * v[k].conj();
            }
        }
        acc
    }

    /// Real Levi form; fails if the imaginary part is not negligible.
    pub fn form(&self, d: &[C64]) -> Result<f64> {
        let v = self.bilinear(d, d);
        let scale = 1.0 + self.norm() * d.iter().map(|c| c.norm_sqr()).sum::<f64>();
        let tol = LEVI_FORM_IMAG_TOL * scale;
        if v.im.abs() > tol {
            return Err(Error::NotRealValued { imag: v.im, tol });
        }
        Ok(v.re)
    }

    pub fn norm(&self) -> f64 {
        frobenius(&self.entries)
    }

    /// `max |H[k][j] - conj(H[j][k])|`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for k in 0..n {
                worst = worst.max((self.entries[k][j] - self.entries[j][k].conj()).norm());
            }
        }
        worst
    }

    /// Ascending eigenvalues and eigenvectors of the Hermitian part.
    pub fn eigen(&self) -> (Vec<f64>, Vec<Vec<C64>>) {
        hermitian_eigen(&self.entries)
    }

    /// Matrix of the form restricted to the span of `basis`:
    /// `M[p][q] = bilinear(basis[p], basis[q])`.
    pub fn restrict(&self, basis: &[CVector]) -> Vec<Vec<C64>> {
        basis
            .iter()
            .map(|u| basis.iter().map(|v| self.bilinear(u, v)).collect())
            .collect()
    }
}

/// Orthonormal basis of the complex tangent space `{d : <d, conj(grad f(a))> = 0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentBasis {
    pub vectors: Vec<CVector>,
    pub base: CPoint,
    pub gradient_norm: f64,
}

/// The five terms of `f(z) = f(a) + linear + lambda + levi + remainder`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaylorParts {
    pub constant: f64,
    pub linear: f64,
    pub lambda: f64,
    pub levi: f64,
    pub remainder: f64,
}

impl TaylorParts {
    pub fn sum(&self) -> f64 {
        self.constant + self.linear + self.lambda + self.levi + self.remainder
    }
}

/// Default degenerate-gradient threshold `1e-8 (1 + |a|)`.
pub fn default_gradient_tol(a: &CPoint) -> f64 {
    1e-8 * (1.0 + a.norm())
}

/// Symbolic first and second Wirtinger derivatives of a real-valued `f`,
/// built once and evaluated at many points.
#[derive(Debug, Clone)]
pub struct Differentials {
    dim: usize,
    f: Expr,
    grad: Vec<Expr>,
    mixed: Vec<Vec<Expr>>,
    unmixed: Vec<Vec<Expr>>,
}

impl Differentials {
    pub fn new(f: &Expr, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        if f.max_var_index() > dim {
            return Err(Error::VariableOutOfRange {
                index: f.max_var_index(),
                dimension: dim,
            });
        }
        let grad: Vec<Expr> = (1..=dim).map(|j| wirtinger(f, j, false)).collect();
        let mixed = grad
            .iter()
            .map(|g| (1..=dim).map(|k| wirtinger(g, k, true)).collect())
            .collect();
        let unmixed = grad
            .iter()
            .map(|g| (1..=dim).map(|k| wirtinger(g, k, false)).collect())
            .collect();
        Ok(Self {
            dim,
            f: f.clone(),
            grad,
            mixed,
            unmixed,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn function(&self) -> &Expr {
        &self.f
    }

    fn check(&self, z: &CPoint) -> Result<()> {
        z.ensure_dim(self.dim)
    }

    pub fn value(&self, z: &CPoint) -> Result<f64> {
        self.check(z)?;
        Ok(self.f.eval_at(z)?.re)
    }

    pub fn gradient(&self, z: &CPoint) -> Result<ComplexGradient> {
        self.check(z)?;
        let components = self
            .grad
            .iter()
            .map(|g| g.eval_at(z))
            .collect::<Result<Vec<_>>>()?;
        Ok(ComplexGradient {
            components,
            base: z.clone(),
        })
    }

    /// `max_j |df/d conj(z_j) - conj(df/dz_j)|`; zero for real-valued `f`.
    pub fn conjugate_gradient_defect(&self, z: &CPoint) -> Result<f64> {
        let g = self.gradient(z)?;
        let mut worst: f64 = 0.0;
        for j in 0..self.dim {
            let gbar = wirtinger(&self.f, j + 1, true).eval_at(z)?;
            worst = worst.max((gbar - g.components[j].conj()).norm());
        }
        Ok(worst)
    }

    pub fn levi_matrix(&self, z: &CPoint) -> Result<LeviMatrix> {
        self.check(z)?;
        let entries = self
            .mixed
            .iter()
            .map(|row| row.iter().map(|h| h.eval_at(z)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(LeviMatrix {
            entries,
            base: z.clone(),
        })
    }

    /// Symmetrised `d^2 f / dz_j dz_k`.
    pub fn unmixed_hessian(&self, z: &CPoint) -> Result<Vec<Vec<C64>>> {
        self.check(z)?;
        let raw = self
            .unmixed
            .iter()
            .map(|row| row.iter().map(|h| h.eval_at(z)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let n = self.dim;
        Ok((0..n)
            .map(|j| (0..n).map(|k| (raw[j][k] + raw[k][j]) * 0.5).collect())
            .collect())
    }

    /// Real gradient in interleaved coordinates: `f_x = 2 Re g`, `f_y = -2 Im g`.
    pub fn real_gradient(&self, z: &CPoint) -> Result<Vec<f64>> {
        let g = self.gradient(z)?;
        Ok(g.components
            .iter()
            .flat_map(|c| [2.0 * c.re, -2.0 * c.im])
            .collect())
    }

    /// Real `2n x 2n` Hessian assembled from the Wirtinger second derivatives.
    pub fn real_hessian(&self, z: &CPoint) -> Result<Vec<Vec<f64>>> {
        let h = self.levi_matrix(z)?.entries;
        let p = self.unmixed_hessian(z)?;
        let n = self.dim;
        let mut r = vec![vec![0.0; 2 * n]; 2 * n];
        for j in 0..n {
            for k in 0..n {
                r[2 * j][2 * k] = 2.0 * (p[j][k].re + h[j][k].re);
                r[2 * j][2 * k + 1] = 2.0 * (h[j][k].im - p[j][k].im);
                r[2 * j + 1][2 * k] = 2.0 * (h[k][j].im - p[k][j].im);
                r[2 * j + 1][2 * k + 1] = 2.0 * (h[j][k].re - p[j][k].re);
            }
        }
        Ok(r)
    }

    pub fn real_hessian_form(&self, z: &CPoint, d: &[f64]) -> Result<f64> {
        if d.len() != 2 * self.dim {
            return Err(Error::DimensionMismatch {
                expected: 2 * self.dim,
                got: d.len(),
            });
        }
        let r = self.real_hessian(z)?;
        Ok(r.iter()
            .zip(d)
            .map(|(row, dj)| dj * row.iter().zip(d).map(|(h, dk)| h * dk).sum::<f64>())
            .sum())
    }

    /// Tangent basis built by Gram-Schmidt from the standard basis
    /// (`seed == None`) or from seeded Gaussian vectors.
    pub fn tangent_basis(&self, a: &CPoint, tol: f64, seed: Option<u64>) -> Result<TangentBasis> {
        let g = self.gradient(a)?;
        let norm = g.norm();
        if !(norm > tol) {
            return Err(Error::DegenerateGradient { norm, tol });
        }
        let n = self.dim;
        let nu: Vec<C64> = g.components.iter().map(|c| c.conj() / norm).collect();
        let candidates: Vec<Vec<C64>> = match seed {
            None => (0..n)
                .map(|j| {
                    let mut e = vec![C64::new(0.0, 0.0); n];
                    e[j] = C64::new(1.0, 0.0);
                    e
                })
                .collect(),
            Some(s) => {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(s);
                (0..2 * n).map(|_| gaussian_vector(&mut rng, n)).collect()
            }
        };
        let vectors = gram_schmidt(&[nu], candidates, n - 1, 1e-6)
            .into_iter()
            .map(CVector::from)
            .collect::<Vec<_>>();
        if vectors.len() != n - 1 {
            return Err(Error::InvalidInput(
                "tangent basis candidates did not span the complement".into(),
            ));
        }
        Ok(TangentBasis {
            vectors,
            base: a.clone(),
            gradient_norm: norm,
        })
    }

    pub fn taylor_decompose(&self, a: &CPoint, z: &CPoint) -> Result<TaylorParts> {
        self.check(z)?;
        let h: Vec<C64> = z.iter().zip(a.iter()).map(|(x, y)| x - y).collect();
        let constant = self.value(a)?;
        let g = self.gradient(a)?;
        let linear = 2.0 * g.pairing(&h).re;
        let p = self.unmixed_hessian(a)?;
        let mut lam = C64::new(0.0, 0.0);
        for j in 0..self.dim {
            for k in 0..self.dim {
                lam += p[j][k] * h[j] * h[k];
            }
        }
        let levi = self.levi_matrix(a)?.form(&h)?;
        let fz = self.value(z)?;
        Ok(TaylorParts {
            constant,
            linear,
            lambda: lam.re,
            levi,
            remainder: fz - (constant + linear + lam.re + levi),
        })
    }

    /// `g(z) = 2 <z - a, conj(grad f(a))> + sum_{j,k} d^2 f/dz_j dz_k (a) (z_j - a_j)(z_k - a_k)`.
    pub fn levi_polynomial(&self, a: &CPoint) -> Result<Expr> {
        let g = self.gradient(a)?;
        let p = self.unmixed_hessian(a)?;
        let shifted: Vec<Expr> = (0..self.dim)
            .map(|j| expr::sub(Expr::var(j + 1), Expr::constant(a[j])))
            .collect();
        let mut poly = Expr::real(0.0);
        for (gj, hj) in g.components.iter().zip(&shifted) {
            poly = expr::add(poly, expr::mul(Expr::constant(gj * 2.0), hj.clone()));
        }
        for j in 0..self.dim {
            for k in 0..self.dim {
                let term = expr::mul(
                    Expr::constant(p[j][k]),
                    expr::mul(shifted[j].clone(), shifted[k].clone()),
                );
                poly = expr::add(poly, term);
            }
        }
        Ok(poly)
    }
}

pub fn complex_gradient(f: &Expr, z: &CPoint) -> Result<ComplexGradient> {
    Differentials::new(f, z.dim())?.gradient(z)
}

pub fn levi_matrix(f: &Expr, z: &CPoint) -> Result<LeviMatrix> {
    Differentials::new(f, z.dim())?.levi_matrix(z)
}

pub fn levi_form(f: &Expr, z: &CPoint, d: &[C64]) -> Result<f64> {
    levi_matrix(f, z)?.form(d)
}

pub fn real_hessian_form(f: &Expr, x: &CPoint, d: &[f64]) -> Result<f64> {
    Differentials::new(f, x.dim())?.real_hessian_form(x, d)
}

pub fn tangent_basis(f: &Expr, a: &CPoint, tol: f64) -> Result<TangentBasis> {
    Differentials::new(f, a.dim())?.tangent_basis(a, tol, None)
}

pub fn taylor_decompose(f: &Expr, a: &CPoint, z: &CPoint) -> Result<TaylorParts> {
    Differentials::new(f, a.dim())?.taylor_decompose(a, z)
}

pub fn levi_polynomial(f: &Expr, a: &CPoint) -> Result<Expr> {
    Differentials::new(f, a.dim())?.levi_polynomial(a)
}

/// Checks a tangent basis: orthonormality and tangency, returning the worst
/// deviation of each.
pub fn tangent_basis_defects(basis: &TangentBasis, grad: &ComplexGradient) -> (f64, f64) {
    let mut gram: f64 = 0.0;
    let mut tangency: f64 = 0.0;
    for (p, u) in basis.vectors.iter().enumerate() {
        for (q, v) in basis.vectors.iter().enumerate() {
            let target = if p == q { 1.0 } else { 0.0 };
            gram = gram.max((inner(u, v) - C64::new(target, 0.0)).norm());
        }
        tangency = tangency.max(grad.pairing(u).norm());
    }
    (gram, tangency)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pt(v: &[(f64, f64)]) -> CPoint {
        CPoint::from(v.iter().map(|&(a, b)| c(a, b)).collect::<Vec<_>>())
    }

    #[test]
    fn ball_gradient_is_conjugate_offset() {
        let f = parse("abs2(z1 - 0.5) + abs2(z2 - i) - 4", 2).unwrap();
        let z = pt(&[(1.0, 2.0), (-0.5, 0.25)]);
        let g = complex_gradient(&f, &z).unwrap();
        assert!((g.components[0] - c(0.5, -2.0)).norm() < 1e-15);
        assert!((g.components[1] - c(-0.5, 0.75)).norm() < 1e-15);
    }

    #[test]
    fn re_gradient_and_levi_matrix_vanish_appropriately() {
        let f = parse("re(z1)", 2).unwrap();
        let z = pt(&[(0.3, 0.1), (2.0, -1.0)]);
        let g = complex_gradient(&f, &z).unwrap();
        assert_eq!(g.components, vec![c(0.5, 0.0), c(0.0, 0.0)]);
        let h = levi_matrix(&f, &z).unwrap();
        assert!(h.norm() == 0.0);
    }

    #[test]
    fn modulus_fourth_power_gradient() {
        let f = parse("abs2(z1)^2", 1).unwrap();
        let g = complex_gradient(&f, &pt(&[(2.0, 0.0)])).unwrap();
        assert!((g.components[0] - c(16.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn identity_levi_matrix_for_norm_squared() {
        let f = parse("abs2(z1) + abs2(z2)", 2).unwrap();
        let h = levi_matrix(&f, &pt(&[(0.7, -0.2), (1.0, 3.0)])).unwrap();
        assert_eq!(h.entries[0][0], c(1.0, 0.0));
        assert_eq!(h.entries[1][1], c(1.0, 0.0));
        assert_eq!(h.entries[0][1], c(0.0, 0.0));
        assert_eq!(
            levi_form(&f, &h.base, &[c(3.0, 0.0), c(4.0, 0.0)]).unwrap(),
            25.0
        );
        assert_eq!(
            levi_form(&f, &h.base, &[c(0.0, 0.0), c(0.0, 0.0)]).unwrap(),
            0.0
        );
    }

    #[test]
    fn minus_log_modulus_is_pluriharmonic() {
        let f = parse("-ln(abs(z1))", 2).unwrap();
        let h = levi_matrix(&f, &pt(&[(0.6, -0.9), (0.1, 0.1)])).unwrap();
        assert!(h.norm() < 1e-12, "{:?}", h.entries);
    }

    #[test]
    fn indefinite_levi_form() {
        let f = parse("abs2(z1) - abs2(z2)", 2).unwrap();
        let v = levi_form(
            &f,
            &pt(&[(1.0, 0.0), (0.0, 0.0)]),
            &[c(0.0, 0.0), c(1.0, 0.0)],
        )
        .unwrap();
        assert_eq!(v, -1.0);
    }

    #[test]
    fn non_real_function_fails_form_assertion() {
        let f = parse("z1*conj(z1)*i", 1).unwrap();
        assert!(matches!(
            levi_form(&f, &pt(&[(1.0, 0.0)]), &[c(1.0, 0.0)]),
            Err(Error::NotRealValued { .. })
        ));
    }

    #[test]
    fn real_hessian_examples() {
        let f = parse("abs2(z1)", 1).unwrap();
        assert_eq!(
            real_hessian_form(&f, &pt(&[(0.3, 0.3)]), &[1.0, 0.0]).unwrap(),
            2.0
        );
        let f = parse("re(z1)^2 - im(z1)^2", 1).unwrap();
        assert!(
            (real_hessian_form(&f, &pt(&[(0.3, 0.3)]), &[0.0, 1.0]).unwrap() + 2.0).abs() < 1e-15
        );
        let f = parse("re(z1)*im(z1)", 1).unwrap();
        let r = Differentials::new(&f, 1)
            .unwrap()
            .real_hessian(&pt(&[(0.0, 0.0)]))
            .unwrap();
        assert!((r[0][1] - 1.0).abs() < 1e-15 && (r[1][0] - 1.0).abs() < 1e-15);
        let f = parse("abs2(z1)^2", 1).unwrap();
        assert!(
            (real_hessian_form(&f, &pt(&[(1.0, 0.0)]), &[1.0, 0.0]).unwrap() - 12.0).abs() < 1e-12
        );
    }

    #[test]
    fn real_gradient_matches_partials() {
        // f = x y + 3 y
        let f = parse("re(z1)*im(z1) + 3*im(z1)", 1).unwrap();
        let d = Differentials::new(&f, 1).unwrap();
        let g = d.real_gradient(&pt(&[(2.0, 5.0)])).unwrap();
        assert!((g[0] - 5.0).abs() < 1e-14);
        assert!((g[1] - 5.0).abs() < 1e-14);
    }

    #[test]
    fn tangent_bases() {
        let f = parse("abs2(z1) + abs2(z2) - 1", 2).unwrap();
        let b = tangent_basis(&f, &pt(&[(1.0, 0.0), (0.0, 0.0)]), 1e-8).unwrap();
        assert_eq!(b.vectors.len(), 1);
        assert!((b.vectors[0][0]).norm() < 1e-15);
        assert!((b.vectors[0][1].norm() - 1.0).abs() < 1e-15);

        let f = parse("abs2(z1) - 1", 2).unwrap();
        let b = tangent_basis(&f, &pt(&[(1.0, 0.0), (0.5, 0.0)]), 1e-8).unwrap();
        assert!((b.vectors[0][0]).norm() < 1e-15);

        let f = parse("re(z1)", 2).unwrap();
        let a = CPoint::zeros(2);
        let b = tangent_basis(&f, &a, 1e-8).unwrap();
        assert!((b.vectors[0][0]).norm() < 1e-15);
        assert!((b.vectors[0][1].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_gradient_rejected() {
        let f = parse("abs2(z1) + abs2(z2)", 2).unwrap();
        assert!(matches!(
            tangent_basis(&f, &CPoint::zeros(2), 1e-8),
            Err(Error::DegenerateGradient { .. })
        ));
    }

    #[test]
    fn taylor_parts_of_sphere_are_exact() {
        let f = parse("abs2(z1) + abs2(z2) - 1", 2).unwrap();
        let a = pt(&[(1.0, 0.0), (0.0, 0.0)]);
        let z = pt(&[(1.0, 1.0), (1.0, 0.0)]);
        let t = taylor_decompose(&f, &a, &z).unwrap();
        assert_eq!(t.remainder, 0.0);
        assert_eq!(t.levi, 2.0);
        assert_eq!(t.sum(), 2.0);
        let t = taylor_decompose(&f, &a, &a).unwrap();
        assert_eq!(
            (t.linear, t.lambda, t.levi, t.remainder),
            (0.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn levi_polynomial_of_ball() {
        let f = parse("abs2(z1) + abs2(z2) - 1", 2).unwrap();
        let a = pt(&[(1.0, 0.0), (0.0, 0.0)]);
        let g = levi_polynomial(&f, &a).unwrap();
        assert!(g.is_holomorphic_polynomial());
        assert_eq!(g.eval(&a).unwrap(), c(0.0, 0.0));
        let z = pt(&[(1.5, 0.5), (7.0, 1.0)]);
        // 2 (z1 - 1)
        assert!((g.eval(&z).unwrap() - c(1.0, 1.0)).norm() < 1e-15);
        let z = pt(&[(0.9, 0.0), (0.1, 0.0)]);
        assert!(g.eval(&z).unwrap().re < 0.0);
    }
}
