//! Points and directions in complex n-space.

use std::ops::{Deref, Index};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

macro_rules! complex_tuple {
    ($name:ident, $doc:literal) => {
        #[doc = $doc]
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(Vec<C64>);

        impl $name {
            pub fn new(coords: Vec<C64>) -> Result<Self> {
                if coords.is_empty() {
                    return Err(Error::InvalidInput("dimension must be at least 1".into()));
                }
                Ok(Self(coords))
            }

            pub fn zeros(n: usize) -> Self {
                Self(vec![C64::new(0.0, 0.0); n])
            }

            pub fn from_real(xs: &[f64]) -> Self {
                Self(xs.iter().map(|&x| C64::new(x, 0.0)).collect())
            }

            pub fn dim(&self) -> usize {
                self.0.len()
            }

            pub fn as_slice(&self) -> &[C64] {
                &self.0
            }

            pub fn into_vec(self) -> Vec<C64> {
                self.0
            }

            /// Euclidean norm.
            pub fn norm(&self) -> f64 {
                self.0.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
            }

            /// Max-modulus norm.
            pub fn norm_inf(&self) -> f64 {
                self.0.iter().map(|c| c.norm()).fold(0.0, f64::max)
            }

            pub fn ensure_dim(&self, n: usize) -> Result<()> {
                if self.dim() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: self.dim(),
                    });
                }
                Ok(())
            }
        }

        impl Deref for $name {
            type Target = [C64];
            fn deref(&self) -> &[C64] {
                &self.0
            }
        }

        impl Index<usize> for $name {
            type Output = C64;
            fn index(&self, i: usize) -> &C64 {
                &self.0[i]
            }
        }

        impl From<Vec<C64>> for $name {
            fn from(v: Vec<C64>) -> Self {
                Self(v)
            }
        }
    };
}

complex_tuple!(CPoint, "A point of complex n-space.");
complex_tuple!(CVector, "A complex direction vector.");

impl CPoint {
    pub fn add_scaled(&self, dir: &[C64], scale: C64) -> CPoint {
        CPoint(
            self.0
                .iter()
                .zip(dir)
                .map(|(&a, &d)| a + d * scale)
                .collect(),
        )
    }

    pub fn sub(&self, other: &CPoint) -> CVector {
        CVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, t: f64) -> CPoint {
        CPoint(self.0.iter().map(|c| c * t).collect())
    }

    pub fn distance(&self, other: &CPoint) -> f64 {
        self.sub(other).norm()
    }
}

impl CVector {
    pub fn scale(&self, c: C64) -> CVector {
        CVector(self.0.iter().map(|x| x * c).collect())
    }

    /// Hermitian product `sum u_j conj(v_j)`.
    pub fn inner(&self, other: &[C64]) -> C64 {
        inner(&self.0, other)
    }

    pub fn normalized(&self) -> Option<CVector> {
        let n = self.norm();
        (n > 0.0).then(|| CVector(self.0.iter().map(|c| c / n).collect()))
    }
}

/// Hermitian product `sum u_j conj(v_j)`.
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a * b.conj()).sum()
}
