use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{BinaryOp, Expr, Node, UnaryOp};
use crate::error::{Error, Result};
use crate::point::{CPoint, C64};
use crate::sampling::stream_rng;

/// Relative size of the imaginary part tolerated in a logarithm argument.
const LN_IMAG_TOL: f64 = 1e-12;

fn domain(e: &Expr, reason: impl Into<String>) -> Error {
    Error::Domain {
        subexpr: e.to_string(),
        reason: reason.into(),
        point: None,
    }
}

pub(crate) fn apply_unary(op: UnaryOp, v: C64) -> std::result::Result<C64, String> {
    Ok(match op {
        UnaryOp::Re => C64::new(v.re, 0.0),
        UnaryOp::Im => C64::new(v.im, 0.0),
        UnaryOp::Abs2 => C64::new(v.norm_sqr(), 0.0),
        UnaryOp::Abs => C64::new(v.norm(), 0.0),
        UnaryOp::Exp => v.exp(),
        UnaryOp::Conj => v.conj(),
        UnaryOp::Neg => -v,
        UnaryOp::Ln => {
            if !(v.re > 0.0) || v.im.abs() > LN_IMAG_TOL * v.re {
                return Err(format!("ln of non-positive or non-real value {v}"));
            }
            C64::new(v.re.ln(), 0.0)
        }
    })
}

impl Expr {
    /// Evaluates the expression at `z`.
    pub fn eval(&self, z: &[C64]) -> Result<C64> {
        match self.node() {
            Node::Const(c) => Ok(*c),
            Node::Var { index, conj } => {
                let v = *z.get(index - 1).ok_or(Error::DimensionMismatch {
                    expected: *index,
                    got: z.len(),
                })?;
                Ok(if *conj { v.conj() } else { v })
            }
            Node::Unary(op, a) => {
                let v = a.eval(z)?;
                apply_unary(*op, v).map_err(|reason| domain(self, reason))
            }
            Node::Binary(op, a, b) => {
                let x = a.eval(z)?;
                let y = b.eval(z)?;
                Ok(match op {
                    BinaryOp::Add => x + y,
                    BinaryOp::Sub => x - y,
                    BinaryOp::Mul => x * y,
                    BinaryOp::Div => {
                        if y == C64::new(0.0, 0.0) {
                            return Err(domain(self, "division by zero"));
                        }
                        x / y
                    }
                })
            }
            Node::Pow(a, k) => Ok(a.eval(z)?.powi(*k as i32)),
        }
    }

    /// Evaluates at `z`, attaching the point to any domain error.
    pub fn eval_at(&self, z: &CPoint) -> Result<C64> {
        self.eval(z).map_err(|e| e.with_point(z))
    }

    /// Real part of the value at `z`.
    pub fn eval_real(&self, z: &[C64]) -> Result<f64> {
        Ok(self.eval(z)?.re)
    }
}

/// Outcome of a seeded real-valuedness check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealValuedness {
    pub real: bool,
    pub worst_imag: f64,
    pub worst_point: CPoint,
}

/// Evaluates `f` at `samples` seeded points with coordinates uniform in the
/// square `[-2, 2]^2` and reports whether `max |Im f| <= tol`.
pub fn is_real_valued(
    f: &Expr,
    dimension: usize,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<RealValuedness> {
    if samples == 0 {
        return Err(Error::InvalidInput("samples must be at least 1".into()));
    }
    let mut worst = (f64::NEG_INFINITY, CPoint::zeros(dimension));
    for k in 0..samples {
        let mut rng = stream_rng(seed, k as u64);
        let z = CPoint::from(
            (0..dimension)
                .map(|_| C64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)))
                .collect::<Vec<_>>(),
        );
        let im = f.eval_at(&z)?.im.abs();
        if im > worst.0 {
            worst = (im, z);
        }
    }
    Ok(RealValuedness {
        real: worst.0 <= tol,
        worst_imag: worst.0,
        worst_point: worst.1,
    })
}
