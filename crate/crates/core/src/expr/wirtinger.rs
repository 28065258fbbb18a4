//! Symbolic Wirtinger differentiation.
//!
//! `z_j` and `conj(z_j)` are independent symbols. Non-holomorphic operations
//! are expanded through conjugation:
//! `d conj(u) / dz = conj(d u / d conj(z))`, `re u = (u + conj u) / 2`,
//! `im u = (u - conj u) / 2i`, `abs2 u = u conj(u)`, `abs u = sqrt(abs2 u)`.

use super::{add, apply, conj, div, mul, neg, pow, sub, Expr, Node, UnaryOp};
use crate::point::C64;

/// Returns `df/dz_j` (`conjugated == false`) or `df/d conj(z_j)`.
/// `j` is 1-based.
pub fn wirtinger(f: &Expr, j: usize, conjugated: bool) -> Expr {
    derive(f, j, conjugated)
}

fn derive(e: &Expr, j: usize, c: bool) -> Expr {
    match e.node() {
        Node::Const(_) => Expr::real(0.0),
        Node::Var { index, conj } => Expr::real(if *index == j && *conj == c { 1.0 } else { 0.0 }),
        Node::Unary(op, u) => {
            let du = || derive(u, j, c);
            let du_bar = || conj(derive(u, j, !c));
            match op {
                UnaryOp::Neg => neg(du()),
                UnaryOp::Conj => du_bar(),
                UnaryOp::Re => mul(Expr::real(0.5), add(du(), du_bar())),
                UnaryOp::Im => mul(Expr::constant(C64::new(0.0, -0.5)), sub(du(), du_bar())),
                UnaryOp::Abs2 => add(mul(du(), conj(u.clone())), mul(u.clone(), du_bar())),
                UnaryOp::Abs => {
                    let d_abs2 = add(mul(du(), conj(u.clone())), mul(u.clone(), du_bar()));
                    div(d_abs2, mul(Expr::real(2.0), apply(UnaryOp::Abs, u.clone())))
                }
                UnaryOp::Ln => div(du(), u.clone()),
                UnaryOp::Exp => mul(apply(UnaryOp::Exp, u.clone()), du()),
            }
        }
        Node::Binary(op, a, b) => {
            let da = derive(a, j, c);
            let db = derive(b, j, c);
            match op {
                super::BinaryOp::Add => add(da, db),
                super::BinaryOp::Sub => sub(da, db),
                super::BinaryOp::Mul => add(mul(da, b.clone()), mul(a.clone(), db)),
                super::BinaryOp::Div => div(
                    sub(mul(da, b.clone()), mul(a.clone(), db)),
                    pow(b.clone(), 2),
                ),
            }
        }
        Node::Pow(u, k) => match k {
            0 => Expr::real(0.0),
            _ => mul(
                mul(Expr::real(*k as f64), pow(u.clone(), k - 1)),
                derive(u, j, c),
            ),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn abs2_conjugate_derivative_is_z() {
        let f = parse("abs2(z1)", 1).unwrap();
        assert_eq!(wirtinger(&f, 1, true), Expr::var(1));
        assert_eq!(wirtinger(&f, 1, false), Expr::conj_var(1));
    }

    #[test]
    fn re_and_im_rules() {
        let f = parse("re(z1)", 1).unwrap();
        assert_eq!(wirtinger(&f, 1, false), Expr::real(0.5));
        let f = parse("im(z1)", 1).unwrap();
        let d = wirtinger(&f, 1, false).as_const().unwrap();
        assert_eq!(d, C64::new(1.0, 0.0) / C64::new(0.0, 2.0));
    }

    #[test]
    fn fourth_power_of_modulus() {
        let f = parse("abs2(z1)^2", 1).unwrap();
        let d = wirtinger(&f, 1, true);
        let v = d.eval(&[C64::new(1.0, 0.0)]).unwrap();
        assert!((v - C64::new(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn other_variables_vanish() {
        let f = parse("abs2(z1) + exp(z1)", 2).unwrap();
        assert_eq!(wirtinger(&f, 2, false), Expr::real(0.0));
        assert_eq!(wirtinger(&f, 2, true), Expr::real(0.0));
    }

    #[test]
    fn abs_derivative_guards_zero() {
        let f = parse("abs(z1)", 1).unwrap();
        let d = wirtinger(&f, 1, false);
        assert!(d.eval(&[C64::new(0.0, 0.0)]).is_err());
        let v = d.eval(&[C64::new(3.0, 4.0)]).unwrap();
        // d|z|/dz = conj(z) / (2|z|)
        assert!((v - C64::new(3.0, -4.0) / 10.0).norm() < 1e-15);
    }
}
