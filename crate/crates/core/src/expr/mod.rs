//! Expression trees for functions of `z_1, ..., z_n` and their conjugates.
//!
//! An [`Expr`] is immutable and cheap to clone (subtrees are shared through
//! `Arc`). Parsing produces the literal tree for the text; the builder
//! functions in this module ([`add`], [`mul`], ...) fold constants and apply
//! the 0/1 identities, and are what the differentiator uses.

mod eval;
mod parser;
mod wirtinger;

use std::fmt;
use std::sync::Arc;

use crate::point::C64;

pub use eval::{is_real_valued, RealValuedness};
pub use parser::parse;
pub use wirtinger::wirtinger;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Re,
    Im,
    Abs2,
    Abs,
    Ln,
    Exp,
    Conj,
    Neg,
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Re => "re",
            UnaryOp::Im => "im",
            UnaryOp::Abs2 => "abs2",
            UnaryOp::Abs => "abs",
            UnaryOp::Ln => "ln",
            UnaryOp::Exp => "exp",
            UnaryOp::Conj => "conj",
            UnaryOp::Neg => "-",
        }
    }

    pub(crate) fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "re" => UnaryOp::Re,
            "im" => UnaryOp::Im,
            "abs2" => UnaryOp::Abs2,
            "abs" => UnaryOp::Abs,
            "ln" => UnaryOp::Ln,
            "exp" => UnaryOp::Exp,
            "conj" => UnaryOp::Conj,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(C64),
    /// 1-based variable index; `conj` selects `conj(z_index)`.
    Var {
        index: usize,
        conj: bool,
    },
    Unary(UnaryOp, Expr),
    Binary(BinaryOp, Expr, Expr),
    Pow(Expr, u32),
}

/// Immutable expression tree. Equality is structural.
#[derive(Clone, PartialEq)]
pub struct Expr(Arc<Node>);

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(c: C64) -> Self {
        Expr(Arc::new(Node::Const(c)))
    }

    pub fn real(x: f64) -> Self {
        Self::constant(C64::new(x, 0.0))
    }

    pub fn var(index: usize) -> Self {
        Expr(Arc::new(Node::Var { index, conj: false }))
    }

    pub fn conj_var(index: usize) -> Self {
        Expr(Arc::new(Node::Var { index, conj: true }))
    }

    /// Unsimplified unary node.
    pub fn unary(op: UnaryOp, arg: Expr) -> Self {
        Expr(Arc::new(Node::Unary(op, arg)))
    }

    /// Unsimplified binary node.
    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Self {
        Expr(Arc::new(Node::Binary(op, lhs, rhs)))
    }

    /// Unsimplified power node.
    pub fn pow_raw(base: Expr, exponent: u32) -> Self {
        Expr(Arc::new(Node::Pow(base, exponent)))
    }

    pub fn as_const(&self) -> Option<C64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    fn is_const(&self, value: f64) -> bool {
        self.as_const() == Some(C64::new(value, 0.0))
    }

    /// Largest variable index used, 0 for constant expressions.
    pub fn max_var_index(&self) -> usize {
        match self.node() {
            Node::Const(_) => 0,
            Node::Var { index, .. } => *index,
            Node::Unary(_, a) | Node::Pow(a, _) => a.max_var_index(),
            Node::Binary(_, a, b) => a.max_var_index().max(b.max_var_index()),
        }
    }

    /// True if no conjugated variable and no non-holomorphic operation occurs.
    pub fn is_holomorphic_polynomial(&self) -> bool {
        match self.node() {
            Node::Const(_) => true,
            Node::Var { conj, .. } => !conj,
            Node::Unary(UnaryOp::Neg, a) | Node::Pow(a, _) => a.is_holomorphic_polynomial(),
            Node::Unary(..) => false,
            Node::Binary(BinaryOp::Div, _, _) => false,
            Node::Binary(_, a, b) => a.is_holomorphic_polynomial() && b.is_holomorphic_polynomial(),
        }
    }

    /// Number of nodes in the tree (shared subtrees counted per use).
    pub fn size(&self) -> usize {
        match self.node() {
            Node::Const(_) | Node::Var { .. } => 1,
            Node::Unary(_, a) | Node::Pow(a, _) => 1 + a.size(),
            Node::Binary(_, a, b) => 1 + a.size() + b.size(),
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

fn write_real(f: &mut fmt::Formatter<'_>, x: f64) -> fmt::Result {
    if x.is_sign_negative() && x != 0.0 {
        write!(f, "-{}", -x)
    } else {
        write!(f, "{}", x.abs())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) => {
                if c.im == 0.0 && c.re >= 0.0 {
                    write_real(f, c.re)
                } else if c.re == 0.0 && c.im == 1.0 {
                    write!(f, "i")
                } else if c.im == 0.0 {
                    write!(f, "-({})", -c.re)
                } else {
                    write!(f, "(")?;
                    write_real(f, c.re)?;
                    write!(f, " + ")?;
                    write_real(f, c.im)?;
                    write!(f, "*i)")
                }
            }
            Node::Var { index, conj: false } => write!(f, "z{index}"),
            Node::Var { index, conj: true } => write!(f, "conj(z{index})"),
            Node::Unary(UnaryOp::Neg, a) => write!(f, "-({a})"),
            Node::Unary(op, a) => write!(f, "{}({a})", op.name()),
            Node::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Node::Pow(a, k) => write!(f, "({a})^{k}"),
        }
    }
}

// Simplifying builders: constant folding and 0/1 identities only.

pub fn add(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::constant(x + y),
        _ if a.is_const(0.0) => b,
        _ if b.is_const(0.0) => a,
        _ => Expr::binary(BinaryOp::Add, a, b),
    }
}

pub fn sub(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::constant(x - y),
        _ if b.is_const(0.0) => a,
        _ if a.is_const(0.0) => neg(b),
        _ => Expr::binary(BinaryOp::Sub, a, b),
    }
}

pub fn mul(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::constant(x * y),
        _ if a.is_const(0.0) || b.is_const(0.0) => Expr::real(0.0),
        _ if a.is_const(1.0) => b,
        _ if b.is_const(1.0) => a,
        _ => Expr::binary(BinaryOp::Mul, a, b),
    }
}

pub fn div(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) if y != C64::new(0.0, 0.0) => Expr::constant(x / y),
        _ if b.is_const(1.0) => a,
        _ if a.is_const(0.0) && b.as_const().is_none() => a,
        _ => Expr::binary(BinaryOp::Div, a, b),
    }
}

pub fn neg(a: Expr) -> Expr {
    match a.as_const() {
        Some(x) => Expr::constant(-x),
        None => Expr::unary(UnaryOp::Neg, a),
    }
}

pub fn conj(a: Expr) -> Expr {
    match a.node() {
        Node::Const(c) => Expr::constant(c.conj()),
        Node::Var { index, conj } => Expr(Arc::new(Node::Var {
            index: *index,
            conj: !conj,
        })),
        Node::Unary(UnaryOp::Conj, inner) => inner.clone(),
        _ => Expr::unary(UnaryOp::Conj, a),
    }
}

pub fn pow(a: Expr, k: u32) -> Expr {
    match (k, a.as_const()) {
        (0, _) => Expr::real(1.0),
        (1, _) => a,
        (_, Some(c)) => Expr::constant(c.powi(k as i32)),
        _ => Expr::pow_raw(a, k),
    }
}

/// Unary builder that folds constant arguments where the value is defined.
pub fn apply(op: UnaryOp, a: Expr) -> Expr {
    match op {
        UnaryOp::Neg => neg(a),
        UnaryOp::Conj => conj(a),
        _ => match a.as_const() {
            Some(c) => match eval::apply_unary(op, c) {
                Ok(v) => Expr::constant(v),
                Err(_) => Expr::unary(op, a),
            },
            None => Expr::unary(op, a),
        },
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        add(self, rhs)
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        sub(self, rhs)
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        mul(self, rhs)
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        div(self, rhs)
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        neg(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builders_fold_constants_and_identities() {
        let z = Expr::var(1);
        assert_eq!(add(Expr::real(0.0), z.clone()), z);
        assert_eq!(mul(Expr::real(1.0), z.clone()), z);
        assert_eq!(mul(z.clone(), Expr::real(0.0)), Expr::real(0.0));
        assert_eq!(add(Expr::real(2.0), Expr::real(3.0)), Expr::real(5.0));
        assert_eq!(pow(z.clone(), 1), z);
        assert_eq!(conj(Expr::var(2)), Expr::conj_var(2));
        assert_eq!(
            conj(conj(Expr::unary(UnaryOp::Re, z.clone()))).to_string(),
            "re(z1)"
        );
    }

    #[test]
    fn display_negative_and_complex_constants() {
        assert_eq!(Expr::real(-3.0).to_string(), "-(3)");
        assert_eq!(Expr::constant(C64::new(0.0, 1.0)).to_string(), "i");
        assert_eq!(
            Expr::constant(C64::new(1.5, -2.0)).to_string(),
            "(1.5 + -2*i)"
        );
    }

    #[test]
    fn holomorphic_polynomial_detection() {
        assert!(parse("z1^2 + 3*z2", 2).unwrap().is_holomorphic_polynomial());
        assert!(!parse("abs2(z1)", 1).unwrap().is_holomorphic_polynomial());
        assert!(!Expr::conj_var(1).is_holomorphic_polynomial());
    }
}
