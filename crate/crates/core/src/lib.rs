// NaN-rejecting guards such as `!(x > 0.0)` are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifier;
pub mod disc;
pub mod domain;
pub mod error;
pub mod exhaustion;
pub mod expr;
pub mod hulls;
pub mod levi;
pub mod numerics;
pub mod point;
pub mod reinhardt;
pub mod sampling;
pub mod selftest;

pub use error::{Error, Result};
pub use expr::{parse, wirtinger, Expr};
pub use point::{CPoint, CVector, C64};
