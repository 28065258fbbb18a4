//! Derivative self-test: symbolic Wirtinger derivatives against finite
//! differences of the real partials over a fixed expression corpus.
//!
//! First derivatives use central differences with `h = eps^(1/3) max(1, |x|)`;
//! second derivatives use fourth-order stencils with `h = eps^(1/6) max(1, |x|)`
//! (central second-order stencils at `eps^(1/3)` lose too many digits to
//! round-off to meet `1e-6` on the corpus).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::expr::{parse, wirtinger, Expr};
use crate::point::{CPoint, C64};
use crate::sampling::{par_map, random_phase, stream_rng};

/// Expressions exercised by the self-test, with their dimension.
pub const CORPUS: [(&str, usize); 20] = [
    ("abs2(z1) + abs2(z2) - 1", 2),
    ("abs2(z1) - 1", 2),
    ("abs2(z1) - abs2(z2) + abs2(z2)^2 - 0.1", 2),
    ("re(z1)^2 - im(z1)^2 + abs2(z2) - 1", 2),
    ("ln(abs2(z1))", 2),
    ("-ln(abs(z1))", 2),
    ("exp(re(z1*z2))", 2),
    ("abs(z1)^3 + abs2(z2)", 2),
    ("re(z1^3) + im(z2^2*z1)", 2),
    ("abs2(z1*z2 - 1)", 2),
    ("ln(1 + abs2(z1) + abs2(z2))", 2),
    ("exp(abs2(z1))*re(z2)", 2),
    ("abs2(z1)/(1 + abs2(z2))", 2),
    ("re(conj(z1)*z2)^2", 2),
    ("abs(z1 + 2*z2 + 5)", 2),
    ("im(z1)^4 + re(z2)^2*im(z1)", 2),
    ("exp(-abs2(z1 - z2))", 2),
    ("abs2(z1)^2 - 2*re(z1^2*conj(z2)^2)", 2),
    ("abs2(z1) + abs2(z2) + abs2(z3) - 1", 3),
    ("re(z1*z2*z3) + ln(2 + re(z3))", 3),
];

pub const DEFAULT_POINTS: usize = 50;
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DerivativeKind {
    /// `df/dz_j`, or `df/d conj(z_j)` when `conjugated`.
    First { j: usize, conjugated: bool },
    /// `d^2 f / dz_j d conj(z_k)`.
    Mixed { j: usize, k: usize },
    /// `d^2 f / dz_j dz_k`.
    Unmixed { j: usize, k: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeCheck {
    pub expression: usize,
    pub point: usize,
    pub derivative: DerivativeKind,
    pub symbolic: [f64; 2],
    pub finite_difference: [f64; 2],
    /// `|symbolic - fd| / max(1, |fd|)`.
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub expressions: Vec<String>,
    pub points_per_expression: usize,
    pub seed: u64,
    pub tol: f64,
    pub checked: usize,
    pub max_relative_error: f64,
    pub worst: Option<DerivativeCheck>,
    /// Checks above `tol`, in corpus order.
    pub failures: Vec<DerivativeCheck>,
    pub pass: bool,
}

/// Seeded corpus point: moduli in `[0.5, 1.5]`, uniform phases.
pub fn corpus_point(seed: u64, expression: usize, point: usize, n: usize) -> CPoint {
    let mut rng = stream_rng(
        seed ^ (expression as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
        point as u64,
    );
    CPoint::from(
        (0..n)
            .map(|_| random_phase(&mut rng) * rng.random_range(0.5..=1.5))
            .collect::<Vec<C64>>(),
    )
}

fn shifted(z: &[C64], coord: usize, t: f64) -> Vec<C64> {
    let mut w = z.to_vec();
    if coord.is_multiple_of(2) {
        w[coord / 2].re += t;
    } else {
        w[coord / 2].im += t;
    }
    w
}

fn coord_value(z: &[C64], coord: usize) -> f64 {
    if coord.is_multiple_of(2) {
        z[coord / 2].re
    } else {
        z[coord / 2].im
    }
}

fn step(z: &[C64], coord: usize, power: f64) -> f64 {
    f64::EPSILON.powf(power) * coord_value(z, coord).abs().max(1.0)
}

fn first_partial(f: &Expr, z: &[C64], c: usize) -> Result<C64> {
    let h = step(z, c, 1.0 / 3.0);
    Ok((f.eval(&shifted(z, c, h))? - f.eval(&shifted(z, c, -h))?) / (2.0 * h))
}

fn five_point(g: &dyn Fn(f64) -> Result<C64>, h: f64) -> Result<C64> {
    Ok((g(-2.0 * h)? - g(-h)? * 8.0 + g(h)? * 8.0 - g(2.0 * h)?) / (12.0 * h))
}

fn second_partial(f: &Expr, z: &[C64], a: usize, b: usize) -> Result<C64> {
    let ha = step(z, a, 1.0 / 6.0);
    if a == b {
        let v = |t: f64| f.eval(&shifted(z, a, t));
        return Ok(
            (-v(2.0 * ha)? + v(ha)? * 16.0 - v(0.0)? * 30.0 + v(-ha)? * 16.0 - v(-2.0 * ha)?)
                / (12.0 * ha * ha),
        );
    }
    let hb = step(z, b, 1.0 / 6.0);
    five_point(
        &|s| {
            let w = shifted(z, a, s);
            five_point(&|t| f.eval(&shifted(&w, b, t)), hb)
        },
        ha,
    )
}

/// Finite-difference value of a Wirtinger derivative at `z`.
pub fn finite_difference(f: &Expr, z: &[C64], d: DerivativeKind) -> Result<C64> {
    let i = C64::new(0.0, 1.0);
    match d {
        DerivativeKind::First { j, conjugated } => {
            let fx = first_partial(f, z, 2 * j)?;
            let fy = first_partial(f, z, 2 * j + 1)?;
            Ok(if conjugated {
                (fx + i * fy) * 0.5
            } else {
                (fx - i * fy) * 0.5
            })
        }
        DerivativeKind::Mixed { j, k } | DerivativeKind::Unmixed { j, k } => {
            let (xj, yj, xk, yk) = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1);
            let xx = second_partial(f, z, xj, xk)?;
            let yy = second_partial(f, z, yj, yk)?;
            let xy = second_partial(f, z, xj, yk)?;
            let yx = second_partial(f, z, yj, xk)?;
            Ok(match d {
                DerivativeKind::Mixed { .. } => (xx + yy + i * (xy - yx)) * 0.25,
                _ => (xx - yy - i * (xy + yx)) * 0.25,
            })
        }
    }
}

fn symbolic(f: &Expr, d: DerivativeKind) -> Expr {
    match d {
        DerivativeKind::First { j, conjugated } => wirtinger(f, j + 1, conjugated),
        DerivativeKind::Mixed { j, k } => wirtinger(&wirtinger(f, j + 1, false), k + 1, true),
        DerivativeKind::Unmixed { j, k } => wirtinger(&wirtinger(f, j + 1, false), k + 1, false),
    }
}

/// Every first, mixed and unmixed second derivative in dimension `n`.
pub fn derivative_kinds(n: usize) -> Vec<DerivativeKind> {
    let mut out = Vec::new();
    for j in 0..n {
        for conjugated in [false, true] {
            out.push(DerivativeKind::First { j, conjugated });
        }
    }
    for j in 0..n {
        for k in 0..n {
            out.push(DerivativeKind::Mixed { j, k });
            out.push(DerivativeKind::Unmixed { j, k });
        }
    }
    out
}

const MAX_FAILURES: usize = 32;

/// Runs the self-test over `expressions` (text, dimension).
pub fn derivative_selftest(
    expressions: &[(String, usize)],
    points: usize,
    seed: u64,
    tol: f64,
) -> Result<SelftestReport> {
    let mut checks = Vec::new();
    for (e, (text, n)) in expressions.iter().enumerate() {
        let f = parse(text, *n)?;
        let kinds = derivative_kinds(*n);
        let derivs: Vec<(DerivativeKind, Expr)> =
            kinds.iter().map(|&d| (d, symbolic(&f, d))).collect();
        let per_point = par_map(points, |p| -> Result<Vec<DerivativeCheck>> {
            let z = corpus_point(seed, e, p, *n);
            derivs
                .iter()
                .map(|(d, g)| {
                    let s = g.eval_at(&z)?;
                    let fd = finite_difference(&f, &z, *d).map_err(|err| err.with_point(&z))?;
                    Ok(DerivativeCheck {
                        expression: e,
                        point: p,
                        derivative: *d,
                        symbolic: [s.re, s.im],
                        finite_difference: [fd.re, fd.im],
                        relative_error: (s - fd).norm() / fd.norm().max(1.0),
                    })
                })
                .collect()
        });
        for r in per_point {
            checks.extend(r?);
        }
    }
    let worst = checks
        .iter()
        .max_by(|a, b| a.relative_error.total_cmp(&b.relative_error))
        .cloned();
    let failing: Vec<_> = checks
        .iter()
        .filter(|c| !(c.relative_error <= tol))
        .cloned()
        .collect();
    Ok(SelftestReport {
        expressions: expressions.iter().map(|(t, _)| t.clone()).collect(),
        points_per_expression: points,
        seed,
        tol,
        checked: checks.len(),
        max_relative_error: worst.as_ref().map_or(0.0, |w| w.relative_error),
        worst,
        pass: failing.is_empty(),
        failures: failing.into_iter().take(MAX_FAILURES).collect(),
    })
}

/// The built-in corpus as owned `(text, dimension)` pairs.
pub fn corpus() -> Vec<(String, usize)> {
    CORPUS.iter().map(|(t, n)| (t.to_string(), *n)).collect()
}
