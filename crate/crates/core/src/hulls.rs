//! Planar convex hulls, hull membership by sampled affine functionals, and
//! outer approximations of polynomial hulls by finite polynomial families.
//!
//! Membership verdicts are one-sided: `Outside` always carries a certificate
//! that re-evaluates with a strict margin; `Inside` only means that no tested
//! function separated the query.

use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{CPoint, C64};
use crate::sampling::{gaussian_vector, par_map, random_phase, stream_rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "field", rename_all = "snake_case")]
pub enum PointSet {
    Real {
        dimension: usize,
        points: Vec<Vec<f64>>,
    },
    Complex {
        dimension: usize,
        points: Vec<CPoint>,
    },
}

impl PointSet {
    pub fn real(points: Vec<Vec<f64>>) -> Result<Self> {
        let dimension = uniform_dimension(points.iter().map(|p| p.len()))?;
        Ok(PointSet::Real { dimension, points })
    }

    pub fn complex(points: Vec<CPoint>) -> Result<Self> {
        let dimension = uniform_dimension(points.iter().map(|p| p.dim()))?;
        Ok(PointSet::Complex { dimension, points })
    }

    pub fn len(&self) -> usize {
        match self {
            PointSet::Real { points, .. } => points.len(),
            PointSet::Complex { points, .. } => points.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dimension(&self) -> usize {
        match self {
            PointSet::Real { dimension, .. } | PointSet::Complex { dimension, .. } => *dimension,
        }
    }

    /// Parses one point per line. Real sets list coordinates; complex sets
    /// list `re, im` pairs. Blank lines and `#` comments are ignored.
    pub fn parse(text: &str, complex: bool) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split([',', ';', '\t'])
                .map(|s| s.trim())
                .filter(|s| !s.is_empty())
                .map(f64::from_str)
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::InvalidInput(format!("line {}: {e}", lineno + 1)))?;
            if complex && row.len() % 2 != 0 {
                return Err(Error::InvalidInput(format!(
                    "line {}: complex points need re,im pairs",
                    lineno + 1
                )));
            }
            rows.push(row);
        }
        if complex {
            PointSet::complex(
                rows.into_iter()
                    .map(|r| {
                        CPoint::from(
                            r.chunks(2)
                                .map(|c| C64::new(c[0], c[1]))
                                .collect::<Vec<_>>(),
                        )
                    })
                    .collect(),
            )
        } else {
            PointSet::real(rows)
        }
    }
}

fn uniform_dimension(mut dims: impl Iterator<Item = usize>) -> Result<usize> {
    let first = dims
        .next()
        .ok_or_else(|| Error::InvalidInput("point set is empty".into()))?;
    if first == 0 {
        return Err(Error::InvalidInput(
            "points need at least one coordinate".into(),
        ));
    }
    for d in dims {
        if d != first {
            return Err(Error::DimensionMismatch {
                expected: first,
                got: d,
            });
        }
    }
    Ok(first)
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Counter-clockwise extreme points (monotone chain). Collinear points are
/// dropped; degenerate inputs give a segment or a single point.
pub fn convex_hull_2d(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    if hull.len() == 2 && hull[0] == hull[1] {
        hull.truncate(1);
    }
    hull
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    };
    ((p[0] - a[0] - t * dx).powi(2) + (p[1] - a[1] - t * dy).powi(2)).sqrt()
}

/// Euclidean distance from `p` to a convex polygon given counter-clockwise;
/// zero inside or on the boundary.
pub fn polygon_distance(hull: &[[f64; 2]], p: [f64; 2]) -> f64 {
    match hull.len() {
        0 => f64::INFINITY,
        1 => segment_distance(p, hull[0], hull[0]),
        2 => segment_distance(p, hull[0], hull[1]),
        n => {
            let inside = (0..n).all(|i| cross(hull[i], hull[(i + 1) % n], p) >= 0.0);
            if inside {
                0.0
            } else {
                (0..n)
                    .map(|i| segment_distance(p, hull[i], hull[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HullVerdict {
    Inside,
    Outside,
    /// Best separation margin within `tol` of zero.
    BoundaryAmbiguous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub exponent: Vec<u32>,
    pub coefficient: C64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// `x -> <direction, x> + offset`.
    Affine {
        direction: Vec<f64>,
        offset: f64,
    },
    Polynomial {
        terms: Vec<Monomial>,
    },
    /// The coordinate function `z_index` (0-based).
    Coordinate {
        index: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullMembershipResult {
    pub verdict: HullVerdict,
    pub certificate: Option<Certificate>,
    /// `|A(x)| - sup_K |A|` of the best tested function.
    pub margin: f64,
    pub tested: usize,
    pub tol: f64,
}

fn eval_poly(terms: &[Monomial], z: &[C64]) -> C64 {
    terms
        .iter()
        .map(|t| {
            t.exponent
                .iter()
                .zip(z)
                .fold(t.coefficient, |acc, (&e, &c)| acc * c.powu(e))
        })
        .sum()
}

fn real_points(k: &PointSet) -> Result<&Vec<Vec<f64>>> {
    match k {
        PointSet::Real { points, .. } => Ok(points),
        PointSet::Complex { .. } => Err(Error::InvalidInput("expected a real point set".into())),
    }
}

fn complex_points(k: &PointSet) -> Result<&Vec<CPoint>> {
    match k {
        PointSet::Complex { points, .. } => Ok(points),
        PointSet::Real { .. } => Err(Error::InvalidInput("expected a complex point set".into())),
    }
}

impl Certificate {
    /// `(|f(x)|, sup_K |f|)` recomputed from scratch.
    pub fn evaluate(&self, k: &PointSet, x: &Query) -> Result<(f64, f64)> {
        match (self, x) {
            (Certificate::Affine { direction, offset }, Query::Real(x)) => {
                let f = |p: &[f64]| {
                    (direction.iter().zip(p).map(|(u, v)| u * v).sum::<f64>() + offset).abs()
                };
                let sup = real_points(k)?.iter().map(|p| f(p)).fold(0.0, f64::max);
                Ok((f(x), sup))
            }
            (Certificate::Polynomial { terms }, Query::Complex(z)) => {
                let sup = complex_points(k)?
                    .iter()
                    .map(|p| eval_poly(terms, p).norm())
                    .fold(0.0, f64::max);
                Ok((eval_poly(terms, z).norm(), sup))
            }
            (Certificate::Coordinate { index }, Query::Complex(z)) => {
                let sup = complex_points(k)?
                    .iter()
                    .map(|p| p[*index].norm())
                    .fold(0.0, f64::max);
                Ok((z[*index].norm(), sup))
            }
            _ => Err(Error::InvalidInput(
                "certificate does not match the query type".into(),
            )),
        }
    }

    /// True iff the certificate separates `x` from `k` by more than `tol`.
    pub fn verify(&self, k: &PointSet, x: &Query, tol: f64) -> bool {
        matches!(self.evaluate(k, x), Ok((v, sup)) if v > sup + tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Query {
    Real(Vec<f64>),
    Complex(CPoint),
}

fn verdict(margin: f64, tol: f64) -> HullVerdict {
    if margin > tol {
        HullVerdict::Outside
    } else if margin >= -tol {
        HullVerdict::BoundaryAmbiguous
    } else {
        HullVerdict::Inside
    }
}

/// Seeded affine functionals with their extremes over a fixed set `K`.
/// Functional `i` depends only on `(seed, i)`, so a larger family extends a
/// smaller one.
#[derive(Debug, Clone)]
pub struct AffineFamily {
    directions: Vec<Vec<f64>>,
    /// Offsets as fractions of the bound `B`, in `[-1, 1]`.
    offsets: Vec<f64>,
    k_max: Vec<f64>,
    k_min: Vec<f64>,
    k_bound: f64,
}

impl AffineFamily {
    pub fn new(k: &PointSet, count: usize, seed: u64) -> Result<Self> {
        let points = real_points(k)?;
        let n = k.dimension();
        let drawn = par_map(count, |i| {
            let mut rng = stream_rng(seed, i as u64);
            let u = loop {
                let g: Vec<f64> = gaussian_vector(&mut rng, n).iter().map(|c| c.re).collect();
                let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 0.0 {
                    break g.into_iter().map(|x| x / norm).collect::<Vec<_>>();
                }
            };
            let t: f64 = rng.random_range(-1.0..=1.0);
            let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
            for p in points {
                let v: f64 = u.iter().zip(p).map(|(a, b)| a * b).sum();
                hi = hi.max(v);
                lo = lo.min(v);
            }
            (u, t, hi, lo)
        });
        let k_bound = points.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
        let mut fam = AffineFamily {
            directions: Vec::with_capacity(count),
            offsets: Vec::with_capacity(count),
            k_max: Vec::with_capacity(count),
            k_min: Vec::with_capacity(count),
            k_bound,
        };
        for (u, t, hi, lo) in drawn {
            fam.directions.push(u);
            fam.offsets.push(t);
            fam.k_max.push(hi);
            fam.k_min.push(lo);
        }
        Ok(fam)
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn membership(&self, x: &[f64], tol: f64) -> HullMembershipResult {
        // B = 2 * coordinate bound of K and x
        let bound = 2.0 * x.iter().map(|v| v.abs()).fold(self.k_bound, f64::max);
        let mut best = (f64::NEG_INFINITY, 0usize);
        for i in 0..self.len() {
            let b = self.offsets[i] * bound;
            let ux: f64 = self.directions[i].iter().zip(x).map(|(a, c)| a * c).sum();
            let sup = (self.k_max[i] + b).abs().max((self.k_min[i] + b).abs());
            let margin = (ux + b).abs() - sup;
            if margin > best.0 {
                best = (margin, i);
            }
        }
        let (margin, i) = best;
        let v = verdict(margin, tol);
        HullMembershipResult {
            verdict: v,
            certificate: (v == HullVerdict::Outside).then(|| Certificate::Affine {
                direction: self.directions[i].clone(),
                offset: self.offsets[i] * bound,
            }),
            margin,
            tested: self.len(),
            tol,
        }
    }
}

/// Hull membership against `count` seeded affine functionals
/// `x -> u.x + b` with unit `u` and `b` uniform in `[-B, B]`.
pub fn affine_hull_membership(
    k: &PointSet,
    x: &[f64],
    count: usize,
    seed: u64,
    tol: f64,
) -> Result<HullMembershipResult> {
    if count == 0 {
        return Err(Error::InvalidInput("need at least one functional".into()));
    }
    if x.len() != k.dimension() {
        return Err(Error::DimensionMismatch {
            expected: k.dimension(),
            got: x.len(),
        });
    }
    let mut r = AffineFamily::new(k, count, seed)?.membership(x, tol);
    if let Some(c) = &r.certificate {
        // the stored certificate must re-verify from scratch
        if !c.verify(k, &Query::Real(x.to_vec()), tol) {
            r.verdict = HullVerdict::BoundaryAmbiguous;
            r.certificate = None;
        }
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolynomialFamily {
    Monomials,
    Random,
    MonomialsAndRandom,
}

/// Exponents `J` with `1 <= |J| <= degree`, graded then lexicographic.
pub fn exponents(n: usize, degree: u32) -> Vec<Vec<u32>> {
    fn rec(n: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == n - 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=left).rev() {
            prefix.push(e);
            rec(n, left - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for total in 1..=degree {
        rec(n, total, &mut Vec::new(), &mut out);
    }
    out
}

/// The tested polynomials, in a fixed order: monomials first, then random
/// polynomials whose coefficients are seeded unit-modulus numbers.
pub fn polynomial_family(
    n: usize,
    degree: u32,
    family: PolynomialFamily,
    count: usize,
    seed: u64,
) -> Vec<Vec<Monomial>> {
    let exps = exponents(n, degree);
    let mut out = Vec::new();
    if family != PolynomialFamily::Random {
        out.extend(exps.iter().map(|e| {
            vec![Monomial {
                exponent: e.clone(),
                coefficient: C64::new(1.0, 0.0),
            }]
        }));
    }
    if family != PolynomialFamily::Monomials {
        out.extend(par_map(count, |i| {
            let mut rng = stream_rng(seed, i as u64);
            exps.iter()
                .map(|e| Monomial {
                    exponent: e.clone(),
                    coefficient: random_phase(&mut rng),
                })
                .collect::<Vec<_>>()
        }));
    }
    out
}

pub fn polynomial_hull_membership(
    k: &PointSet,
    z: &CPoint,
    degree: u32,
    family: PolynomialFamily,
    count: usize,
    seed: u64,
    tol: f64,
) -> Result<HullMembershipResult> {
    if degree == 0 {
        return Err(Error::InvalidInput("degree must be at least 1".into()));
    }
    let points = complex_points(k)?;
    z.ensure_dim(k.dimension())?;
    let polys = polynomial_family(k.dimension(), degree, family, count, seed);
    let margins = par_map(polys.len(), |i| {
        let sup = points
            .iter()
            .map(|p| eval_poly(&polys[i], p).norm())
            .fold(0.0, f64::max);
        eval_poly(&polys[i], z).norm() - sup
    });
    let (i, margin) =
        margins
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, m)| {
                if m > best.1 {
                    (i, m)
                } else {
                    best
                }
            });
    let v = verdict(margin, tol);
    Ok(HullMembershipResult {
        verdict: v,
        certificate: (v == HullVerdict::Outside).then(|| Certificate::Polynomial {
            terms: polys[i].clone(),
        }),
        margin,
        tested: polys.len(),
        tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullBound {
    /// `max_j sup_K |z_j|`.
    pub bound: f64,
    pub per_coordinate: Vec<f64>,
}

impl HullBound {
    /// Coordinate certificate for a point outside the bounding polydisc.
    pub fn certify_outside(&self, z: &CPoint, tol: f64) -> Option<Certificate> {
        z.iter()
            .zip(&self.per_coordinate)
            .position(|(c, b)| c.norm() > b + tol)
            .map(|index| Certificate::Coordinate { index })
    }
}

pub fn hull_boundedness_check(k: &PointSet) -> Result<HullBound> {
    let points = complex_points(k)?;
    let per_coordinate: Vec<f64> = (0..k.dimension())
        .map(|j| points.iter().map(|p| p[j].norm()).fold(0.0, f64::max))
        .collect();
    Ok(HullBound {
        bound: per_coordinate.iter().copied().fold(0.0, f64::max),
        per_coordinate,
    })
}

/// `m` points of the unit circle in the plane.
pub fn circle_samples(m: usize) -> PointSet {
    PointSet::Complex {
        dimension: 1,
        points: (0..m)
            .map(|k| {
                CPoint::from(vec![C64::from_polar(
                    1.0,
                    std::f64::consts::TAU * k as f64 / m as f64,
                )])
            })
            .collect(),
    }
}

/// `m x m` grid on the torus `|z_1| = |z_2| = 1`.
pub fn torus_samples(m: usize) -> PointSet {
    let circle: Vec<C64> = (0..m)
        .map(|k| C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / m as f64))
        .collect();
    PointSet::Complex {
        dimension: 2,
        points: circle
            .iter()
            .flat_map(|&a| circle.iter().map(move |&b| CPoint::from(vec![a, b])))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> PointSet {
        PointSet::real(vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
        ])
        .unwrap()
    }

    #[test]
    fn hull_examples() {
        let h = convex_hull_2d(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]]);
        assert_eq!(h, vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        let h = convex_hull_2d(&[[0.0, 0.0], [2.0, 2.0], [1.0, 1.0]]);
        assert_eq!(h, vec![[0.0, 0.0], [2.0, 2.0]]);
        assert_eq!(convex_hull_2d(&[[3.0, 1.0], [3.0, 1.0]]), vec![[3.0, 1.0]]);
    }

    #[test]
    fn polygon_distance_cases() {
        let h = convex_hull_2d(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        assert_eq!(polygon_distance(&h, [0.5, 0.5]), 0.0);
        assert!((polygon_distance(&h, [2.0, 0.5]) - 1.0).abs() < 1e-15);
        assert!((polygon_distance(&h, [2.0, 2.0]) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn affine_examples() {
        let k = square();
        let r = affine_hull_membership(&k, &[0.5, 0.5], 500, 1, 1e-9).unwrap();
        assert_eq!(r.verdict, HullVerdict::Inside);
        let r = affine_hull_membership(&k, &[2.0, 0.0], 500, 1, 1e-9).unwrap();
        assert_eq!(r.verdict, HullVerdict::Outside);
        let c = r.certificate.unwrap();
        assert!(c.verify(&k, &Query::Real(vec![2.0, 0.0]), 1e-9));
    }

    #[test]
    fn polynomial_examples() {
        let k = circle_samples(64);
        for d in 1..=6 {
            let r = polynomial_hull_membership(
                &k,
                &CPoint::zeros(1),
                d,
                PolynomialFamily::MonomialsAndRandom,
                20,
                0,
                1e-9,
            )
            .unwrap();
            assert_ne!(r.verdict, HullVerdict::Outside);
        }
        let two = CPoint::from(vec![C64::new(2.0, 0.0)]);
        let r = polynomial_hull_membership(&k, &two, 1, PolynomialFamily::Monomials, 0, 0, 1e-9)
            .unwrap();
        assert_eq!(r.verdict, HullVerdict::Outside);
        let Some(Certificate::Polynomial { terms }) = &r.certificate else {
            panic!()
        };
        assert_eq!(terms[0].exponent, vec![1]);

        let torus = torus_samples(16);
        let z = CPoint::from(vec![C64::new(0.5, 0.0), C64::new(0.5, 0.0)]);
        let r = polynomial_hull_membership(&torus, &z, 8, PolynomialFamily::Monomials, 0, 0, 1e-9)
            .unwrap();
        assert_eq!(r.verdict, HullVerdict::Inside);
        assert_eq!(r.tested, 44);
    }

    #[test]
    fn boundedness() {
        let b = hull_boundedness_check(&circle_samples(32)).unwrap();
        assert!((b.bound - 1.0).abs() < 1e-15);
        let torus = torus_samples(8);
        let tb = hull_boundedness_check(&torus).unwrap();
        let q = CPoint::from(vec![C64::new(0.0, 0.0), C64::new(5.0, 0.0)]);
        let c = tb.certify_outside(&q, 1e-9).unwrap();
        assert_eq!(c, Certificate::Coordinate { index: 1 });
        assert!(c.verify(&torus, &Query::Complex(q), 1e-9));
    }

    #[test]
    fn parse_point_sets() {
        let k = PointSet::parse("# square\n0,0\n1, 0\n\n1,1\n", false).unwrap();
        assert_eq!(k.len(), 3);
        let c = PointSet::parse("1,0,0,1\n0.5,0.5,-1,2\n", true).unwrap();
        assert_eq!(c.dimension(), 2);
        assert!(PointSet::parse("1,2\n3\n", false).is_err());
        assert!(PointSet::parse("1,2,3\n", true).is_err());
        assert!(PointSet::parse("x,2\n", false).is_err());
    }

    #[test]
    fn exponent_enumeration() {
        assert_eq!(
            exponents(2, 2),
            vec![vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]
        );
        assert_eq!(exponents(3, 1).len(), 3);
    }
}
