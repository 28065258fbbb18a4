//! Exhaustion functions `|z|^2 - ln d(z, boundary)` and blow-up checks along
//! seeded sequences approaching the boundary (or infinity).

use serde::{Deserialize, Serialize};

use crate::domain::{BoundarySource, DomainSpec, Metric};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::numerics::DoubleDouble;
use crate::point::{CPoint, C64};
use crate::sampling::{par_map, stream_rng, unit_vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExhaustionFunction {
    NormSquared,
    /// `|z|^2 - ln d(z, boundary)`, or `|z|^2` for a domain without boundary.
    NormSquaredMinusLogDistance {
        metric: Metric,
    },
    /// Real part of a user expression.
    User {
        expr: String,
        dimension: usize,
    },
}

/// An exhaustion candidate bound to its domain.
#[derive(Debug, Clone)]
pub struct Exhaustion {
    pub domain: DomainSpec,
    pub function: ExhaustionFunction,
    user: Option<Expr>,
}

impl Exhaustion {
    pub fn new(domain: DomainSpec, function: ExhaustionFunction) -> Result<Self> {
        let user = match &function {
            ExhaustionFunction::User { expr, dimension } => {
                if *dimension != domain.dimension() {
                    return Err(Error::DimensionMismatch {
                        expected: domain.dimension(),
                        got: *dimension,
                    });
                }
                Some(crate::expr::parse(expr, *dimension)?)
            }
            _ => None,
        };
        Ok(Self {
            domain,
            function,
            user,
        })
    }

    pub fn eval(&self, z: &CPoint) -> Result<f64> {
        let norm2: f64 = z.iter().map(|c| c.norm_sqr()).sum();
        match &self.function {
            ExhaustionFunction::NormSquared => {
                z.ensure_dim(self.domain.dimension())?;
                Ok(norm2)
            }
            ExhaustionFunction::NormSquaredMinusLogDistance { metric } => {
                if let DomainSpec::Whole { dimension } = self.domain {
                    z.ensure_dim(dimension)?;
                    return Ok(norm2);
                }
                let d = self.domain.distance_to_boundary(z, *metric)?;
                Ok(norm2 - d.ln())
            }
            ExhaustionFunction::User { .. } => {
                Ok(self.user.as_ref().expect("parsed in new").eval_at(z)?.re)
            }
        }
    }
}

/// The exhaustion `z -> |z|^2 - ln d(z, boundary)` of `domain`.
pub fn build_exhaustion(domain: &DomainSpec, metric: Metric) -> Exhaustion {
    Exhaustion {
        domain: domain.clone(),
        function: ExhaustionFunction::NormSquaredMinusLogDistance { metric },
        user: None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ApproachTarget {
    Boundary { point: CPoint },
    Infinity { direction: CPoint },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproachSequence {
    pub target: ApproachTarget,
    /// Requested boundary distances (or norms, towards infinity).
    pub parameters: Vec<f64>,
    pub points: Vec<CPoint>,
    /// Measured Euclidean distances to the boundary (norms towards infinity).
    pub measured: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExhaustionProbe {
    pub function: ExhaustionFunction,
    pub domain_variant: String,
    pub seed: u64,
    pub sequences: Vec<ApproachSequence>,
    /// Sequences whose construction or evaluation failed.
    pub skipped: usize,
}

/// Boundary distances `10^-1, ..., 10^-STEPS`.
pub const STEPS: i32 = 24;

fn approach_parameters() -> Vec<f64> {
    (1..=STEPS).map(|k| 10f64.powi(-k)).collect()
}

/// `v` with `|v| = radius - d` to double-double accuracy, near `radius * u`
/// (`|u| = 1`). All coordinates but one are scaled by `1 - eta`; the largest
/// one is rotated to the real axis and its small imaginary part solved for.
fn sphere_approach(u: &[C64], radius: f64, d: f64) -> Option<Vec<C64>> {
    let j = (0..u.len()).max_by(|&a, &b| u[a].norm().total_cmp(&u[b].norm()))?;
    let eta = 2.0 * d / radius + 2f64.powi(-40);
    let lambda = 1.0 - eta;
    let mut v: Vec<C64> = u.iter().map(|c| c * (lambda * radius)).collect();
    let x = lambda * radius * u[j].norm();
    v[j] = C64::new(x, 0.0);
    // target (radius - d)^2 = radius^2 - 2 radius d + d^2
    let mut acc = DoubleDouble::default();
    acc.add_product(radius, radius);
    acc.add_product(-2.0 * radius, d);
    acc.add_product(d, d);
    for c in &v {
        acc.add_product(-c.re, c.re);
        acc.add_product(-c.im, c.im);
    }
    let y2 = acc.value();
    if !(y2 > 0.0) {
        return None;
    }
    v[j].im = y2.sqrt();
    Some(v)
}

fn shifted(center: &CPoint, v: Vec<C64>) -> CPoint {
    CPoint::from(
        v.into_iter()
            .zip(center.iter())
            .map(|(a, c)| a + c)
            .collect::<Vec<_>>(),
    )
}

fn face_approach(
    point: &CPoint,
    center: &CPoint,
    face: usize,
    radius: f64,
    d: f64,
) -> Option<CPoint> {
    let v = sphere_approach(&[C64::new(1.0, 0.0)], radius, d)?;
    let mut z = point.clone().into_vec();
    z[face] = center[face] + v[0];
    Some(CPoint::from(z))
}

fn boundary_approach(
    domain: &DomainSpec,
    sample: &crate::domain::BoundarySample,
    d: f64,
) -> Option<CPoint> {
    match (domain, &sample.source) {
        (DomainSpec::Ball { center, radius }, _) => {
            let u = sample.point.sub(center).normalized()?;
            sphere_approach(&u, *radius, d).map(|v| shifted(center, v))
        }
        (DomainSpec::Polydisc { center, radii }, BoundarySource::PolydiscFace { face }) => {
            face_approach(&sample.point, center, *face, radii[*face], d)
        }
        (
            DomainSpec::ReinhardtUnion { members, dimension },
            BoundarySource::ReinhardtFace { member, face },
        ) => face_approach(
            &sample.point,
            &CPoint::zeros(*dimension),
            *face,
            members[*member][*face],
            d,
        ),
        _ => {
            let n = sample.normal.as_ref()?;
            Some(sample.point.add_scaled(n, C64::new(-d, 0.0)))
        }
    }
}

impl ExhaustionProbe {
    /// Records the function along `count` seeded approach sequences.
    pub fn new(exhaustion: &Exhaustion, count: usize, seed: u64) -> Result<Self> {
        let domain = &exhaustion.domain;
        let params = approach_parameters();
        let built: Vec<Option<ApproachSequence>> = if let DomainSpec::Whole { dimension } = domain {
            par_map(count, |i| {
                let mut rng = stream_rng(seed, i as u64);
                let u = CPoint::from(unit_vector(&mut rng, *dimension).into_vec());
                let norms: Vec<f64> = (0..=STEPS / 2).map(|k| 10f64.powi(k)).collect();
                let points: Vec<CPoint> = norms.iter().map(|&t| u.scale(t)).collect();
                let values = points
                    .iter()
                    .map(|z| exhaustion.eval(z))
                    .collect::<Result<Vec<_>>>()
                    .ok()?;
                Some(ApproachSequence {
                    target: ApproachTarget::Infinity { direction: u },
                    measured: points.iter().map(|z| z.norm()).collect(),
                    parameters: norms,
                    points,
                    values,
                })
            })
        } else {
            let samples = domain.boundary_sample(count, seed)?.samples;
            par_map(samples.len(), |i| {
                let s = &samples[i];
                let points = params
                    .iter()
                    .map(|&d| boundary_approach(domain, s, d))
                    .collect::<Option<Vec<_>>>()?;
                let measured = points
                    .iter()
                    .map(|z| domain.distance_to_boundary(z, Metric::Euclidean))
                    .collect::<Result<Vec<_>>>()
                    .ok()?;
                // stop at the first point the function cannot be evaluated at
                let values: Vec<f64> = points
                    .iter()
                    .map_while(|z| exhaustion.eval(z).ok())
                    .collect();
                let k = values.len();
                (k >= 2).then(|| ApproachSequence {
                    target: ApproachTarget::Boundary {
                        point: s.point.clone(),
                    },
                    parameters: params[..k].to_vec(),
                    points: points[..k].to_vec(),
                    measured: measured[..k].to_vec(),
                    values,
                })
            })
        };
        let skipped = built.iter().filter(|s| s.is_none()).count();
        Ok(Self {
            function: exhaustion.function.clone(),
            domain_variant: domain.variant_name().to_string(),
            seed,
            sequences: built.into_iter().flatten().collect(),
            skipped,
        })
    }
}

/// Final value must exceed both thresholds.
pub const BLOWUP_LEVEL: f64 = 50.0;
pub const BLOWUP_RISE: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceVerdict {
    pub first: f64,
    pub last: f64,
    /// Values never drop by more than `tol` over the second half.
    pub eventually_increasing: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub pass: bool,
    pub sequences: Vec<SequenceVerdict>,
    pub tol: f64,
}

pub fn exhaustion_blowup_check(probe: &ExhaustionProbe, tol: f64) -> BlowupReport {
    let sequences: Vec<SequenceVerdict> = probe
        .sequences
        .iter()
        .map(|s| {
            let first = s.values[0];
            let last = *s.values.last().expect("non-empty sequence");
            let tail = &s.values[s.values.len() / 2..];
            let eventually_increasing = tail.windows(2).all(|w| w[1] >= w[0] - tol);
            SequenceVerdict {
                first,
                last,
                eventually_increasing,
                pass: eventually_increasing && last > first + BLOWUP_RISE && last > BLOWUP_LEVEL,
            }
        })
        .collect();
    BlowupReport {
        pass: !sequences.is_empty() && sequences.iter().all(|s| s.pass),
        sequences,
        tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn exhaustion_values() {
        let ball = DomainSpec::unit_ball(2);
        let f = build_exhaustion(&ball, Metric::Euclidean);
        assert_eq!(f.eval(&CPoint::zeros(2)).unwrap(), 0.0);
        let r = 1.0 - 1e-6;
        let z = CPoint::from(vec![c(r, 0.0), c(0.0, 0.0)]);
        let v = f.eval(&z).unwrap();
        assert!((v - (r * r + 1e6f64.ln())).abs() < 1e-8, "{v}");
        assert!((v - 14.8).abs() < 0.05);
        assert_eq!(
            f.eval(&CPoint::from(vec![c(2.0, 0.0), c(0.0, 0.0)])),
            Err(Error::PointOutsideDomain)
        );
        let whole = build_exhaustion(&DomainSpec::Whole { dimension: 2 }, Metric::Euclidean);
        let z = CPoint::from(vec![c(3.0, 1.0), c(0.0, -2.0)]);
        assert!((whole.eval(&z).unwrap() - 14.0).abs() < 1e-12);
    }

    #[test]
    fn tiny_distances_are_resolved() {
        let ball = DomainSpec::unit_ball(2);
        let probe =
            ExhaustionProbe::new(&build_exhaustion(&ball, Metric::Euclidean), 5, 3).unwrap();
        for s in &probe.sequences {
            for (want, got) in s.parameters.iter().zip(&s.measured) {
                assert!((got / want - 1.0).abs() < 1e-3, "{want:e} vs {got:e}");
            }
        }
    }

    #[test]
    fn blowup_examples() {
        let ball = DomainSpec::unit_ball(2);
        let probe =
            ExhaustionProbe::new(&build_exhaustion(&ball, Metric::Euclidean), 20, 1).unwrap();
        assert_eq!(probe.sequences.len(), 20);
        assert!(exhaustion_blowup_check(&probe, 1e-9).pass);

        let bounded = Exhaustion::new(ball, ExhaustionFunction::NormSquared).unwrap();
        let probe = ExhaustionProbe::new(&bounded, 20, 1).unwrap();
        assert!(!exhaustion_blowup_check(&probe, 1e-9).pass);

        let h = DomainSpec::hartogs_figure();
        let probe = ExhaustionProbe::new(&build_exhaustion(&h, Metric::Euclidean), 20, 1).unwrap();
        assert_eq!(probe.skipped, 0);
        assert!(exhaustion_blowup_check(&probe, 1e-9).pass);

        let pd = DomainSpec::polydisc(CPoint::zeros(2), vec![1.0, 2.0]).unwrap();
        let probe = ExhaustionProbe::new(&build_exhaustion(&pd, Metric::Linfty), 20, 1).unwrap();
        assert!(exhaustion_blowup_check(&probe, 1e-9).pass);
    }

    #[test]
    fn whole_space_sequences_go_to_infinity() {
        let w = build_exhaustion(&DomainSpec::Whole { dimension: 2 }, Metric::Euclidean);
        let probe = ExhaustionProbe::new(&w, 4, 0).unwrap();
        assert!(exhaustion_blowup_check(&probe, 1e-9).pass);
    }

    #[test]
    fn user_function_is_truncated_where_it_stops_evaluating() {
        let ball = DomainSpec::unit_ball(1);
        let f = Exhaustion::new(
            ball,
            ExhaustionFunction::User {
                expr: "-ln(1 - abs2(z1))".into(),
                dimension: 1,
            },
        )
        .unwrap();
        let probe = ExhaustionProbe::new(&f, 4, 0).unwrap();
        for s in &probe.sequences {
            // 1 - |z|^2 underflows to zero long before d = 1e-24
            assert!(s.values.len() < STEPS as usize);
            assert!(s.values.windows(2).all(|w| w[1] > w[0]));
        }
        assert!(!exhaustion_blowup_check(&probe, 1e-9).pass);
    }
}
