//! Logarithmic images of complete Reinhardt domains given as finite unions of
//! polydiscs centred at the origin, and a seeded midpoint test for
//! logarithmic convexity.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::sampling::{par_map, stream_rng};

/// `(ln|z_1|, ..., ln|z_n|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogPoint(pub Vec<f64>);

impl LogPoint {
    pub fn midpoint(&self, other: &LogPoint) -> LogPoint {
        LogPoint(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| 0.5 * (a + b))
                .collect(),
        )
    }

    /// `None` if some coordinate is zero.
    pub fn from_moduli(z: &[crate::C64]) -> Option<LogPoint> {
        z.iter()
            .map(|c| {
                let r = c.norm();
                (r > 0.0).then(|| r.ln())
            })
            .collect::<Option<Vec<_>>>()
            .map(LogPoint)
    }
}

/// Log image of a Reinhardt union: a union of lower-left orthants with
/// corners `ln r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogImage {
    pub corners: Vec<Vec<f64>>,
}

impl LogImage {
    pub fn new(domain: &DomainSpec) -> Result<Self> {
        match domain {
            DomainSpec::ReinhardtUnion { members, .. } => Ok(Self {
                corners: members
                    .iter()
                    .map(|r| r.iter().map(|x| x.ln()).collect())
                    .collect(),
            }),
            other => Err(Error::Unsupported(format!(
                "logarithmic image of a {} domain",
                other.variant_name()
            ))),
        }
    }

    pub fn dimension(&self) -> usize {
        self.corners[0].len()
    }

    /// `max_m min_j (ln r_mj - x_j)`: positive exactly inside the image.
    pub fn defect(&self, x: &LogPoint) -> f64 {
        self.corners
            .iter()
            .map(|c| {
                c.iter()
                    .zip(&x.0)
                    .map(|(r, x)| r - x)
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, x: &LogPoint) -> bool {
        self.corners
            .iter()
            .any(|c| c.iter().zip(&x.0).all(|(r, x)| x < r))
    }
}

pub fn log_image_membership(domain: &DomainSpec, x: &LogPoint) -> Result<bool> {
    let image = LogImage::new(domain)?;
    if x.0.len() != image.dimension() {
        return Err(Error::DimensionMismatch {
            expected: image.dimension(),
            got: x.0.len(),
        });
    }
    Ok(image.contains(x))
}

/// Two image points whose midpoint is not in the image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogConvexityWitness {
    pub p: LogPoint,
    pub q: LogPoint,
    pub midpoint: LogPoint,
    /// Membership defects of `p`, `q` and the midpoint.
    pub defects: [f64; 3],
    pub trial: usize,
}

/// Margin by which witnesses must clear the boundary.
pub const WITNESS_MARGIN: f64 = 1e-9;

impl LogConvexityWitness {
    pub fn from_points(image: &LogImage, p: LogPoint, q: LogPoint, trial: usize) -> Self {
        let midpoint = p.midpoint(&q);
        let defects = [image.defect(&p), image.defect(&q), image.defect(&midpoint)];
        Self {
            p,
            q,
            midpoint,
            defects,
            trial,
        }
    }

    /// Re-evaluates membership from scratch.
    pub fn verify(&self, image: &LogImage) -> bool {
        let mid = self.p.midpoint(&self.q);
        mid == self.midpoint
            && image.contains(&self.p)
            && image.contains(&self.q)
            && !image.contains(&mid)
            && image.defect(&self.p) > WITNESS_MARGIN
            && image.defect(&self.q) > WITNESS_MARGIN
            && image.defect(&mid) < -WITNESS_MARGIN
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum LogConvexityOutcome {
    ConvexSoFar {
        trials: usize,
        acceptance_rate: f64,
    },
    Witness {
        witness: LogConvexityWitness,
        trials_used: usize,
        acceptance_rate: f64,
    },
}

impl LogConvexityOutcome {
    pub fn witness(&self) -> Option<&LogConvexityWitness> {
        match self {
            LogConvexityOutcome::Witness { witness, .. } => Some(witness),
            LogConvexityOutcome::ConvexSoFar { .. } => None,
        }
    }
}

pub const DEFAULT_TRIALS: usize = 10_000;
/// Depth of the sampling box below the smallest corner, in nats.
pub const TAIL: f64 = 10.0;
/// Trial `t` uses a tail of `TAIL / 2^(t mod TAIL_LEVELS)`.
pub const TAIL_LEVELS: usize = 12;
const DRAWS_PER_POINT: usize = 64;
const BATCH: usize = 256;

/// Samples `p`, `q` from the image inside a box reaching `tail` nats below the
/// smallest corner; `(draws, Some((p, q)))` on success.
fn sample_pair<R: Rng>(
    image: &LogImage,
    tail: f64,
    rng: &mut R,
) -> (usize, Option<(LogPoint, LogPoint)>) {
    let n = image.dimension();
    let hi: Vec<f64> = (0..n)
        .map(|j| {
            image
                .corners
                .iter()
                .map(|c| c[j])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let lo: Vec<f64> = (0..n)
        .map(|j| {
            image
                .corners
                .iter()
                .map(|c| c[j])
                .fold(f64::INFINITY, f64::min)
                - tail
        })
        .collect();
    let mut draws = 0;
    let mut draw = |rng: &mut R| {
        for _ in 0..DRAWS_PER_POINT {
            draws += 1;
            let x = LogPoint((0..n).map(|j| rng.random_range(lo[j]..hi[j])).collect());
            if image.defect(&x) > WITNESS_MARGIN {
                return Some(x);
            }
        }
        None
    };
    let p = draw(rng);
    let pair = if p.is_some() { p.zip(draw(rng)) } else { None };
    (draws, pair)
}

/// Seeded midpoint test. Trials run in deterministic batches and the witness
/// with the lowest trial index is returned, so the outcome does not depend
/// on the thread count.
pub fn log_convexity_test(
    domain: &DomainSpec,
    trials: usize,
    seed: u64,
) -> Result<LogConvexityOutcome> {
    let image = LogImage::new(domain)?;
    let (mut accepted, mut attempted) = (0usize, 0usize);
    let mut start = 0;
    while start < trials {
        let len = BATCH.min(trials - start);
        let results = par_map(len, |k| {
            let t = start + k;
            let mut rng = stream_rng(seed, t as u64);
            let tail = TAIL / (1u64 << (t % TAIL_LEVELS)) as f64;
            let (draws, pair) = sample_pair(&image, tail, &mut rng);
            let ok = pair.is_some();
            let witness = pair.and_then(|(p, q)| {
                let w = LogConvexityWitness::from_points(&image, p, q, t);
                (w.defects[2] < -WITNESS_MARGIN).then_some(w)
            });
            (draws, ok, witness)
        });
        for (draws, ok, witness) in results {
            attempted += draws;
            if ok {
                accepted += 1;
            }
            if let Some(w) = witness {
                debug_assert!(w.verify(&image));
                if w.verify(&image) {
                    return Ok(LogConvexityOutcome::Witness {
                        trials_used: w.trial + 1,
                        acceptance_rate: accepted as f64 / (w.trial + 1) as f64,
                        witness: w,
                    });
                }
            }
        }
        start += len;
    }
    if trials > 0 && accepted == 0 {
        return Err(Error::SamplingExhausted {
            accepted,
            attempted,
        });
    }
    Ok(LogConvexityOutcome::ConvexSoFar {
        trials,
        acceptance_rate: if trials == 0 {
            0.0
        } else {
            accepted as f64 / trials as f64
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HolomorphyConclusion {
    NotDomainOfHolomorphy,
    NoObstructionFound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolomorphyReport {
    pub conclusion: HolomorphyConclusion,
    pub message: String,
    pub witness: Option<LogConvexityWitness>,
    pub trials: usize,
    pub seed: u64,
}

pub fn not_domain_of_holomorphy_report(
    domain: &DomainSpec,
    trials: usize,
    seed: u64,
) -> Result<HolomorphyReport> {
    let outcome = log_convexity_test(domain, trials, seed)?;
    Ok(match outcome {
        LogConvexityOutcome::Witness { witness, .. } => HolomorphyReport {
            conclusion: HolomorphyConclusion::NotDomainOfHolomorphy,
            message: "not a domain of holomorphy: the logarithmic image is not convex \
                      (a complete Reinhardt domain of holomorphy is logarithmically convex)"
                .into(),
            witness: Some(witness),
            trials,
            seed,
        },
        LogConvexityOutcome::ConvexSoFar { .. } => HolomorphyReport {
            conclusion: HolomorphyConclusion::NoObstructionFound,
            message: "no obstruction found at this sample size".into(),
            witness: None,
            trials,
            seed,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::C64;

    fn lp(v: &[f64]) -> LogPoint {
        LogPoint(v.to_vec())
    }

    #[test]
    fn membership_examples() {
        let h = DomainSpec::hartogs_figure();
        assert!(log_image_membership(&h, &lp(&[0.9, 1.9])).unwrap());
        assert!(!log_image_membership(&h, &lp(&[1.4, 1.4])).unwrap());
        assert!(log_image_membership(&h, &lp(&[-10.0, -10.0])).unwrap());
        assert!(log_image_membership(&h, &lp(&[1.0])).is_err());
        assert!(log_image_membership(&DomainSpec::unit_ball(2), &lp(&[0.0, 0.0])).is_err());
    }

    #[test]
    fn membership_agrees_with_domain() {
        let h = DomainSpec::hartogs_figure();
        for x in [
            [0.9f64, 1.9],
            [1.4, 1.4],
            [1.9, 0.5],
            [2.1, 0.0],
            [-3.0, 1.99],
        ] {
            let z = crate::CPoint::from(vec![C64::new(x[0].exp(), 0.0), C64::new(0.0, x[1].exp())]);
            assert_eq!(
                log_image_membership(&h, &lp(&x)).unwrap(),
                h.contains(&z).unwrap()
            );
            assert_eq!(LogPoint::from_moduli(&z).unwrap().0.len(), 2);
        }
    }

    #[test]
    fn known_hartogs_triple_is_a_witness() {
        let image = LogImage::new(&DomainSpec::hartogs_figure()).unwrap();
        let w = LogConvexityWitness::from_points(&image, lp(&[0.9, 1.9]), lp(&[1.9, 0.9]), 0);
        assert_eq!(w.midpoint, lp(&[1.4, 1.4]));
        assert!(w.verify(&image));
        assert!((w.defects[2] + 0.4).abs() < 1e-12);
    }

    #[test]
    fn hartogs_figure_has_a_witness() {
        let h = DomainSpec::hartogs_figure();
        let out = log_convexity_test(&h, DEFAULT_TRIALS, 0).unwrap();
        let w = out.witness().expect("witness");
        assert!(w.verify(&LogImage::new(&h).unwrap()));
        let again = log_convexity_test(&h, DEFAULT_TRIALS, 0).unwrap();
        assert_eq!(out, again);
    }

    #[test]
    fn orthants_are_convex() {
        let pd = DomainSpec::reinhardt_union(vec![vec![1.0, 1.0]]).unwrap();
        assert!(log_convexity_test(&pd, 2000, 1)
            .unwrap()
            .witness()
            .is_none());
        let nested = DomainSpec::reinhardt_union(vec![vec![1.0, 1.0], vec![2.0, 3.0]]).unwrap();
        assert!(log_convexity_test(&nested, 2000, 1)
            .unwrap()
            .witness()
            .is_none());
    }

    #[test]
    fn reports() {
        let r = not_domain_of_holomorphy_report(&DomainSpec::hartogs_figure(), DEFAULT_TRIALS, 0)
            .unwrap();
        assert_eq!(r.conclusion, HolomorphyConclusion::NotDomainOfHolomorphy);
        assert!(r.witness.is_some());
        let pd = DomainSpec::reinhardt_union(vec![vec![1.0, 1.0]]).unwrap();
        let r = not_domain_of_holomorphy_report(&pd, 1000, 0).unwrap();
        assert_eq!(r.conclusion, HolomorphyConclusion::NoObstructionFound);
    }
}
