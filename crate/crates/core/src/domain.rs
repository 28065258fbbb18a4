//! Declarative domains: membership, boundary sampling, and Euclidean or
//! max-modulus (L-infinity) distances to the boundary.
//!
//! The L-infinity metric is `rho(z, w) = max_j |z_j - w_j|`; its balls are
//! polydiscs. Ball and polydisc distances are closed-form and use compensated
//! arithmetic so that points a few ulps from the boundary still get a
//! meaningful distance. Sublevel distances are estimated by bisection along
//! seeded rays and are resolution-limited.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{self, Expr, UnaryOp};
use crate::numerics::radius_defect_sq;
use crate::point::{CPoint, CVector, C64};
use crate::sampling::{ball_point, disc_point, par_map, stream_rng, unit_vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
    Linfty,
}

impl std::str::FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" => Ok(Metric::Euclidean),
            "linfty" | "linf" | "sup" => Ok(Metric::Linfty),
            other => Err(Error::InvalidInput(format!("unknown metric `{other}`"))),
        }
    }
}

/// Axis-aligned box `|Re(z_j - c_j)| <= h`, `|Im(z_j - c_j)| <= h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub center: CPoint,
    pub half_width: f64,
}

impl BoundingBox {
    pub fn contains(&self, z: &[C64]) -> bool {
        z.iter().zip(self.center.iter()).all(|(a, c)| {
            (a.re - c.re).abs() <= self.half_width && (a.im - c.im).abs() <= self.half_width
        })
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> CPoint {
        let h = self.half_width;
        CPoint::from(
            self.center
                .iter()
                .map(|c| c + C64::new(rng.random_range(-h..=h), rng.random_range(-h..=h)))
                .collect::<Vec<_>>(),
        )
    }

    /// Euclidean diameter.
    pub fn diameter(&self) -> f64 {
        2.0 * self.half_width * ((2 * self.center.dim()) as f64).sqrt()
    }

    /// Largest `t >= 0` with `z + t u` inside the box (`z` inside).
    fn exit_time(&self, z: &[C64], u: &[C64]) -> f64 {
        let mut t = f64::INFINITY;
        for ((a, d), c) in z.iter().zip(u).zip(self.center.iter()) {
            for (x, v, m) in [(a.re, d.re, c.re), (a.im, d.im, c.im)] {
                if v > 0.0 {
                    t = t.min((m + self.half_width - x) / v);
                } else if v < 0.0 {
                    t = t.min((m - self.half_width - x) / v);
                }
            }
        }
        t.max(0.0)
    }
}

/// A domain in complex n-space.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainSpec {
    Ball {
        center: CPoint,
        radius: f64,
    },
    Polydisc {
        center: CPoint,
        radii: Vec<f64>,
    },
    /// Union of polydiscs centred at the origin, given by their radii.
    ReinhardtUnion {
        dimension: usize,
        members: Vec<Vec<f64>>,
    },
    /// `{ z : Re f(z) < level }`, optionally restricted for sampling to `bbox`.
    Sublevel {
        dimension: usize,
        f: Expr,
        level: f64,
        bbox: Option<BoundingBox>,
    },
    Intersection {
        members: Vec<DomainSpec>,
    },
    /// All of complex n-space (empty boundary).
    Whole {
        dimension: usize,
    },
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "radius {r} must be positive and finite"
        )));
    }
    Ok(())
}

impl DomainSpec {
    pub fn ball(center: CPoint, radius: f64) -> Result<Self> {
        check_radius(radius)?;
        Ok(DomainSpec::Ball { center, radius })
    }

    pub fn unit_ball(n: usize) -> Self {
        DomainSpec::Ball {
            center: CPoint::zeros(n),
            radius: 1.0,
        }
    }

    pub fn polydisc(center: CPoint, radii: Vec<f64>) -> Result<Self> {
        center.ensure_dim(radii.len())?;
        radii.iter().try_for_each(|&r| check_radius(r))?;
        Ok(DomainSpec::Polydisc { center, radii })
    }

    pub fn reinhardt_union(members: Vec<Vec<f64>>) -> Result<Self> {
        let dimension = members.first().map(|m| m.len()).ok_or_else(|| {
            Error::InvalidInput("Reinhardt union needs at least one member".into())
        })?;
        if dimension == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        for m in &members {
            if m.len() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    got: m.len(),
                });
            }
            m.iter().try_for_each(|&r| check_radius(r))?;
        }
        Ok(DomainSpec::ReinhardtUnion { dimension, members })
    }

    /// `Delta(0, (e, e^2)) U Delta(0, (e^2, e))`.
    pub fn hartogs_figure() -> Self {
        let e = std::f64::consts::E;
        DomainSpec::ReinhardtUnion {
            dimension: 2,
            members: vec![vec![e, e * e], vec![e * e, e]],
        }
    }

    pub fn sublevel(
        f: Expr,
        dimension: usize,
        level: f64,
        bbox: Option<BoundingBox>,
    ) -> Result<Self> {
        if f.max_var_index() > dimension {
            return Err(Error::VariableOutOfRange {
                index: f.max_var_index(),
                dimension,
            });
        }
        if let Some(b) = &bbox {
            b.center.ensure_dim(dimension)?;
            check_radius(b.half_width)?;
        }
        Ok(DomainSpec::Sublevel {
            dimension,
            f,
            level,
            bbox,
        })
    }

    pub fn intersection(members: Vec<DomainSpec>) -> Result<Self> {
        let n = members
            .first()
            .map(|m| m.dimension())
            .ok_or_else(|| Error::InvalidInput("intersection needs at least one member".into()))?;
        for m in &members {
            if m.dimension() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: m.dimension(),
                });
            }
        }
        Ok(DomainSpec::Intersection { members })
    }

    pub fn dimension(&self) -> usize {
        match self {
            DomainSpec::Ball { center, .. } | DomainSpec::Polydisc { center, .. } => center.dim(),
            DomainSpec::ReinhardtUnion { dimension, .. }
            | DomainSpec::Sublevel { dimension, .. }
            | DomainSpec::Whole { dimension } => *dimension,
            DomainSpec::Intersection { members } => members[0].dimension(),
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            DomainSpec::Ball { .. } => "ball",
            DomainSpec::Polydisc { .. } => "polydisc",
            DomainSpec::ReinhardtUnion { .. } => "reinhardt",
            DomainSpec::Sublevel { .. } => "sublevel",
            DomainSpec::Intersection { .. } => "intersection",
            DomainSpec::Whole { .. } => "whole",
        }
    }

    /// Strict membership.
    pub fn contains(&self, z: &CPoint) -> Result<bool> {
        z.ensure_dim(self.dimension())?;
        Ok(match self {
            DomainSpec::Ball { center, radius } => radius_defect_sq(*radius, &z.sub(center)) > 0.0,
            DomainSpec::Polydisc { center, radii } => polydisc_contains(center, radii, z),
            DomainSpec::ReinhardtUnion { members, .. } => members
                .iter()
                .any(|r| polydisc_contains(&CPoint::zeros(r.len()), r, z)),
            DomainSpec::Sublevel { f, level, .. } => f.eval_at(z)?.re < *level,
            DomainSpec::Intersection { members } => {
                for m in members {
                    if !m.contains(z)? {
                        return Ok(false);
                    }
                }
                true
            }
            DomainSpec::Whole { .. } => true,
        })
    }

    /// Box used for rejection sampling, when one is known.
    pub fn sampling_box(&self) -> Option<BoundingBox> {
        match self {
            DomainSpec::Ball { center, radius } => Some(BoundingBox {
                center: center.clone(),
                half_width: *radius,
            }),
            DomainSpec::Polydisc { center, radii } => Some(BoundingBox {
                center: center.clone(),
                half_width: radii.iter().copied().fold(0.0, f64::max),
            }),
            DomainSpec::ReinhardtUnion { dimension, members } => Some(BoundingBox {
                center: CPoint::zeros(*dimension),
                half_width: members.iter().flatten().copied().fold(0.0, f64::max),
            }),
            DomainSpec::Sublevel { bbox, .. } => bbox.clone(),
            DomainSpec::Intersection { members } => members
                .iter()
                .filter_map(|m| m.sampling_box())
                .min_by(|a, b| a.half_width.total_cmp(&b.half_width)),
            DomainSpec::Whole { .. } => None,
        }
    }

    /// `count` seeded points of the domain (analytic for balls and
    /// polydiscs, rejection sampling from [`Self::sampling_box`] otherwise).
    pub fn interior_sample(&self, count: usize, seed: u64) -> Result<Vec<CPoint>> {
        let bbox = self.sampling_box();
        let results = par_map(count, |i| -> Result<CPoint> {
            let mut rng = stream_rng(seed, i as u64);
            match self {
                DomainSpec::Ball { center, radius } => loop {
                    let z = ball_point(&mut rng, center, *radius);
                    if self.contains(&z)? {
                        return Ok(z);
                    }
                },
                DomainSpec::Polydisc { center, radii } => loop {
                    let z = CPoint::from(
                        center
                            .iter()
                            .zip(radii)
                            .map(|(&c, &r)| disc_point(&mut rng, c, r))
                            .collect::<Vec<_>>(),
                    );
                    if self.contains(&z)? {
                        return Ok(z);
                    }
                },
                _ => {
                    let b = bbox.as_ref().ok_or_else(|| {
                        Error::Unsupported(format!(
                            "interior sampling of unbounded {} domain without a bounding box",
                            self.variant_name()
                        ))
                    })?;
                    const ATTEMPTS: usize = 100_000;
                    for _ in 0..ATTEMPTS {
                        let z = b.sample(&mut rng);
                        if self.contains(&z)? {
                            return Ok(z);
                        }
                    }
                    Err(Error::SamplingExhausted {
                        accepted: 0,
                        attempted: ATTEMPTS,
                    })
                }
            }
        });
        results.into_iter().collect()
    }

    /// Signed distance: negative inside, positive outside.
    pub fn signed_distance(&self, z: &CPoint, metric: Metric) -> Result<f64> {
        z.ensure_dim(self.dimension())?;
        match self {
            DomainSpec::Ball { center, radius } => {
                Ok(ball_signed_distance(&z.sub(center), *radius, metric))
            }
            DomainSpec::Polydisc { center, radii } => {
                Ok(polydisc_signed_distance(&z.sub(center), radii, metric))
            }
            DomainSpec::ReinhardtUnion { members, .. } => {
                let ds: Vec<f64> = members
                    .iter()
                    .map(|r| polydisc_signed_distance(z, r, metric))
                    .collect();
                Ok(if self.contains(z)? {
                    // deepest member containing z
                    ds.iter().copied().filter(|d| *d < 0.0).fold(0.0, f64::min)
                } else {
                    ds.iter().copied().fold(f64::INFINITY, f64::min).max(0.0)
                })
            }
            DomainSpec::Sublevel { .. } => {
                Ok(self.sublevel_distance(z, metric, DEFAULT_RAYS)?.signed)
            }
            DomainSpec::Intersection { members } => {
                let ds = members
                    .iter()
                    .map(|m| m.signed_distance(z, metric))
                    .collect::<Result<Vec<_>>>()?;
                // exact inside; a lower bound of the exterior distance outside
                Ok(ds.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            }
            DomainSpec::Whole { .. } => Ok(f64::NEG_INFINITY),
        }
    }

    /// Distance from an interior point to the boundary.
    pub fn distance_to_boundary(&self, z: &CPoint, metric: Metric) -> Result<f64> {
        if !self.contains(z)? {
            return Err(Error::PointOutsideDomain);
        }
        Ok((-self.signed_distance(z, metric)?).max(0.0))
    }

    /// Ray-bisection estimate of the signed distance for a sublevel domain.
    pub fn sublevel_distance(
        &self,
        z: &CPoint,
        metric: Metric,
        rays: usize,
    ) -> Result<DistanceEstimate> {
        let DomainSpec::Sublevel {
            f,
            level,
            bbox,
            dimension,
        } = self
        else {
            return Err(Error::Unsupported(
                "ray distance needs a sublevel domain".into(),
            ));
        };
        let bbox = bbox
            .as_ref()
            .ok_or_else(|| Error::Unsupported("sublevel distance needs a bounding box".into()))?;
        let inside = f.eval_at(z)?.re < *level;
        let t_max = bbox.diameter();
        let resolution = 1e-12 * t_max;
        let hits = par_map(rays, |i| {
            let mut rng = stream_rng(RAY_SEED, i as u64);
            let u = unit_vector(&mut rng, *dimension);
            let side = |t: f64| -> Option<bool> {
                f.eval(&z.add_scaled(&u, C64::new(t, 0.0)))
                    .ok()
                    .map(|v| v.re < *level)
            };
            let steps = 256;
            let mut lo = 0.0;
            for k in 1..=steps {
                let t = t_max * k as f64 / steps as f64;
                match side(t) {
                    Some(s) if s != inside => {
                        let mut hi = t;
                        while hi - lo > resolution {
                            let mid = 0.5 * (lo + hi);
                            match side(mid) {
                                Some(s) if s == inside => lo = mid,
                                _ => hi = mid,
                            }
                        }
                        let scale = match metric {
                            Metric::Euclidean => 1.0,
                            Metric::Linfty => u.norm_inf(),
                        };
                        return Some(hi * scale);
                    }
                    Some(_) => lo = t,
                    None => return None,
                }
            }
            None
        });
        let best = hits.into_iter().flatten().fold(f64::INFINITY, f64::min);
        if !best.is_finite() {
            return Err(Error::InvalidInput(
                "no boundary crossing found along any ray inside the bounding box".into(),
            ));
        }
        Ok(DistanceEstimate {
            signed: if inside { -best } else { best },
            resolution,
            rays,
        })
    }

    /// Local defining function for a boundary sample: `f < 0` near the sample
    /// exactly when the point is in the domain.
    pub fn defining_function(&self, source: &BoundarySource) -> Option<Expr> {
        match (self, source) {
            (DomainSpec::Ball { center, radius }, _) => {
                let mut sum = Expr::real(0.0);
                for (j, c) in center.iter().enumerate() {
                    sum = expr::add(sum, abs2_shifted(j, *c));
                }
                Some(expr::sub(sum, Expr::real(radius * radius)))
            }
            (DomainSpec::Polydisc { center, radii }, BoundarySource::PolydiscFace { face }) => {
                Some(expr::sub(
                    abs2_shifted(*face, center[*face]),
                    Expr::real(radii[*face].powi(2)),
                ))
            }
            (
                DomainSpec::ReinhardtUnion { members, .. },
                BoundarySource::ReinhardtFace { member, face },
            ) => Some(expr::sub(
                abs2_shifted(*face, C64::new(0.0, 0.0)),
                Expr::real(members[*member][*face].powi(2)),
            )),
            (DomainSpec::Sublevel { f, level, .. }, _) => {
                Some(expr::sub(f.clone(), Expr::real(*level)))
            }
            _ => None,
        }
    }

    /// Seeded boundary points. Balls and polydiscs are sampled analytically,
    /// Reinhardt unions by rejection on member faces, sublevel sets by
    /// bisection along rays from an interior seed point.
    pub fn boundary_sample(&self, count: usize, seed: u64) -> Result<BoundarySampling> {
        match self {
            DomainSpec::Ball { center, radius } => {
                let samples = par_map(count, |i| {
                    let mut rng = stream_rng(seed, i as u64);
                    let u = unit_vector(&mut rng, center.dim());
                    let mut t = *radius;
                    let mut z = center.add_scaled(&u, C64::new(t, 0.0));
                    while radius_defect_sq(*radius, &z.sub(center)) > 0.0 {
                        t = t.next_up();
                        z = center.add_scaled(&u, C64::new(t, 0.0));
                    }
                    BoundarySample {
                        point: z,
                        normal: Some(u),
                        source: BoundarySource::Sphere,
                    }
                });
                Ok(BoundarySampling {
                    samples,
                    skipped: 0,
                })
            }
            DomainSpec::Polydisc { center, radii } => {
                let samples = par_map(count, |i| {
                    let mut rng = stream_rng(seed, i as u64);
                    polydisc_face_sample(&mut rng, center, radii, |face| {
                        BoundarySource::PolydiscFace { face }
                    })
                });
                Ok(BoundarySampling {
                    samples,
                    skipped: 0,
                })
            }
            DomainSpec::ReinhardtUnion { members, dimension } => {
                let origin = CPoint::zeros(*dimension);
                let attempts = par_map(count * 64, |i| {
                    let mut rng = stream_rng(seed, i as u64);
                    let member = rng.random_range(0..members.len());
                    let s = polydisc_face_sample(&mut rng, &origin, &members[member], |face| {
                        BoundarySource::ReinhardtFace { member, face }
                    });
                    let covered = members
                        .iter()
                        .enumerate()
                        .any(|(m, r)| m != member && polydisc_contains(&origin, r, &s.point));
                    (!covered).then_some(s)
                });
                let total = attempts.len();
                let samples: Vec<_> = attempts.into_iter().flatten().take(count).collect();
                if samples.len() < count {
                    return Err(Error::SamplingExhausted {
                        accepted: samples.len(),
                        attempted: total,
                    });
                }
                Ok(BoundarySampling {
                    samples,
                    skipped: 0,
                })
            }
            DomainSpec::Sublevel { .. } => self.sublevel_boundary_sample(count, seed),
            _ => Err(Error::Unsupported(format!(
                "boundary sampling of {} domains",
                self.variant_name()
            ))),
        }
    }

    fn sublevel_boundary_sample(&self, count: usize, seed: u64) -> Result<BoundarySampling> {
        let DomainSpec::Sublevel {
            f,
            level,
            bbox,
            dimension,
        } = self
        else {
            unreachable!()
        };
        let bbox = bbox.as_ref().ok_or_else(|| {
            Error::Unsupported("sublevel boundary sampling needs a bounding box".into())
        })?;
        let grad: Vec<Expr> = (1..=*dimension)
            .map(|j| expr::wirtinger(f, j, false))
            .collect();
        let interior = self.find_interior_point(bbox, seed)?;
        let mut samples = Vec::with_capacity(count);
        let mut skipped = 0;
        let mut next = 0usize;
        let max_attempts = 16 * count.max(1);
        while samples.len() < count && next < max_attempts {
            let batch = (count - samples.len()).max(8);
            let start = next;
            let results = par_map(batch, |k| {
                let mut rng = stream_rng(seed, (start + k) as u64);
                let u = unit_vector(&mut rng, *dimension);
                bisect_ray(f, *level, &interior, &u, bbox)
            });
            next += batch;
            for r in results {
                if samples.len() == count {
                    break;
                }
                match r {
                    Some(z) => {
                        let normal = grad
                            .iter()
                            .map(|g| g.eval(&z).map(|c| c.conj()))
                            .collect::<Result<Vec<_>>>()
                            .ok()
                            .and_then(|v| CVector::from(v).normalized());
                        samples.push(BoundarySample {
                            point: z,
                            normal,
                            source: BoundarySource::Sublevel,
                        });
                    }
                    None => skipped += 1,
                }
            }
        }
        Ok(BoundarySampling { samples, skipped })
    }

    fn find_interior_point(&self, bbox: &BoundingBox, seed: u64) -> Result<CPoint> {
        const TRIALS: usize = 4096;
        if self.contains(&bbox.center).unwrap_or(false) {
            return Ok(bbox.center.clone());
        }
        let mut rng = stream_rng(seed ^ INTERIOR_SEED_SALT, 0);
        for _ in 0..TRIALS {
            let z = bbox.sample(&mut rng);
            if self.contains(&z).unwrap_or(false) {
                return Ok(z);
            }
        }
        Err(Error::NoInteriorPoint { trials: TRIALS })
    }
}

const DEFAULT_RAYS: usize = 512;
const RAY_SEED: u64 = 0x0005_eed0_0000_0001;
const INTERIOR_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundarySource {
    Sphere,
    PolydiscFace { face: usize },
    ReinhardtFace { member: usize, face: usize },
    Sublevel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySample {
    pub point: CPoint,
    /// Outward unit normal as a complex vector (`conj(grad f) / |grad f|`).
    pub normal: Option<CVector>,
    pub source: BoundarySource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySampling {
    pub samples: Vec<BoundarySample>,
    /// Rays that did not bracket the level set.
    pub skipped: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceEstimate {
    pub signed: f64,
    /// Bisection resolution along each ray.
    pub resolution: f64,
    pub rays: usize,
}

fn abs2_shifted(j: usize, c: C64) -> Expr {
    let zj = Expr::var(j + 1);
    let arg = if c == C64::new(0.0, 0.0) {
        zj
    } else {
        expr::sub(zj, Expr::constant(c))
    };
    Expr::unary(UnaryOp::Abs2, arg)
}

fn polydisc_contains(center: &CPoint, radii: &[f64], z: &[C64]) -> bool {
    z.iter()
        .zip(center.iter())
        .zip(radii)
        .all(|((a, c), &r)| radius_defect_sq(r, &[a - c]) > 0.0)
}

/// `|u_j| - r_j` with compensated arithmetic.
fn coordinate_excess(u: C64, r: f64) -> f64 {
    -radius_defect_sq(r, &[u]) / (r + u.norm())
}

fn polydisc_signed_distance(u: &[C64], radii: &[f64], metric: Metric) -> f64 {
    let excess: Vec<f64> = u
        .iter()
        .zip(radii)
        .map(|(&c, &r)| coordinate_excess(c, r))
        .collect();
    let worst = excess.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if worst <= 0.0 {
        // inside: the nearest boundary point moves a single coordinate
        return worst;
    }
    match metric {
        Metric::Linfty => worst,
        Metric::Euclidean => excess
            .iter()
            .map(|e| e.max(0.0).powi(2))
            .sum::<f64>()
            .sqrt(),
    }
}

fn ball_signed_distance(u: &[C64], r: f64, metric: Metric) -> f64 {
    let defect = radius_defect_sq(r, u);
    let norm = u.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    match metric {
        Metric::Euclidean => -defect / (r + norm),
        Metric::Linfty => {
            let n = u.len() as f64;
            let s_sum: f64 = u.iter().map(|c| c.norm()).sum();
            if defect >= 0.0 {
                // largest s with sum_j (|u_j| + s)^2 <= r^2
                -defect / (s_sum + (s_sum * s_sum + n * defect).sqrt())
            } else {
                // smallest s with sum_j max(|u_j| - s, 0)^2 <= r^2
                let mods: Vec<f64> = u.iter().map(|c| c.norm()).collect();
                let gap =
                    |s: f64| mods.iter().map(|m| (m - s).max(0.0).powi(2)).sum::<f64>() - r * r;
                let (mut lo, mut hi) = (0.0, mods.iter().copied().fold(0.0, f64::max));
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if gap(mid) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= f64::EPSILON * hi {
                        break;
                    }
                }
                hi
            }
        }
    }
}

fn polydisc_face_sample<R: Rng>(
    rng: &mut R,
    center: &CPoint,
    radii: &[f64],
    source: impl Fn(usize) -> BoundarySource,
) -> BoundarySample {
    let n = radii.len();
    let face = rng.random_range(0..n);
    let theta = rng.random_range(0.0..TAU);
    let phase = C64::from_polar(1.0, theta);
    let mut coords: Vec<C64> = (0..n)
        .map(|k| {
            if k == face {
                C64::new(0.0, 0.0)
            } else {
                disc_point(rng, center[k], radii[k])
            }
        })
        .collect();
    let mut t = radii[face];
    coords[face] = center[face] + phase * t;
    while radius_defect_sq(radii[face], &[coords[face] - center[face]]) > 0.0 {
        t = t.next_up();
        coords[face] = center[face] + phase * t;
    }
    // other coordinates strictly inside
    for k in 0..n {
        while k != face && radius_defect_sq(radii[k], &[coords[k] - center[k]]) <= 0.0 {
            coords[k] = center[k] + (coords[k] - center[k]) * 0.5;
        }
    }
    let mut normal = vec![C64::new(0.0, 0.0); n];
    normal[face] = phase;
    BoundarySample {
        point: CPoint::from(coords),
        normal: Some(CVector::from(normal)),
        source: source(face),
    }
}

/// First crossing of `f = level` along `interior + t u`, refined by bisection
/// until `0 <= f - level <= 1e-10`. Returns the outer endpoint.
fn bisect_ray(
    f: &Expr,
    level: f64,
    interior: &CPoint,
    u: &CVector,
    bbox: &BoundingBox,
) -> Option<CPoint> {
    let t_max = bbox.exit_time(interior, u);
    let at = |t: f64| interior.add_scaled(u, C64::new(t, 0.0));
    let value = |t: f64| f.eval(&at(t)).ok().map(|v| v.re - level);
    let steps = 128;
    let mut lo = 0.0;
    let mut hi = None;
    for k in 1..=steps {
        let t = t_max * k as f64 / steps as f64;
        if value(t)? >= 0.0 {
            hi = Some(t);
            break;
        }
        lo = t;
    }
    let mut hi = hi?;
    for _ in 0..200 {
        let v = value(hi)?;
        if v <= 1e-10 {
            return Some(at(hi));
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if value(mid)? >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    None
}

pub fn contains(d: &DomainSpec, z: &CPoint) -> Result<bool> {
    d.contains(z)
}

pub fn boundary_sample(d: &DomainSpec, count: usize, seed: u64) -> Result<BoundarySampling> {
    d.boundary_sample(count, seed)
}

pub fn distance_to_boundary(d: &DomainSpec, z: &CPoint, metric: Metric) -> Result<f64> {
    d.distance_to_boundary(z, metric)
}

pub fn signed_distance(d: &DomainSpec, z: &CPoint, metric: Metric) -> Result<f64> {
    d.signed_distance(z, metric)
}
