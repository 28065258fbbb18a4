//! Holomorphic discs: evaluation, the disc maximum principle, and a probe
//! for continuity-principle violations along sequences of discs.

use serde::{Deserialize, Serialize};

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::point::{CPoint, CVector, C64};
use crate::sampling::par_map;

/// A holomorphic map of the closed unit disc into complex n-space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum DiscFamily {
    /// `w -> a + direction * radius * w`.
    Affine {
        a: CPoint,
        direction: CVector,
        radius: f64,
    },
    /// `w -> (r + 1/j, w, 0, ..., 0)`.
    Hartogs {
        r: f64,
        index: u64,
        dimension: usize,
    },
    /// `w -> a + delta' r w + delta t exp(g(r w))` with
    /// `g(x) = sum_k g[k] x^k`.
    ExpTwisted {
        a: CPoint,
        delta_prime: CVector,
        delta: CVector,
        r: f64,
        t: f64,
        g: Vec<C64>,
    },
    /// `w -> scale * base(w)`.
    Scaled { base: Box<DiscFamily>, scale: f64 },
}

impl DiscFamily {
    pub fn dimension(&self) -> usize {
        match self {
            DiscFamily::Affine { a, .. } | DiscFamily::ExpTwisted { a, .. } => a.dim(),
            DiscFamily::Hartogs { dimension, .. } => *dimension,
            DiscFamily::Scaled { base, .. } => base.dimension(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DiscFamily::Affine { a, direction, .. } => direction.ensure_dim(a.dim()),
            DiscFamily::Hartogs {
                index, dimension, ..
            } => {
                if *dimension < 2 {
                    return Err(Error::InvalidInput(
                        "Hartogs discs need dimension >= 2".into(),
                    ));
                }
                if *index == 0 {
                    return Err(Error::InvalidInput("Hartogs disc index starts at 1".into()));
                }
                Ok(())
            }
            DiscFamily::ExpTwisted {
                a,
                delta_prime,
                delta,
                ..
            } => {
                delta_prime.ensure_dim(a.dim())?;
                delta.ensure_dim(a.dim())
            }
            DiscFamily::Scaled { base, .. } => base.validate(),
        }
    }

    /// Image of `w`, without the `|w| <= 1` check.
    fn image(&self, w: C64) -> CPoint {
        match self {
            DiscFamily::Affine {
                a,
                direction,
                radius,
            } => a.add_scaled(direction, w * radius),
            DiscFamily::Hartogs {
                r,
                index,
                dimension,
            } => {
                let mut z = vec![C64::new(0.0, 0.0); *dimension];
                z[0] = C64::new(r + 1.0 / *index as f64, 0.0);
                z[1] = w;
                CPoint::from(z)
            }
            DiscFamily::ExpTwisted {
                a,
                delta_prime,
                delta,
                r,
                t,
                g,
            } => {
                let x = w * r;
                // Horner
                let gx = g
                    .iter()
                    .rev()
                    .fold(C64::new(0.0, 0.0), |acc, c| acc * x + c);
                a.add_scaled(delta_prime, x).add_scaled(delta, gx.exp() * t)
            }
            DiscFamily::Scaled { base, scale } => base.image(w).scale(*scale),
        }
    }
}

pub fn disc_eval(disc: &DiscFamily, w: C64) -> Result<CPoint> {
    if w.norm() > 1.0 + 1e-12 {
        return Err(Error::InvalidInput(format!("|w| = {} exceeds 1", w.norm())));
    }
    Ok(disc.image(w))
}

const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;

/// `m` points filling the open unit disc (sunflower pattern, starting at 0).
pub fn interior_nodes(m: usize) -> Vec<C64> {
    (0..m)
        .map(|k| C64::from_polar((k as f64 / m as f64).sqrt(), GOLDEN_ANGLE * k as f64))
        .collect()
}

/// `m` equally spaced points on the unit circle.
pub fn boundary_nodes(m: usize) -> Vec<C64> {
    (0..m)
        .map(|k| C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / m as f64))
        .collect()
}

pub const DEFAULT_INTERIOR: usize = 256;
pub const DEFAULT_BOUNDARY: usize = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxPrincipleReport {
    pub pass: bool,
    pub interior_max: f64,
    pub boundary_max: f64,
    /// `interior_max - boundary_max`; positive margins beyond `tol` fail.
    pub margin: f64,
    /// Parameter of the interior maximiser.
    pub argmax: C64,
    pub skipped: usize,
    pub tol: f64,
}

/// Compares the maximum of `f` over interior disc samples with its maximum
/// over boundary samples.
pub fn disc_max_principle_check<F>(
    f: F,
    disc: &DiscFamily,
    interior: usize,
    boundary: usize,
    tol: f64,
) -> Result<MaxPrincipleReport>
where
    F: Fn(&CPoint) -> Result<f64>,
{
    disc.validate()?;
    let mut skipped = 0;
    let mut eval = |w: C64| match f(&disc.image(w)) {
        Ok(v) if !v.is_nan() => Some(v),
        _ => {
            skipped += 1;
            None
        }
    };
    let mut interior_max = f64::NEG_INFINITY;
    let mut argmax = C64::new(0.0, 0.0);
    for w in interior_nodes(interior) {
        if let Some(v) = eval(w) {
            if v > interior_max {
                interior_max = v;
                argmax = w;
            }
        }
    }
    let boundary_max = boundary_nodes(boundary)
        .into_iter()
        .filter_map(&mut eval)
        .fold(f64::NEG_INFINITY, f64::max);
    if !boundary_max.is_finite() || !interior_max.is_finite() {
        return Err(Error::InvalidInput(
            "no evaluable samples on the disc".into(),
        ));
    }
    let margin = interior_max - boundary_max;
    Ok(MaxPrincipleReport {
        pass: margin <= tol,
        interior_max,
        boundary_max,
        margin,
        argmax,
        skipped,
        tol,
    })
}

/// A sequence of discs `S_j`, `j >= 1`, with a closed-form limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum DiscSequence {
    /// `S_j(w) = (r + 1/j, w, 0, ...)`; limit `(r, w, 0, ...)`.
    Hartogs { r: f64, dimension: usize },
    /// Affine discs centred at `limit + (start - limit) / j`.
    AffineSweep {
        start: CPoint,
        limit: CPoint,
        direction: CVector,
        radius: f64,
    },
    /// `S_j = lambda_j base` with `lambda_j = scale_limit (1 - 1/(j + 1)^2)`.
    Dilated { base: DiscFamily, scale_limit: f64 },
}

impl DiscSequence {
    pub fn member(&self, j: u64) -> DiscFamily {
        let jf = j as f64;
        match self {
            DiscSequence::Hartogs { r, dimension } => DiscFamily::Hartogs {
                r: *r,
                index: j,
                dimension: *dimension,
            },
            DiscSequence::AffineSweep {
                start,
                limit,
                direction,
                radius,
            } => DiscFamily::Affine {
                a: limit.add_scaled(&start.sub(limit), C64::new(1.0 / jf, 0.0)),
                direction: direction.clone(),
                radius: *radius,
            },
            DiscSequence::Dilated { base, scale_limit } => DiscFamily::Scaled {
                base: Box::new(base.clone()),
                scale: scale_limit * (1.0 - 1.0 / ((jf + 1.0) * (jf + 1.0))),
            },
        }
    }

    /// Closed-form pointwise limit as `j -> infinity`.
    pub fn limit(&self) -> DiscFamily {
        match self {
            DiscSequence::Hartogs { r, dimension } => {
                let mut a = vec![C64::new(0.0, 0.0); *dimension];
                a[0] = C64::new(*r, 0.0);
                let mut d = vec![C64::new(0.0, 0.0); *dimension];
                d[1] = C64::new(1.0, 0.0);
                DiscFamily::Affine {
                    a: CPoint::from(a),
                    direction: CVector::from(d),
                    radius: 1.0,
                }
            }
            DiscSequence::AffineSweep {
                limit,
                direction,
                radius,
                ..
            } => DiscFamily::Affine {
                a: limit.clone(),
                direction: direction.clone(),
                radius: *radius,
            },
            DiscSequence::Dilated { base, scale_limit } => DiscFamily::Scaled {
                base: Box::new(base.clone()),
                scale: *scale_limit,
            },
        }
    }

    pub fn dimension(&self) -> usize {
        self.member(1).dimension()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub j_min: u64,
    pub j_max: u64,
    pub interior: usize,
    pub boundary: usize,
    /// Allowed discrepancy between the limit evaluated at `J_LIM` and the
    /// closed form.
    pub tol: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            j_min: 1,
            j_max: 64,
            interior: DEFAULT_INTERIOR,
            boundary: DEFAULT_BOUNDARY,
            tol: 1e-6,
        }
    }
}

pub const J_LIM: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexContainment {
    pub j: u64,
    pub image_inside: bool,
    pub boundary_inside: bool,
    /// First sampled point found outside the domain.
    pub outside: Option<CPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ProbeStatus {
    /// Discs and limit boundary stay inside but a limit point does not.
    Violation { witness: CPoint, parameter: C64 },
    /// Never "satisfies": the probe can only refute.
    NoViolationFound,
    /// Some disc of the family leaves the domain; the probe does not apply.
    FamilyLeavesDomain { j: u64, point: CPoint },
    /// The limit boundary leaves the domain; the probe does not apply.
    LimitBoundaryLeavesDomain { point: CPoint },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscReport {
    pub family: DiscSequence,
    pub config: ProbeConfig,
    pub per_index: Vec<IndexContainment>,
    pub limit_boundary_inside: bool,
    /// Sampled points of the closed-form limit (interior then boundary).
    pub limit_samples: Vec<CPoint>,
    /// Largest distance between the closed-form limit and `S_{J_LIM}`.
    pub limit_discrepancy: f64,
    pub status: ProbeStatus,
}

impl DiscReport {
    pub fn violation(&self) -> Option<&CPoint> {
        match &self.status {
            ProbeStatus::Violation { witness, .. } => Some(witness),
            _ => None,
        }
    }
}

fn first_outside(
    domain: &DomainSpec,
    disc: &DiscFamily,
    nodes: &[C64],
) -> Result<Option<(C64, CPoint)>> {
    for &w in nodes {
        let z = disc.image(w);
        if !domain.contains(&z)? {
            return Ok(Some((w, z)));
        }
    }
    Ok(None)
}

pub fn continuity_probe(
    domain: &DomainSpec,
    family: &DiscSequence,
    cfg: &ProbeConfig,
) -> Result<DiscReport> {
    let n = domain.dimension();
    if family.dimension() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: family.dimension(),
        });
    }
    family.member(cfg.j_min.max(1)).validate()?;
    if cfg.j_max < cfg.j_min || cfg.j_min == 0 {
        return Err(Error::InvalidInput("need 1 <= j_min <= j_max".into()));
    }
    let inner = interior_nodes(cfg.interior);
    let outer = boundary_nodes(cfg.boundary);

    let count = (cfg.j_max - cfg.j_min + 1) as usize;
    let per_index = par_map(count, |k| -> Result<IndexContainment> {
        let j = cfg.j_min + k as u64;
        let disc = family.member(j);
        let b = first_outside(domain, &disc, &outer)?;
        let i = first_outside(domain, &disc, &inner)?;
        Ok(IndexContainment {
            j,
            image_inside: i.is_none(),
            boundary_inside: b.is_none(),
            outside: b.or(i).map(|(_, z)| z),
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let limit = family.limit();
    let far = family.member(J_LIM);
    let nodes: Vec<C64> = inner.iter().chain(&outer).copied().collect();
    let limit_samples: Vec<CPoint> = nodes.iter().map(|&w| limit.image(w)).collect();
    let limit_discrepancy = nodes
        .iter()
        .zip(&limit_samples)
        .map(|(&w, z)| far.image(w).distance(z))
        .fold(0.0, f64::max);
    if limit_discrepancy > cfg.tol {
        return Err(Error::InvalidInput(format!(
            "closed-form limit differs from S_{J_LIM} by {limit_discrepancy:e}"
        )));
    }

    let limit_boundary = first_outside(domain, &limit, &outer)?;
    let status = if let Some(c) = per_index.iter().find(|c| c.outside.is_some()) {
        ProbeStatus::FamilyLeavesDomain {
            j: c.j,
            point: c.outside.clone().expect("checked"),
        }
    } else if let Some((_, z)) = &limit_boundary {
        ProbeStatus::LimitBoundaryLeavesDomain { point: z.clone() }
    } else {
        match first_outside(domain, &limit, &inner)? {
            // re-check the stored point exactly
            Some((w, z)) if !domain.contains(&z)? => ProbeStatus::Violation {
                witness: z,
                parameter: w,
            },
            _ => ProbeStatus::NoViolationFound,
        }
    };
    Ok(DiscReport {
        family: family.clone(),
        config: cfg.clone(),
        per_index,
        limit_boundary_inside: limit_boundary.is_none(),
        limit_samples,
        limit_discrepancy,
        status,
    })
}

/// Dilated exp-twisted discs converging to a disc whose centre is the
/// corner `(e, e)` of the Hartogs figure while its boundary stays inside.
pub fn hartogs_figure_witness_family() -> DiscSequence {
    let e = std::f64::consts::E;
    let rho = 0.2;
    let base = DiscFamily::ExpTwisted {
        a: CPoint::zeros(2),
        delta_prime: CVector::from(vec![C64::new(e * rho, 0.0), C64::new(-e * rho, 0.0)]),
        delta: CVector::from(vec![C64::new(e, 0.0), C64::new(e, 0.0)]),
        r: 1.0,
        t: 1.0,
        g: vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.1, 0.0)],
    };
    DiscSequence::Dilated {
        base,
        scale_limit: 1.0,
    }
}
