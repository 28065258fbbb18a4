//! Levi and strict pseudoconvexity verdicts at boundary points, convexity
//! checks on the real tangent hyperplane, and plurisubharmonicity tests by
//! Levi spectra and by circle averages (the sub-mean-value criterion).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::{BoundarySample, DomainSpec, Metric};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::levi::{default_gradient_tol, Differentials};
use crate::numerics::{gram_schmidt, hermitian_eigen, symmetric_eigen};
use crate::point::{CPoint, CVector, C64};
use crate::sampling::{par_map, stream_rng, unit_vector};

/// Ordered from weakest to strongest so that `min` aggregates a domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Verdict {
    NotLeviPseudoconvex,
    DegenerateGradient,
    LeviPseudoconvexOnly,
    StrictlyPseudoconvex,
}

/// Three-way rule on ascending restricted eigenvalues. An empty spectrum
/// (n = 1) is vacuously strict.
pub fn verdict_from_eigenvalues(eigenvalues: &[f64], tol_eig: f64) -> Verdict {
    match eigenvalues.first() {
        None => Verdict::StrictlyPseudoconvex,
        Some(&m) if m > tol_eig => Verdict::StrictlyPseudoconvex,
        Some(&m) if m < -tol_eig => Verdict::NotLeviPseudoconvex,
        Some(_) => Verdict::LeviPseudoconvexOnly,
    }
}

/// `1e-6 (1 + |H|_F)`.
pub fn default_eigen_tol(levi_norm: f64) -> f64 {
    1e-6 * (1.0 + levi_norm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointVerdict {
    pub point: CPoint,
    pub gradient_norm: f64,
    /// Ascending eigenvalues of the Levi form restricted to the complex
    /// tangent space (length n - 1; empty for a degenerate gradient).
    pub eigenvalues: Vec<f64>,
    pub verdict: Verdict,
    pub min_eigenvalue: Option<f64>,
    pub tol_grad: f64,
    pub tol_eig: f64,
}

impl PointVerdict {
    /// Recomputes the verdict from the stored fields.
    pub fn rederive(&self) -> Verdict {
        if !(self.gradient_norm > self.tol_grad) {
            Verdict::DegenerateGradient
        } else {
            verdict_from_eigenvalues(&self.eigenvalues, self.tol_eig)
        }
    }
}

/// Optional overrides; `None` selects the documented defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub grad: Option<f64>,
    pub eig: Option<f64>,
}

impl Tolerances {
    pub fn grad_at(&self, a: &CPoint) -> f64 {
        self.grad.unwrap_or_else(|| default_gradient_tol(a))
    }

    pub fn eig_for(&self, levi_norm: f64) -> f64 {
        self.eig.unwrap_or_else(|| default_eigen_tol(levi_norm))
    }
}

pub fn classify_point(f: &Expr, a: &CPoint, tol: Tolerances) -> Result<PointVerdict> {
    let d = Differentials::new(f, a.dim())?;
    classify_with(&d, a, tol)
}

/// [`classify_point`] with precomputed derivatives.
pub fn classify_with(d: &Differentials, a: &CPoint, tol: Tolerances) -> Result<PointVerdict> {
    let levi = d.levi_matrix(a)?;
    let tol_grad = tol.grad_at(a);
    let tol_eig = tol.eig_for(levi.norm());
    let basis = match d.tangent_basis(a, tol_grad, None) {
        Ok(b) => b,
        Err(Error::DegenerateGradient { norm, .. }) => {
            return Ok(PointVerdict {
                point: a.clone(),
                gradient_norm: norm,
                eigenvalues: Vec::new(),
                verdict: Verdict::DegenerateGradient,
                min_eigenvalue: None,
                tol_grad,
                tol_eig,
            })
        }
        Err(e) => return Err(e),
    };
    let (eigenvalues, _) = hermitian_eigen(&levi.restrict(&basis.vectors));
    Ok(PointVerdict {
        point: a.clone(),
        gradient_norm: basis.gradient_norm,
        verdict: verdict_from_eigenvalues(&eigenvalues, tol_eig),
        min_eigenvalue: eigenvalues.first().copied(),
        eigenvalues,
        tol_grad,
        tol_eig,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRecord {
    pub sample: BoundarySample,
    pub result: std::result::Result<PointVerdict, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainReport {
    pub domain: String,
    pub seed: u64,
    pub requested: usize,
    pub records: Vec<BoundaryRecord>,
    pub counts: BTreeMap<Verdict, usize>,
    pub errors: usize,
    /// Rays or draws the sampler gave up on.
    pub sampler_skipped: usize,
    /// Weakest point verdict; `None` if no point was classified.
    pub verdict: Option<Verdict>,
    pub min_eigenvalue: Option<f64>,
}

/// Samples the boundary and classifies each point with the local defining
/// function of its face (or the domain's own function for sublevel sets).
pub fn classify_domain(
    domain: &DomainSpec,
    samples: usize,
    seed: u64,
    tol: Tolerances,
) -> Result<DomainReport> {
    let sampling = domain.boundary_sample(samples, seed)?;
    let n = domain.dimension();
    // one derivative table per distinct defining function
    let mut cache: Vec<(Expr, Differentials)> = Vec::new();
    let mut jobs = Vec::with_capacity(sampling.samples.len());
    for s in &sampling.samples {
        let f = domain.defining_function(&s.source).ok_or_else(|| {
            Error::Unsupported(format!(
                "no defining function for {} boundary",
                domain.variant_name()
            ))
        })?;
        let idx = match cache.iter().position(|(g, _)| *g == f) {
            Some(i) => i,
            None => {
                cache.push((f.clone(), Differentials::new(&f, n)?));
                cache.len() - 1
            }
        };
        jobs.push(idx);
    }
    let results = par_map(sampling.samples.len(), |i| {
        classify_with(&cache[jobs[i]].1, &sampling.samples[i].point, tol)
    });
    let mut counts = BTreeMap::new();
    let mut errors = 0;
    let mut min_eigenvalue: Option<f64> = None;
    let mut records = Vec::with_capacity(results.len());
    for (sample, r) in sampling.samples.into_iter().zip(results) {
        match &r {
            Ok(v) => {
                *counts.entry(v.verdict).or_insert(0) += 1;
                if let Some(m) = v.min_eigenvalue {
                    min_eigenvalue = Some(min_eigenvalue.map_or(m, |x| x.min(m)));
                }
            }
            Err(_) => errors += 1,
        }
        records.push(BoundaryRecord {
            sample,
            result: r.map_err(|e| e.to_string()),
        });
    }
    Ok(DomainReport {
        domain: domain.variant_name().to_string(),
        seed,
        requested: samples,
        verdict: counts.keys().next().copied(),
        counts,
        errors,
        sampler_skipped: sampling.skipped,
        records,
        min_eigenvalue,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConvexityVerdict {
    StrictlyConvex,
    /// Convex-certified with a zero tangential eigenvalue.
    Convex,
    NotConvex,
    DegenerateGradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub point: CPoint,
    pub gradient_norm: f64,
    /// Ascending eigenvalues of the real Hessian on the real tangent
    /// hyperplane (length 2n - 1).
    pub eigenvalues: Vec<f64>,
    pub verdict: ConvexityVerdict,
    pub tol_grad: f64,
    pub tol_eig: f64,
}

impl ConvexityReport {
    pub fn is_convex(&self) -> bool {
        matches!(
            self.verdict,
            ConvexityVerdict::Convex | ConvexityVerdict::StrictlyConvex
        )
    }
}

/// Real Hessian restricted to `{d in R^2n : <d, grad f(a)> = 0}`.
pub fn convexity_point_check(f: &Expr, a: &CPoint, tol: Tolerances) -> Result<ConvexityReport> {
    let d = Differentials::new(f, a.dim())?;
    let grad = d.real_gradient(a)?;
    let hess = d.real_hessian(a)?;
    let gnorm = grad.iter().map(|x| x * x).sum::<f64>().sqrt();
    // the real gradient is twice the complex one in norm
    let cnorm = 0.5 * gnorm;
    let tol_grad = tol.grad_at(a);
    let hnorm = hess.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    let tol_eig = tol.eig_for(hnorm);
    if !(cnorm > tol_grad) {
        return Ok(ConvexityReport {
            point: a.clone(),
            gradient_norm: cnorm,
            eigenvalues: Vec::new(),
            verdict: ConvexityVerdict::DegenerateGradient,
            tol_grad,
            tol_eig,
        });
    }
    let m = grad.len();
    let lift = |v: &[f64]| v.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>();
    let nu = lift(&grad.iter().map(|x| x / gnorm).collect::<Vec<_>>());
    let candidates = (0..m).map(|j| {
        let mut e = vec![C64::new(0.0, 0.0); m];
        e[j] = C64::new(1.0, 0.0);
        e
    });
    let basis: Vec<Vec<f64>> = gram_schmidt(&[nu], candidates, m - 1, 1e-6)
        .into_iter()
        .map(|v| v.iter().map(|c| c.re).collect())
        .collect();
    let restricted: Vec<Vec<f64>> = basis
        .iter()
        .map(|u| {
            basis
                .iter()
                .map(|v| {
                    (0..m)
                        .map(|i| u[i] * (0..m).map(|k| hess[i][k] * v[k]).sum::<f64>())
                        .sum()
                })
                .collect()
        })
        .collect();
    let (eigenvalues, _) = symmetric_eigen(&restricted);
    let verdict = match eigenvalues.first() {
        None => ConvexityVerdict::StrictlyConvex,
        Some(&e) if e > tol_eig => ConvexityVerdict::StrictlyConvex,
        Some(&e) if e >= -tol_eig => ConvexityVerdict::Convex,
        Some(_) => ConvexityVerdict::NotConvex,
    };
    Ok(ConvexityReport {
        point: a.clone(),
        gradient_norm: cnorm,
        eigenvalues,
        verdict,
        tol_grad,
        tol_eig,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PshMode {
    LeviSpectral,
    /// Sub-mean-value criterion over circles of complex lines.
    CircleAverage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PshOutcome {
    ConsistentWithPsh,
    NotPsh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PshViolation {
    pub point: CPoint,
    pub direction: CVector,
    /// Disc radius (zero for spectral witnesses).
    pub radius: f64,
    pub deficit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PshVerdict {
    pub mode: PshMode,
    pub criterion: String,
    /// Stored witnesses, worst first, at most [`MAX_WITNESSES`].
    pub violations: Vec<PshViolation>,
    pub violation_count: usize,
    pub tested: usize,
    pub skipped: usize,
    pub verdict: PshOutcome,
    pub tolerance: f64,
    /// Smallest Levi eigenvalue seen (spectral mode).
    pub min_eigenvalue: Option<f64>,
}

pub const MAX_WITNESSES: usize = 16;

fn finish(
    mode: PshMode,
    mut violations: Vec<PshViolation>,
    tested: usize,
    skipped: usize,
    tolerance: f64,
    min_eigenvalue: Option<f64>,
) -> PshVerdict {
    violations.sort_by(|a, b| b.deficit.total_cmp(&a.deficit));
    let violation_count = violations.len();
    violations.truncate(MAX_WITNESSES);
    PshVerdict {
        mode,
        criterion: match mode {
            PshMode::LeviSpectral => "levi spectrum".into(),
            PshMode::CircleAverage => "sub-mean-value criterion".into(),
        },
        verdict: if violations.is_empty() {
            PshOutcome::ConsistentWithPsh
        } else {
            PshOutcome::NotPsh
        },
        violations,
        violation_count,
        tested,
        skipped,
        tolerance,
        min_eigenvalue,
    }
}

/// Point, smallest Levi eigenvalue and its eigenvector.
type LeviMinimum = (CPoint, f64, Vec<C64>);

/// Smallest Levi eigenvalue at each seeded region point (`None` where the
/// Levi matrix cannot be evaluated).
fn levi_minima(
    f: &Expr,
    region: &DomainSpec,
    grid: usize,
    seed: u64,
) -> Result<Vec<Option<LeviMinimum>>> {
    let d = Differentials::new(f, region.dimension())?;
    let points = region.interior_sample(grid, seed)?;
    Ok(par_map(points.len(), |i| {
        let z = &points[i];
        let levi = d.levi_matrix(z).ok()?;
        let (vals, vecs) = levi.eigen();
        if !vals[0].is_finite() {
            return None;
        }
        Some((z.clone(), vals[0], vecs[0].clone()))
    }))
}

/// Plurisubharmonicity by the Levi spectrum at seeded points of `region`.
/// Points where evaluation fails are skipped and counted.
pub fn psh_test_spectral(
    f: &Expr,
    region: &DomainSpec,
    grid: usize,
    seed: u64,
    tol: f64,
) -> Result<PshVerdict> {
    let minima = levi_minima(f, region, grid, seed)?;
    let mut violations = Vec::new();
    let mut skipped = 0;
    let mut min_eig: Option<f64> = None;
    for m in minima {
        let Some((point, lam, v)) = m else {
            skipped += 1;
            continue;
        };
        min_eig = Some(min_eig.map_or(lam, |x| x.min(lam)));
        if lam < -tol {
            violations.push(PshViolation {
                point,
                direction: CVector::from(v),
                radius: 0.0,
                deficit: -lam,
            });
        }
    }
    Ok(finish(
        PshMode::LeviSpectral,
        violations,
        grid - skipped,
        skipped,
        tol,
        min_eig,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StrictOutcome {
    StrictConsistent,
    NotStrict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrictPshVerdict {
    pub verdict: StrictOutcome,
    /// Point, eigenvalue and eigenvector with the smallest eigenvalue.
    pub witness: Option<PshViolation>,
    pub min_eigenvalue: Option<f64>,
    pub tested: usize,
    pub skipped: usize,
    pub tolerance: f64,
}

pub fn strict_psh_test(
    f: &Expr,
    region: &DomainSpec,
    grid: usize,
    seed: u64,
    tol: f64,
) -> Result<StrictPshVerdict> {
    let minima = levi_minima(f, region, grid, seed)?;
    let mut skipped = 0;
    let mut worst: Option<LeviMinimum> = None;
    for m in minima {
        match m {
            None => skipped += 1,
            Some(m) => {
                if worst.as_ref().is_none_or(|w| m.1 < w.1) {
                    worst = Some(m);
                }
            }
        }
    }
    let min_eigenvalue = worst.as_ref().map(|w| w.1);
    let strict = min_eigenvalue.is_some_and(|m| m > tol);
    Ok(StrictPshVerdict {
        verdict: if strict {
            StrictOutcome::StrictConsistent
        } else {
            StrictOutcome::NotStrict
        },
        witness: worst
            .filter(|_| !strict)
            .map(|(point, lam, v)| PshViolation {
                point,
                direction: CVector::from(v),
                radius: 0.0,
                deficit: tol - lam,
            }),
        min_eigenvalue,
        tested: grid - skipped,
        skipped,
        tolerance: tol,
    })
}

/// Disc radii as fractions of the local Euclidean boundary distance,
/// geometrically spaced; trial `t` uses `fractions[t % len]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusSchedule {
    pub min_fraction: f64,
    pub max_fraction: f64,
    pub steps: usize,
}

impl Default for RadiusSchedule {
    fn default() -> Self {
        Self {
            min_fraction: 1e-3,
            max_fraction: 0.3,
            steps: 8,
        }
    }
}

impl RadiusSchedule {
    pub fn fractions(&self) -> Vec<f64> {
        if self.steps <= 1 {
            return vec![self.max_fraction];
        }
        let ratio = (self.max_fraction / self.min_fraction).ln();
        (0..self.steps)
            .map(|k| self.min_fraction * (ratio * k as f64 / (self.steps - 1) as f64).exp())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleAverageConfig {
    pub trials: usize,
    pub seed: u64,
    pub radii: RadiusSchedule,
    pub quadrature: usize,
    pub tol: f64,
}

impl Default for CircleAverageConfig {
    fn default() -> Self {
        Self {
            trials: 1000,
            seed: 0,
            radii: RadiusSchedule::default(),
            quadrature: 64,
            tol: 1e-9,
        }
    }
}

/// Values at or below this are treated as minus infinity.
pub const NEG_INFINITY_CUTOFF: f64 = -1e12;

enum Trial {
    Skipped,
    Tested(Option<PshViolation>),
}

/// `f(a) - mean_k f(a + r d e^{2 pi i k / m})`; `None` if any sample is
/// undefined or treated as minus infinity.
pub fn circle_deficit<F>(
    f: &F,
    a: &CPoint,
    direction: &[C64],
    radius: f64,
    quadrature: usize,
) -> Option<f64>
where
    F: Fn(&CPoint) -> Result<f64>,
{
    let usable = |v: Result<f64>| v.ok().filter(|x| x.is_finite() && *x > NEG_INFINITY_CUTOFF);
    let center = usable(f(a))?;
    let mut sum = 0.0;
    for k in 0..quadrature {
        let w = C64::from_polar(radius, std::f64::consts::TAU * k as f64 / quadrature as f64);
        sum += usable(f(&a.add_scaled(direction, w)))?;
    }
    Some(center - sum / quadrature as f64)
}

/// Sub-mean-value test on seeded complex discs `a + d * r * closed disc` with
/// `|d| = 1` lying inside `region`.
pub fn psh_test_circle_average<F>(
    f: F,
    region: &DomainSpec,
    cfg: &CircleAverageConfig,
) -> Result<PshVerdict>
where
    F: Fn(&CPoint) -> Result<f64> + Sync,
{
    let n = region.dimension();
    let centers = region.interior_sample(cfg.trials, cfg.seed)?;
    let fractions = cfg.radii.fractions();
    let results = par_map(cfg.trials, |t| {
        let a = &centers[t];
        let mut rng = stream_rng(cfg.seed ^ DIRECTION_SALT, t as u64);
        let dir = unit_vector(&mut rng, n);
        let scale = match region.distance_to_boundary(a, Metric::Euclidean) {
            Ok(d) if d.is_finite() => d,
            Ok(_) => 1.0,
            Err(_) => return Trial::Skipped,
        };
        let r = scale * fractions[t % fractions.len()];
        if !(r > 0.0) {
            return Trial::Skipped;
        }
        let inside = (0..cfg.quadrature).all(|k| {
            let w = C64::from_polar(r, std::f64::consts::TAU * k as f64 / cfg.quadrature as f64);
            region.contains(&a.add_scaled(&dir, w)).unwrap_or(false)
        });
        if !inside {
            return Trial::Skipped;
        }
        match circle_deficit(&f, a, &dir, r, cfg.quadrature) {
            None => Trial::Skipped,
            Some(deficit) => Trial::Tested((deficit > cfg.tol).then(|| PshViolation {
                point: a.clone(),
                direction: dir,
                radius: r,
                deficit,
            })),
        }
    });
    let mut violations = Vec::new();
    let (mut tested, mut skipped) = (0, 0);
    for r in results {
        match r {
            Trial::Skipped => skipped += 1,
            Trial::Tested(v) => {
                tested += 1;
                violations.extend(v);
            }
        }
    }
    Ok(finish(
        PshMode::CircleAverage,
        violations,
        tested,
        skipped,
        cfg.tol,
        None,
    ))
}

const DIRECTION_SALT: u64 = 0xd1b5_4a32_d192_ed03;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PseudoconvexityEvidence {
    ConsistentWithPseudoconvex,
    NotPseudoconvex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogDistanceReport {
    pub metric: Metric,
    pub verdict: PseudoconvexityEvidence,
    pub witness: Option<PshViolation>,
    pub test: PshVerdict,
}

/// `-ln d(z, boundary)`, the function whose plurisubharmonicity
/// characterises pseudoconvexity.
pub fn minus_log_distance(
    domain: &DomainSpec,
    metric: Metric,
) -> impl Fn(&CPoint) -> Result<f64> + Sync + '_ {
    move |z| Ok(-domain.distance_to_boundary(z, metric)?.ln())
}

pub fn log_distance_probe(
    domain: &DomainSpec,
    metric: Metric,
    cfg: &CircleAverageConfig,
) -> Result<LogDistanceReport> {
    let test = psh_test_circle_average(minus_log_distance(domain, metric), domain, cfg)?;
    Ok(LogDistanceReport {
        metric,
        verdict: match test.verdict {
            PshOutcome::ConsistentWithPsh => PseudoconvexityEvidence::ConsistentWithPseudoconvex,
            PshOutcome::NotPsh => PseudoconvexityEvidence::NotPseudoconvex,
        },
        witness: test.violations.first().cloned(),
        test,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentialFailure {
    pub point: CPoint,
    pub direction: CVector,
    pub eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeviLemmaReport {
    /// Smallest `c >= 0` with `L_d f(z) >= -c |d| |<d, conj grad f(z)>|`
    /// over the sampled pairs; `None` on failure.
    pub constant: Option<f64>,
    pub failure: Option<TangentialFailure>,
    pub points: usize,
    pub directions_per_point: usize,
    pub skipped: usize,
}

const DIRECTIONS_PER_POINT: usize = 32;

/// Empirical constant of the tangential-defect inequality near the boundary
/// of `region` (boundary samples when available, interior samples
/// otherwise). Diagnostic only.
pub fn levilemma_diagnostic(
    f: &Expr,
    region: &DomainSpec,
    samples: usize,
    seed: u64,
) -> Result<LeviLemmaReport> {
    let n = region.dimension();
    let d = Differentials::new(f, n)?;
    let points = match region.boundary_sample(samples, seed) {
        Ok(s) => s.samples.into_iter().map(|b| b.point).collect(),
        Err(_) => region.interior_sample(samples, seed)?,
    };
    enum Outcome {
        Skip,
        Fail(TangentialFailure),
        Fit(f64),
    }
    let results = par_map(points.len(), |i| {
        let z = &points[i];
        let (Ok(v), Ok(levi)) = (
            classify_with(&d, z, Tolerances::default()),
            d.levi_matrix(z),
        ) else {
            return Outcome::Skip;
        };
        if v.verdict == Verdict::DegenerateGradient {
            return Outcome::Skip;
        }
        if v.verdict == Verdict::NotLeviPseudoconvex {
            let basis = match d.tangent_basis(z, v.tol_grad, None) {
                Ok(b) => b,
                Err(_) => return Outcome::Skip,
            };
            let (vals, vecs) = hermitian_eigen(&levi.restrict(&basis.vectors));
            let mut dir = vec![C64::new(0.0, 0.0); n];
            for (c, b) in vecs[0].iter().zip(&basis.vectors) {
                for (x, y) in dir.iter_mut().zip(b.iter()) {
                    *x += c * y;
                }
            }
            return Outcome::Fail(TangentialFailure {
                point: z.clone(),
                direction: CVector::from(dir),
                eigenvalue: vals[0],
            });
        }
        let Ok(g) = d.gradient(z) else {
            return Outcome::Skip;
        };
        let mut rng = stream_rng(seed ^ DIRECTION_SALT, i as u64);
        let mut c: f64 = 0.0;
        for _ in 0..DIRECTIONS_PER_POINT {
            let u = unit_vector(&mut rng, n);
            let pairing = g.pairing(&u).norm();
            let form = levi.bilinear(&u, &u).re;
            if form < 0.0 && pairing > 1e-14 {
                c = c.max(-form / pairing);
            }
        }
        Outcome::Fit(c)
    });
    let mut constant: f64 = 0.0;
    let mut skipped = 0;
    let mut failure: Option<TangentialFailure> = None;
    for r in results {
        match r {
            Outcome::Skip => skipped += 1,
            Outcome::Fit(c) => constant = constant.max(c),
            Outcome::Fail(t) => {
                if failure.as_ref().is_none_or(|w| t.eigenvalue < w.eigenvalue) {
                    failure = Some(t);
                }
            }
        }
    }
    Ok(LeviLemmaReport {
        constant: failure.is_none().then_some(constant),
        failure,
        points: points.len(),
        directions_per_point: DIRECTIONS_PER_POINT,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::BoundingBox;
    use crate::expr::parse;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pt(v: &[(f64, f64)]) -> CPoint {
        CPoint::from(v.iter().map(|&(a, b)| c(a, b)).collect::<Vec<_>>())
    }

    #[test]
    fn ball_point_is_strict() {
        let f = parse("abs2(z1) + abs2(z2) - 1", 2).unwrap();
        let v = classify_point(&f, &pt(&[(1.0, 0.0), (0.0, 0.0)]), Tolerances::default()).unwrap();
        assert_eq!(v.verdict, Verdict::StrictlyPseudoconvex);
        assert_eq!(v.eigenvalues.len(), 1);
        assert!((v.eigenvalues[0] - 1.0).abs() < 1e-12);
        assert_eq!(v.rederive(), v.verdict);
    }

    #[test]
    fn polydisc_face_is_levi_only() {
        let f = parse("abs2(z1) - 1", 2).unwrap();
        let v = classify_point(&f, &pt(&[(1.0, 0.0), (0.5, 0.0)]), Tolerances::default()).unwrap();
        assert_eq!(v.verdict, Verdict::LeviPseudoconvexOnly);
        assert!(v.eigenvalues[0].abs() < 1e-12);
    }

    #[test]
    fn saddle_levi_form_is_not_pseudoconvex() {
        let f = parse("abs2(z1) - abs2(z2)", 2).unwrap();
        let v = classify_point(&f, &pt(&[(1.0, 0.0), (0.0, 0.0)]), Tolerances::default()).unwrap();
        assert_eq!(v.verdict, Verdict::NotLeviPseudoconvex);
        assert!((v.eigenvalues[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_gradient_is_reported_not_guessed() {
        let f = parse("abs2(z1) + abs2(z2) - 1", 2).unwrap();
        let v = classify_point(&f, &CPoint::zeros(2), Tolerances::default()).unwrap();
        assert_eq!(v.verdict, Verdict::DegenerateGradient);
        assert_eq!(v.rederive(), Verdict::DegenerateGradient);
    }

    #[test]
    fn one_variable_is_vacuously_strict() {
        let f = parse("abs2(z1) - 1", 1).unwrap();
        let v = classify_point(&f, &pt(&[(1.0, 0.0)]), Tolerances::default()).unwrap();
        assert!(v.eigenvalues.is_empty());
        assert_eq!(v.verdict, Verdict::StrictlyPseudoconvex);
    }

    #[test]
    fn aggregation_is_weakest() {
        assert!(Verdict::NotLeviPseudoconvex < Verdict::DegenerateGradient);
        assert!(Verdict::DegenerateGradient < Verdict::LeviPseudoconvexOnly);
        assert!(Verdict::LeviPseudoconvexOnly < Verdict::StrictlyPseudoconvex);
    }

    #[test]
    fn classify_ball_and_polydisc_domains() {
        let r = classify_domain(&DomainSpec::unit_ball(2), 200, 1, Tolerances::default()).unwrap();
        assert_eq!(r.counts.get(&Verdict::StrictlyPseudoconvex), Some(&200));
        assert!((r.min_eigenvalue.unwrap() - 1.0).abs() < 1e-6);
        let pd = DomainSpec::polydisc(CPoint::zeros(2), vec![1.0, 1.0]).unwrap();
        let r = classify_domain(&pd, 100, 1, Tolerances::default()).unwrap();
        assert_eq!(r.verdict, Some(Verdict::LeviPseudoconvexOnly));
        assert_eq!(r.counts.len(), 1);
    }

    #[test]
    fn classify_mixed_sublevel_domain() {
        let f = parse("abs2(z1) - abs2(z2) + abs2(z2)^2 - 0.1", 2).unwrap();
        let bbox = BoundingBox {
            center: CPoint::zeros(2),
            half_width: 2.0,
        };
        let d = DomainSpec::sublevel(f, 2, 0.0, Some(bbox)).unwrap();
        let r = classify_domain(&d, 200, 4, Tolerances::default()).unwrap();
        assert_eq!(r.verdict, Some(Verdict::NotLeviPseudoconvex));
        assert!(
            r.counts
                .get(&Verdict::StrictlyPseudoconvex)
                .copied()
                .unwrap_or(0)
                > 0
        );
    }

    #[test]
    fn convexity_examples() {
        let ball = parse("abs2(z1) + abs2(z2) - 1", 2).unwrap();
        let r = convexity_point_check(&ball, &pt(&[(1.0, 0.0), (0.0, 0.0)]), Tolerances::default())
            .unwrap();
        assert_eq!(r.verdict, ConvexityVerdict::StrictlyConvex);
        assert_eq!(r.eigenvalues.len(), 3);
        assert!(r.eigenvalues.iter().all(|e| (e - 2.0).abs() < 1e-12));

        let saddle = parse("re(z1)^2 - im(z1)^2 + abs2(z2) - 1", 2).unwrap();
        let r = convexity_point_check(
            &saddle,
            &pt(&[(1.0, 0.0), (0.0, 0.0)]),
            Tolerances::default(),
        )
        .unwrap();
        assert_eq!(r.verdict, ConvexityVerdict::NotConvex);
        assert!((r.eigenvalues[0] + 2.0).abs() < 1e-12);

        let face = parse("abs2(z1) - 1", 2).unwrap();
        let r = convexity_point_check(&face, &pt(&[(1.0, 0.0), (0.5, 0.0)]), Tolerances::default())
            .unwrap();
        assert_eq!(r.verdict, ConvexityVerdict::Convex);
    }

    #[test]
    fn spectral_psh_examples() {
        let ball = DomainSpec::unit_ball(2);
        let f = parse("abs2(z1) + abs2(z2)", 2).unwrap();
        let v = psh_test_spectral(&f, &ball, 50, 3, 1e-9).unwrap();
        assert_eq!(v.verdict, PshOutcome::ConsistentWithPsh);
        assert!((v.min_eigenvalue.unwrap() - 1.0).abs() < 1e-12);

        let g = parse("-(abs2(z1) + abs2(z2))", 2).unwrap();
        let v = psh_test_spectral(&g, &ball, 50, 3, 1e-9).unwrap();
        assert_eq!(v.verdict, PshOutcome::NotPsh);
        assert!(v.violations.iter().all(|w| (w.deficit - 1.0).abs() < 1e-12));
        assert_eq!(v.violation_count, 50);
    }

    fn annulus() -> DomainSpec {
        let bbox = BoundingBox {
            center: CPoint::zeros(2),
            half_width: 2.0,
        };
        DomainSpec::intersection(vec![
            DomainSpec::polydisc(CPoint::zeros(2), vec![2.0, 2.0]).unwrap(),
            DomainSpec::sublevel(parse("0.25 - abs2(z1)", 2).unwrap(), 2, 0.0, Some(bbox)).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn minus_log_modulus_is_pluriharmonic() {
        let f = parse("-ln(abs(z1))", 2).unwrap();
        let region = annulus();
        let v = psh_test_spectral(&f, &region, 60, 8, 1e-9).unwrap();
        assert_eq!(v.verdict, PshOutcome::ConsistentWithPsh);
        assert!(v.min_eigenvalue.unwrap().abs() < 1e-9);
        let s = strict_psh_test(&f, &region, 60, 8, 1e-9).unwrap();
        assert_eq!(s.verdict, StrictOutcome::NotStrict);
    }

    #[test]
    fn strict_psh_examples() {
        let ball = DomainSpec::unit_ball(2);
        let f = parse("abs2(z1) + abs2(z2)", 2).unwrap();
        let s = strict_psh_test(&f, &ball, 40, 1, 1e-9).unwrap();
        assert_eq!(s.verdict, StrictOutcome::StrictConsistent);
        let g = parse("re(z1)^2", 2).unwrap();
        let s = strict_psh_test(&g, &ball, 40, 1, 1e-9).unwrap();
        assert_eq!(s.verdict, StrictOutcome::NotStrict);
        let w = s.witness.unwrap();
        assert!(w.direction[0].norm() < 1e-9);
        assert!((w.direction[1].norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn circle_average_examples() {
        let ball = DomainSpec::unit_ball(2);
        let cfg = CircleAverageConfig {
            trials: 200,
            seed: 5,
            ..Default::default()
        };
        let v = psh_test_circle_average(|z: &CPoint| Ok(z.norm().powi(2)), &ball, &cfg).unwrap();
        assert_eq!(v.verdict, PshOutcome::ConsistentWithPsh);
        assert_eq!(v.tested, 200);
        let v = psh_test_circle_average(|z: &CPoint| Ok(-z.norm().powi(2)), &ball, &cfg).unwrap();
        assert_eq!(v.verdict, PshOutcome::NotPsh);
        for w in &v.violations {
            assert!((w.deficit - w.radius * w.radius).abs() < 1e-12);
        }
    }

    #[test]
    fn log_distance_dichotomy() {
        let cfg = CircleAverageConfig {
            trials: 400,
            seed: 2,
            ..Default::default()
        };
        let r = log_distance_probe(&DomainSpec::unit_ball(2), Metric::Euclidean, &cfg).unwrap();
        assert_eq!(
            r.verdict,
            PseudoconvexityEvidence::ConsistentWithPseudoconvex
        );
        let r = log_distance_probe(&DomainSpec::hartogs_figure(), Metric::Linfty, &cfg).unwrap();
        assert_eq!(r.verdict, PseudoconvexityEvidence::NotPseudoconvex);
        let w = r.witness.unwrap();
        let hartogs = DomainSpec::hartogs_figure();
        let f = minus_log_distance(&hartogs, Metric::Linfty);
        let again = circle_deficit(&f, &w.point, &w.direction, w.radius, 64).unwrap();
        assert_eq!(again, w.deficit);
    }

    #[test]
    fn levilemma_constants() {
        let ball = DomainSpec::unit_ball(2);
        let f = parse("abs2(z1) + abs2(z2) - 1", 2).unwrap();
        let r = levilemma_diagnostic(&f, &ball, 50, 1).unwrap();
        assert_eq!(r.constant, Some(0.0));
        let pd = DomainSpec::polydisc(CPoint::zeros(2), vec![1.0, 1.0]).unwrap();
        let g = parse("abs2(z1) - 1", 2).unwrap();
        assert_eq!(
            levilemma_diagnostic(&g, &pd, 50, 1).unwrap().constant,
            Some(0.0)
        );

        let h = parse("abs2(z1) - abs2(z2) + abs2(z2)^2 - 0.1", 2).unwrap();
        let bbox = BoundingBox {
            center: CPoint::zeros(2),
            half_width: 2.0,
        };
        let d = DomainSpec::sublevel(h.clone(), 2, 0.0, Some(bbox)).unwrap();
        let r = levilemma_diagnostic(&h, &d, 100, 4).unwrap();
        assert!(r.constant.is_none());
        assert!(r.failure.unwrap().eigenvalue < 0.0);
    }
}
