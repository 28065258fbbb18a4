//! Command dispatch.

use std::collections::BTreeMap;
use std::time::Instant;

use levi_core::classifier::{
    classify_domain, log_distance_probe, psh_test_circle_average, psh_test_spectral,
    CircleAverageConfig, PshVerdict, Tolerances, Verdict,
};
use levi_core::disc::{continuity_probe, hartogs_figure_witness_family, ProbeConfig, ProbeStatus};
use levi_core::domain::Metric;
use levi_core::exhaustion::{
    exhaustion_blowup_check, Exhaustion, ExhaustionFunction, ExhaustionProbe,
};
use levi_core::hulls::{
    hull_boundedness_check, polynomial_hull_membership, HullMembershipResult, HullVerdict,
    PointSet, PolynomialFamily, Query,
};
use levi_core::reinhardt::{not_domain_of_holomorphy_report, HolomorphyConclusion};
use levi_core::selftest::{corpus, derivative_selftest};
use levi_core::{parse, CPoint};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Command, FamilyConfig, HullMethod, HullSection, PshModeConfig, RunConfig};
use crate::error::{CliError, CliResult};
use crate::report::{record_key, Report, Status, SCHEMA_VERSION};

struct Outcome {
    records: BTreeMap<String, Value>,
    summary: String,
    witnesses: bool,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("core types serialize")
}

fn tagged<T: Serialize>(kind: &str, v: &T) -> Value {
    let mut v = to_value(v);
    if let Some(obj) = v.as_object_mut() {
        obj.insert("kind".into(), Value::String(kind.into()));
    }
    v
}

/// Runs `cfg` on the current rayon pool.
pub fn run(cfg: &RunConfig) -> CliResult<Report> {
    let start = Instant::now();
    let command = cfg.command()?;
    let out = match command {
        Command::Classify => classify(cfg)?,
        Command::PshTest => psh_test(cfg)?,
        Command::LogDistanceProbe => log_distance(cfg)?,
        Command::Reinhardt => reinhardt(cfg)?,
        Command::DiscProbe => disc_probe(cfg)?,
        Command::Hull => hull(cfg)?,
        Command::Exhaustion => exhaustion(cfg)?,
        Command::DerivativeSelftest => selftest(cfg)?,
    };
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        command: command.name().into(),
        config: cfg.clone(),
        records: out.records,
        status: if out.witnesses {
            Status::Witnesses
        } else {
            Status::Clean
        },
        summary: out.summary,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs `cfg` on a dedicated pool of `workers` threads (`None`: rayon default).
pub fn run_with_workers(cfg: &RunConfig, workers: Option<usize>) -> CliResult<Report> {
    match workers {
        None => run(cfg),
        Some(0) => Err(CliError::field("workers", "must be positive")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::field("workers", e))?;
            pool.install(|| run(cfg))
        }
    }
}

fn verdict_phrase(v: Verdict) -> &'static str {
    match v {
        Verdict::StrictlyPseudoconvex => "strictly pseudoconvex",
        Verdict::LeviPseudoconvexOnly => "Levi pseudoconvex (not strictly)",
        Verdict::DegenerateGradient => "degenerate gradient",
        Verdict::NotLeviPseudoconvex => "not Levi pseudoconvex",
    }
}

fn classify(cfg: &RunConfig) -> CliResult<Outcome> {
    let domain = cfg.domain()?;
    let samples = cfg.samples_or(200)?;
    let tol = Tolerances {
        grad: None,
        eig: cfg.tol.map(|_| cfg.tol_or(0.0)).transpose()?,
    };
    let report = classify_domain(&domain, samples, cfg.seed, tol)?;
    let mut records = BTreeMap::new();
    for (i, r) in report.records.iter().enumerate() {
        records.insert(record_key("point", i), tagged("boundary_point", r));
    }
    let classified: usize = report.counts.values().sum();
    let summary = match report.verdict {
        None => format!("no point classified ({} errors)", report.errors),
        Some(v) => format!(
            "{} at {}/{} points",
            verdict_phrase(v),
            report.counts[&v],
            classified + report.errors
        ),
    };
    let witnesses = report.counts.contains_key(&Verdict::NotLeviPseudoconvex);
    records.insert(
        "domain".into(),
        json!({
            "kind": "domain_summary",
            "domain": report.domain,
            "requested": report.requested,
            "counts": to_value(&report.counts),
            "errors": report.errors,
            "sampler_skipped": report.sampler_skipped,
            "verdict": report.verdict,
            "min_eigenvalue": report.min_eigenvalue,
        }),
    );
    Ok(Outcome {
        records,
        summary,
        witnesses,
    })
}

fn psh_records(test: &PshVerdict, records: &mut BTreeMap<String, Value>) {
    for (i, v) in test.violations.iter().enumerate() {
        records.insert(record_key("violation", i), tagged("psh_violation", v));
    }
    let mut head = to_value(test);
    if let Some(obj) = head.as_object_mut() {
        obj.remove("violations");
        obj.insert("kind".into(), Value::String("psh_test".into()));
    }
    records.insert("test".into(), head);
}

fn psh_summary(test: &PshVerdict) -> String {
    if test.violation_count == 0 {
        format!(
            "consistent with plurisubharmonicity at {} tested samples ({} skipped)",
            test.tested, test.skipped
        )
    } else {
        format!(
            "not plurisubharmonic: {} violations among {} tested samples",
            test.violation_count, test.tested
        )
    }
}

fn circle_config(cfg: &RunConfig) -> CliResult<CircleAverageConfig> {
    let mut c = CircleAverageConfig {
        trials: cfg.samples_or(1000)?,
        seed: cfg.seed,
        tol: cfg.tol_or(1e-9)?,
        ..Default::default()
    };
    if let Some(p) = &cfg.psh {
        if let Some(r) = &p.radii {
            if !(r.min_fraction > 0.0
                && r.min_fraction <= r.max_fraction
                && r.max_fraction < 1.0
                && r.steps > 0)
            {
                return Err(CliError::field(
                    "psh.radii",
                    "need 0 < min_fraction <= max_fraction < 1, steps > 0",
                ));
            }
            c.radii = r.clone();
        }
        if let Some(q) = p.quadrature {
            if q < 3 {
                return Err(CliError::field("psh.quadrature", "need at least 3 nodes"));
            }
            c.quadrature = q;
        }
    }
    Ok(c)
}

fn psh_test(cfg: &RunConfig) -> CliResult<Outcome> {
    let region = cfg.domain()?;
    let f = parse(cfg.expression_text()?, region.dimension())
        .map_err(|e| CliError::field("expression", e))?;
    let mode = cfg.psh.as_ref().map(|p| p.mode).unwrap_or_default();
    let test = match mode {
        PshModeConfig::Spectral => psh_test_spectral(
            &f,
            &region,
            cfg.samples_or(1000)?,
            cfg.seed,
            cfg.tol_or(1e-9)?,
        )?,
        PshModeConfig::CircleAverage => {
            let c = circle_config(cfg)?;
            psh_test_circle_average(|z: &CPoint| Ok(f.eval_at(z)?.re), &region, &c)?
        }
    };
    let mut records = BTreeMap::new();
    psh_records(&test, &mut records);
    Ok(Outcome {
        records,
        summary: psh_summary(&test),
        witnesses: test.violation_count > 0,
    })
}

fn log_distance(cfg: &RunConfig) -> CliResult<Outcome> {
    let domain = cfg.domain()?;
    let metric = cfg.metric.unwrap_or_default();
    let r = log_distance_probe(&domain, metric, &circle_config(cfg)?)?;
    let mut records = BTreeMap::new();
    psh_records(&r.test, &mut records);
    let witnesses = r.test.violation_count > 0;
    let summary = if witnesses {
        format!(
            "-ln d ({metric:?}) is not plurisubharmonic: {} violations, worst deficit {:e}",
            r.test.violation_count,
            r.witness.as_ref().map_or(0.0, |w| w.deficit)
        )
    } else {
        format!("-ln d ({metric:?}) {}", psh_summary(&r.test))
    };
    Ok(Outcome {
        records,
        summary,
        witnesses,
    })
}

fn reinhardt(cfg: &RunConfig) -> CliResult<Outcome> {
    let domain = cfg.domain()?;
    let r = not_domain_of_holomorphy_report(
        &domain,
        cfg.samples_or(levi_core::reinhardt::DEFAULT_TRIALS)?,
        cfg.seed,
    )?;
    let witnesses = r.conclusion == HolomorphyConclusion::NotDomainOfHolomorphy;
    let summary = r.message.clone();
    let mut records = BTreeMap::new();
    records.insert("log-convexity".into(), tagged("log_convexity", &r));
    Ok(Outcome {
        records,
        summary,
        witnesses,
    })
}

fn disc_probe(cfg: &RunConfig) -> CliResult<Outcome> {
    let domain = cfg.domain()?;
    let section = cfg
        .disc
        .as_ref()
        .ok_or_else(|| CliError::field("disc", "missing"))?;
    let family = match &section.family {
        FamilyConfig::HartogsFigureWitness => hartogs_figure_witness_family(),
        FamilyConfig::Sequence { sequence } => sequence.clone(),
    };
    let mut probe = section.probe.clone().unwrap_or_default();
    if let Some(t) = cfg.tol {
        probe.tol = t;
    }
    validate_probe(&probe)?;
    let r = continuity_probe(&domain, &family, &probe)?;
    let (summary, witnesses) = match &r.status {
        ProbeStatus::Violation { witness, .. } => (
            format!(
                "continuity principle fails: limit point {:?} lies outside the domain",
                coords(witness)
            ),
            true,
        ),
        ProbeStatus::NoViolationFound => {
            ("no continuity-principle violation found".to_string(), false)
        }
        ProbeStatus::FamilyLeavesDomain { j, .. } => (
            format!("probe not applicable: disc {j} leaves the domain"),
            false,
        ),
        ProbeStatus::LimitBoundaryLeavesDomain { .. } => (
            "probe not applicable: the limit boundary leaves the domain".to_string(),
            false,
        ),
    };
    let mut records = BTreeMap::new();
    records.insert("probe".into(), tagged("continuity_probe", &r));
    Ok(Outcome {
        records,
        summary,
        witnesses,
    })
}

fn validate_probe(p: &ProbeConfig) -> CliResult<()> {
    if p.j_min == 0 || p.j_min > p.j_max {
        return Err(CliError::field("disc.probe", "need 1 <= j_min <= j_max"));
    }
    if p.interior == 0 || p.boundary == 0 {
        return Err(CliError::field("disc.probe", "need positive sample counts"));
    }
    Ok(())
}

fn coords(z: &CPoint) -> Vec<[f64; 2]> {
    z.iter().map(|c| [c.re, c.im]).collect()
}

fn point_set(section: &HullSection, complex: bool) -> CliResult<PointSet> {
    match (&section.points, &section.points_file) {
        (Some(v), None) => {
            let k = if complex {
                let pts: Vec<CPoint> = v
                    .clone()
                    .try_into()
                    .map_err(|e: toml::de::Error| CliError::field("hull.points", e.message()))?;
                PointSet::complex(pts)
            } else {
                let pts: Vec<Vec<f64>> = v
                    .clone()
                    .try_into()
                    .map_err(|e: toml::de::Error| CliError::field("hull.points", e.message()))?;
                PointSet::real(pts)
            };
            k.map_err(|e| CliError::field("hull.points", e))
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
                path: path.clone(),
                source: e,
            })?;
            PointSet::parse(&text, complex).map_err(|e| CliError::field("hull.points_file", e))
        }
        _ => Err(CliError::field(
            "hull",
            "exactly one of `points` and `points_file` is required",
        )),
    }
}

fn queries(section: &HullSection, complex: bool, n: usize) -> CliResult<Vec<Query>> {
    let bad = |e: toml::de::Error| CliError::field("hull.queries", e.message());
    let qs: Vec<Query> = if complex {
        let v: Vec<CPoint> = section.queries.clone().try_into().map_err(bad)?;
        v.into_iter().map(Query::Complex).collect()
    } else {
        let v: Vec<Vec<f64>> = section.queries.clone().try_into().map_err(bad)?;
        v.into_iter().map(Query::Real).collect()
    };
    for (i, q) in qs.iter().enumerate() {
        let m = match q {
            Query::Real(x) => x.len(),
            Query::Complex(z) => z.dim(),
        };
        if m != n {
            return Err(CliError::field(
                &format!("hull.queries[{i}]"),
                format!("dimension {m}, expected {n}"),
            ));
        }
    }
    Ok(qs)
}

fn hull(cfg: &RunConfig) -> CliResult<Outcome> {
    let section = cfg
        .hull
        .as_ref()
        .ok_or_else(|| CliError::field("hull", "missing"))?;
    let complex = section.method != HullMethod::Affine;
    let k = point_set(section, complex)?;
    if k.is_empty() {
        return Err(CliError::field("hull.points", "empty point set"));
    }
    let qs = queries(section, complex, k.dimension())?;
    let tol = cfg.tol_or(1e-9)?;
    let results: Vec<HullMembershipResult> = match section.method {
        HullMethod::Affine => {
            let count = cfg.samples_or(500)?;
            let fam = levi_core::hulls::AffineFamily::new(&k, count, cfg.seed)?;
            qs.iter()
                .map(|q| match q {
                    Query::Real(x) => fam.membership(x, tol),
                    Query::Complex(_) => unreachable!("validated above"),
                })
                .collect()
        }
        HullMethod::Polynomial => {
            let degree = section.degree.unwrap_or(3);
            let family: PolynomialFamily = section
                .family
                .map(Into::into)
                .unwrap_or(PolynomialFamily::MonomialsAndRandom);
            let count = cfg.samples_or(200)?;
            qs.iter()
                .map(|q| match q {
                    Query::Complex(z) => {
                        polynomial_hull_membership(&k, z, degree, family, count, cfg.seed, tol)
                    }
                    Query::Real(_) => unreachable!("validated above"),
                })
                .collect::<levi_core::Result<_>>()?
        }
        HullMethod::Bound => {
            let bound = hull_boundedness_check(&k)?;
            qs.iter()
                .map(|q| {
                    let Query::Complex(z) = q else {
                        unreachable!("validated above")
                    };
                    let cert = bound.certify_outside(z, tol);
                    let margin = z
                        .iter()
                        .zip(&bound.per_coordinate)
                        .map(|(c, b)| c.norm() - b)
                        .fold(f64::NEG_INFINITY, f64::max);
                    HullMembershipResult {
                        verdict: if cert.is_some() {
                            HullVerdict::Outside
                        } else if margin >= -tol {
                            HullVerdict::BoundaryAmbiguous
                        } else {
                            HullVerdict::Inside
                        },
                        certificate: cert,
                        margin,
                        tested: z.dim(),
                        tol,
                    }
                })
                .collect()
        }
    };
    let mut records = BTreeMap::new();
    let mut tally = [0usize; 3];
    for (i, (q, r)) in qs.iter().zip(&results).enumerate() {
        tally[match r.verdict {
            HullVerdict::Inside => 0,
            HullVerdict::Outside => 1,
            HullVerdict::BoundaryAmbiguous => 2,
        }] += 1;
        records.insert(
            record_key("query", i),
            json!({ "kind": "hull_query", "query": to_value(q), "result": to_value(r) }),
        );
    }
    records.insert("point-set".into(), tagged("point_set", &k));
    Ok(Outcome {
        records,
        summary: format!(
            "{} queries: {} inside, {} outside (certified), {} ambiguous",
            qs.len(),
            tally[0],
            tally[1],
            tally[2]
        ),
        // separating certificates are answers, not failures of a property
        witnesses: false,
    })
}

fn exhaustion(cfg: &RunConfig) -> CliResult<Outcome> {
    let domain = cfg.domain()?;
    let function = match &cfg.exhaustion {
        Some(s) => s.function.clone(),
        None => ExhaustionFunction::NormSquaredMinusLogDistance {
            metric: cfg.metric.unwrap_or(Metric::Euclidean),
        },
    };
    let ex =
        Exhaustion::new(domain, function).map_err(|e| CliError::field("exhaustion.function", e))?;
    let probe = ExhaustionProbe::new(&ex, cfg.samples_or(16)?, cfg.seed)?;
    let check = exhaustion_blowup_check(&probe, cfg.tol_or(1e-9)?);
    let mut records = BTreeMap::new();
    for (i, (s, v)) in probe.sequences.iter().zip(&check.sequences).enumerate() {
        records.insert(
            record_key("sequence", i),
            json!({ "kind": "approach_sequence", "sequence": to_value(s), "verdict": to_value(v) }),
        );
    }
    records.insert(
        "probe".into(),
        json!({
            "kind": "exhaustion_probe",
            "function": to_value(&probe.function),
            "domain_variant": probe.domain_variant,
            "skipped": probe.skipped,
            "pass": check.pass,
        }),
    );
    let failing = check.sequences.iter().filter(|s| !s.pass).count();
    let summary = if check.pass {
        format!(
            "blows up along all {} approach sequences",
            check.sequences.len()
        )
    } else {
        format!(
            "fails to blow up along {failing} of {} approach sequences",
            check.sequences.len()
        )
    };
    Ok(Outcome {
        records,
        summary,
        witnesses: !check.pass,
    })
}

fn selftest(cfg: &RunConfig) -> CliResult<Outcome> {
    let expressions = match &cfg.selftest {
        Some(list) => list
            .iter()
            .map(|e| (e.expression.clone(), e.dimension))
            .collect(),
        None => corpus(),
    };
    let r = derivative_selftest(
        &expressions,
        cfg.samples_or(levi_core::selftest::DEFAULT_POINTS)?,
        cfg.seed,
        cfg.tol_or(levi_core::selftest::DEFAULT_TOL)?,
    )?;
    let mut records = BTreeMap::new();
    for (i, f) in r.failures.iter().enumerate() {
        records.insert(record_key("mismatch", i), tagged("derivative_mismatch", f));
    }
    let mut head = to_value(&r);
    if let Some(obj) = head.as_object_mut() {
        obj.remove("failures");
        obj.insert("kind".into(), Value::String("derivative_selftest".into()));
    }
    records.insert("selftest".into(), head);
    let summary = format!(
        "{} derivative checks, max relative error {:.3e}: {}",
        r.checked,
        r.max_relative_error,
        if r.pass { "pass" } else { "FAIL" }
    );
    Ok(Outcome {
        records,
        summary,
        witnesses: !r.pass,
    })
}
