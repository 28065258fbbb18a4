//! Re-verification of the witnesses and certificates embedded in a report.

use levi_core::classifier::{
    circle_deficit, classify_point, minus_log_distance, BoundaryRecord, PshViolation, Tolerances,
};
use levi_core::disc::{disc_eval, DiscReport, ProbeStatus};
use levi_core::domain::{DomainSpec, Metric};
use levi_core::exhaustion::{ApproachSequence, Exhaustion, ExhaustionFunction};
use levi_core::hulls::{HullMembershipResult, HullVerdict, PointSet, Query};
use levi_core::levi::levi_form;
use levi_core::reinhardt::{HolomorphyReport, LogImage};
use levi_core::selftest::{finite_difference, DerivativeCheck, DerivativeKind};
use levi_core::{parse, wirtinger, CPoint, Expr, C64};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::config::{PshModeConfig, RunConfig};
use crate::error::{CliError, CliResult};
use crate::report::Report;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyFailure {
    pub record: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyOutcome {
    /// Records holding a witness or certificate that was re-checked.
    pub checked: usize,
    pub failures: Vec<VerifyFailure>,
}

impl VerifyOutcome {
    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Relative agreement used when recomputed numbers are compared with
/// reported ones.
const AGREE: f64 = 1e-9;

fn agree(a: f64, b: f64) -> bool {
    (a - b).abs() <= AGREE * (1.0 + a.abs().max(b.abs()))
}

fn decode<T: DeserializeOwned>(v: &Value) -> Result<T, String> {
    serde_json::from_value(v.clone()).map_err(|e| format!("undecodable record: {e}"))
}

fn kind(v: &Value) -> Option<&str> {
    v.get("kind").and_then(Value::as_str)
}

/// Re-checks every witness and certificate in `report`. Records of unknown
/// kind carry nothing to check and are skipped.
pub fn verify(report: &Report) -> CliResult<VerifyOutcome> {
    let ctx = Context::new(&report.config, report)?;
    let mut out = VerifyOutcome {
        checked: 0,
        failures: Vec::new(),
    };
    for (key, v) in &report.records {
        let result = match kind(v) {
            Some("boundary_point") => ctx.boundary_point(v),
            Some("psh_violation") => ctx.psh_violation(v),
            Some("log_convexity") => ctx.log_convexity(v),
            Some("continuity_probe") => ctx.continuity(v),
            Some("hull_query") => ctx.hull_query(v),
            Some("approach_sequence") => ctx.approach(v),
            Some("derivative_mismatch") => ctx.derivative(v),
            _ => Ok(false),
        };
        match result {
            Ok(true) => out.checked += 1,
            Ok(false) => {}
            Err(reason) => {
                out.checked += 1;
                out.failures.push(VerifyFailure {
                    record: key.clone(),
                    reason,
                });
            }
        }
    }
    Ok(out)
}

struct Context<'a> {
    cfg: &'a RunConfig,
    domain: Option<DomainSpec>,
    points: Option<PointSet>,
}

type Check = Result<bool, String>;

impl<'a> Context<'a> {
    fn new(cfg: &'a RunConfig, report: &Report) -> CliResult<Self> {
        let domain = match &cfg.domain {
            Some(d) => Some(d.build().map_err(|e| CliError::field("config.domain", e))?),
            None => None,
        };
        let points = match report.records.get("point-set") {
            Some(v) => Some(decode(v).map_err(CliError::Report)?),
            None => None,
        };
        Ok(Context {
            cfg,
            domain,
            points,
        })
    }

    fn domain(&self) -> Result<&DomainSpec, String> {
        self.domain
            .as_ref()
            .ok_or_else(|| "config echo has no domain".to_string())
    }

    fn expression(&self, n: usize) -> Result<Expr, String> {
        let text = self
            .cfg
            .expression
            .as_deref()
            .ok_or("config echo has no expression")?;
        parse(text, n).map_err(|e| e.to_string())
    }

    fn boundary_point(&self, v: &Value) -> Check {
        let rec: BoundaryRecord = decode(v)?;
        let Ok(stored) = &rec.result else {
            return Ok(false);
        };
        let domain = self.domain()?;
        if domain
            .contains(&rec.sample.point)
            .map_err(|e| e.to_string())?
        {
            return Err("boundary point lies inside the domain".into());
        }
        if stored.rederive() != stored.verdict {
            return Err(format!(
                "stored fields imply {:?}, not {:?}",
                stored.rederive(),
                stored.verdict
            ));
        }
        let f = domain
            .defining_function(&rec.sample.source)
            .ok_or("no defining function for the recorded boundary source")?;
        let tol = Tolerances {
            grad: Some(stored.tol_grad),
            eig: Some(stored.tol_eig),
        };
        let fresh = classify_point(&f, &rec.sample.point, tol).map_err(|e| e.to_string())?;
        if fresh.verdict != stored.verdict {
            return Err(format!(
                "recomputed verdict {:?}, reported {:?}",
                fresh.verdict, stored.verdict
            ));
        }
        if fresh.eigenvalues.len() != stored.eigenvalues.len()
            || !fresh
                .eigenvalues
                .iter()
                .zip(&stored.eigenvalues)
                .all(|(a, b)| agree(*a, *b))
        {
            return Err(format!(
                "recomputed eigenvalues {:?}, reported {:?}",
                fresh.eigenvalues, stored.eigenvalues
            ));
        }
        Ok(true)
    }

    fn psh_violation(&self, v: &Value) -> Check {
        let w: PshViolation = decode(v)?;
        let domain = self.domain()?;
        let n = domain.dimension();
        let tol = self.cfg.tol.unwrap_or(1e-9);
        if w.deficit.is_nan() || w.deficit <= tol {
            return Err(format!(
                "deficit {:e} does not exceed tol {tol:e}",
                w.deficit
            ));
        }
        if w.radius == 0.0 {
            // spectral witness: the Levi form along the eigenvector
            let f = self.expression(n)?;
            let d2 = w.direction.norm().powi(2);
            let form = levi_form(&f, &w.point, &w.direction).map_err(|e| e.to_string())? / d2;
            if !agree(-form, w.deficit) {
                return Err(format!(
                    "Levi form {form:e} does not match deficit {:e}",
                    w.deficit
                ));
            }
            return Ok(true);
        }
        let quadrature = self
            .cfg
            .psh
            .as_ref()
            .and_then(|p| p.quadrature)
            .unwrap_or(64);
        let inside = (0..quadrature).all(|k| {
            let z = C64::from_polar(
                w.radius,
                std::f64::consts::TAU * k as f64 / quadrature as f64,
            );
            domain
                .contains(&w.point.add_scaled(&w.direction, z))
                .unwrap_or(false)
        });
        if !inside {
            return Err("test circle leaves the domain".into());
        }
        let fresh = if self.cfg.command == Some(crate::config::Command::LogDistanceProbe) {
            let metric = self.cfg.metric.unwrap_or(Metric::Euclidean);
            circle_deficit(
                &minus_log_distance(domain, metric),
                &w.point,
                &w.direction,
                w.radius,
                quadrature,
            )
        } else {
            let mode = self.cfg.psh.as_ref().map(|p| p.mode).unwrap_or_default();
            if mode != PshModeConfig::CircleAverage {
                return Err("circle witness in a spectral test".into());
            }
            let f = self.expression(n)?;
            circle_deficit(
                &|z: &CPoint| Ok(f.eval_at(z)?.re),
                &w.point,
                &w.direction,
                w.radius,
                quadrature,
            )
        };
        match fresh {
            Some(d) if agree(d, w.deficit) => Ok(true),
            Some(d) => Err(format!(
                "recomputed deficit {d:e}, reported {:e}",
                w.deficit
            )),
            None => Err("deficit is not computable at the witness".into()),
        }
    }

    fn log_convexity(&self, v: &Value) -> Check {
        let r: HolomorphyReport = decode(v)?;
        let Some(w) = &r.witness else {
            return Ok(false);
        };
        let image = LogImage::new(self.domain()?).map_err(|e| e.to_string())?;
        if w.verify(&image) {
            Ok(true)
        } else {
            Err(format!(
                "witness does not re-verify (p {:?}, q {:?}, midpoint {:?})",
                w.p.0, w.q.0, w.midpoint.0
            ))
        }
    }

    fn continuity(&self, v: &Value) -> Check {
        let r: DiscReport = decode(v)?;
        let ProbeStatus::Violation { witness, parameter } = &r.status else {
            return Ok(false);
        };
        let domain = self.domain()?;
        if domain.contains(witness).map_err(|e| e.to_string())? {
            return Err("limit witness lies inside the domain".into());
        }
        let limit = r.family.limit();
        let z = disc_eval(&limit, *parameter).map_err(|e| e.to_string())?;
        if z.distance(witness) > 1e-12 * (1.0 + z.norm()) {
            return Err("witness is not the limit disc at the reported parameter".into());
        }
        for w in levi_core::disc::boundary_nodes(r.config.boundary) {
            let p = disc_eval(&limit, w).map_err(|e| e.to_string())?;
            if !domain.contains(&p).map_err(|e| e.to_string())? {
                return Err("limit boundary leaves the domain".into());
            }
        }
        Ok(true)
    }

    fn hull_query(&self, v: &Value) -> Check {
        let query: Query = decode(&v["query"])?;
        let result: HullMembershipResult = decode(&v["result"])?;
        if result.verdict != HullVerdict::Outside {
            return Ok(false);
        }
        let k = self.points.as_ref().ok_or("report has no point set")?;
        let cert = result
            .certificate
            .as_ref()
            .ok_or("Outside verdict without certificate")?;
        if cert.verify(k, &query, result.tol) {
            Ok(true)
        } else {
            Err("certificate does not separate the query from the point set".into())
        }
    }

    fn approach(&self, v: &Value) -> Check {
        let seq: ApproachSequence = decode(&v["sequence"])?;
        let pass = v["verdict"]["pass"].as_bool().ok_or("missing verdict")?;
        if pass {
            return Ok(false);
        }
        let function: ExhaustionFunction = match &self.cfg.exhaustion {
            Some(s) => s.function.clone(),
            None => ExhaustionFunction::NormSquaredMinusLogDistance {
                metric: self.cfg.metric.unwrap_or(Metric::Euclidean),
            },
        };
        let ex = Exhaustion::new(self.domain()?.clone(), function).map_err(|e| e.to_string())?;
        if seq.points.len() != seq.values.len() || seq.values.len() < 2 {
            return Err("sequence points and values do not line up".into());
        }
        for (p, val) in seq.points.iter().zip(&seq.values) {
            let fresh = ex.eval(p).map_err(|e| e.to_string())?;
            if !agree(fresh, *val) {
                return Err(format!("recomputed value {fresh:e}, reported {val:e}"));
            }
        }
        let tol = self.cfg.tol.unwrap_or(1e-9);
        let probe = levi_core::exhaustion::ExhaustionProbe {
            function: ex.function.clone(),
            domain_variant: String::new(),
            seed: 0,
            sequences: vec![seq],
            skipped: 0,
        };
        if levi_core::exhaustion::exhaustion_blowup_check(&probe, tol).pass {
            return Err("sequence blows up; the reported failure does not re-verify".into());
        }
        Ok(true)
    }

    fn derivative(&self, v: &Value) -> Check {
        let c: DerivativeCheck = decode(v)?;
        let list: Vec<(String, usize)> = match &self.cfg.selftest {
            Some(l) => l
                .iter()
                .map(|e| (e.expression.clone(), e.dimension))
                .collect(),
            None => levi_core::selftest::corpus(),
        };
        let (text, n) = list
            .get(c.expression)
            .ok_or("expression index out of range")?;
        let f = parse(text, *n).map_err(|e| e.to_string())?;
        let seed = self.cfg.seed;
        let z = levi_core::selftest::corpus_point(seed, c.expression, c.point, *n);
        let g = match c.derivative {
            DerivativeKind::First { j, conjugated } => wirtinger(&f, j + 1, conjugated),
            DerivativeKind::Mixed { j, k } => wirtinger(&wirtinger(&f, j + 1, false), k + 1, true),
            DerivativeKind::Unmixed { j, k } => {
                wirtinger(&wirtinger(&f, j + 1, false), k + 1, false)
            }
        };
        let s = g.eval_at(&z).map_err(|e| e.to_string())?;
        let fd = finite_difference(&f, &z, c.derivative).map_err(|e| e.to_string())?;
        let rel = (s - fd).norm() / fd.norm().max(1.0);
        let tol = self.cfg.tol.unwrap_or(levi_core::selftest::DEFAULT_TOL);
        if rel > tol && agree(rel, c.relative_error) {
            Ok(true)
        } else {
            Err(format!(
                "recomputed relative error {rel:e}, reported {:e}",
                c.relative_error
            ))
        }
    }
}
