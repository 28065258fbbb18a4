//! Run configuration: a TOML document plus command-line overrides.

use std::path::{Path, PathBuf};

use levi_core::classifier::RadiusSchedule;
use levi_core::disc::{DiscSequence, ProbeConfig};
use levi_core::domain::{BoundingBox, DomainSpec, Metric};
use levi_core::exhaustion::ExhaustionFunction;
use levi_core::hulls::PolynomialFamily;
use levi_core::{parse, CPoint};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Classify,
    PshTest,
    LogDistanceProbe,
    Reinhardt,
    DiscProbe,
    Hull,
    Exhaustion,
    DerivativeSelftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::PshTest => "psh-test",
            Command::LogDistanceProbe => "log-distance-probe",
            Command::Reinhardt => "reinhardt",
            Command::DiscProbe => "disc-probe",
            Command::Hull => "hull",
            Command::Exhaustion => "exhaustion",
            Command::DerivativeSelftest => "derivative-selftest",
        }
    }
}

/// Domain description as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainConfig {
    Ball {
        center: CPoint,
        radius: f64,
    },
    Polydisc {
        center: CPoint,
        radii: Vec<f64>,
    },
    ReinhardtUnion {
        members: Vec<Vec<f64>>,
    },
    HartogsFigure,
    /// `{ z : Re f(z) < level }`.
    Sublevel {
        expression: String,
        dimension: usize,
        #[serde(default)]
        level: f64,
        #[serde(default)]
        bbox: Option<BoundingBox>,
    },
    Intersection {
        members: Vec<DomainConfig>,
    },
    Whole {
        dimension: usize,
    },
}

impl DomainConfig {
    pub fn build(&self) -> levi_core::Result<DomainSpec> {
        match self {
            DomainConfig::Ball { center, radius } => DomainSpec::ball(center.clone(), *radius),
            DomainConfig::Polydisc { center, radii } => {
                DomainSpec::polydisc(center.clone(), radii.clone())
            }
            DomainConfig::ReinhardtUnion { members } => {
                DomainSpec::reinhardt_union(members.clone())
            }
            DomainConfig::HartogsFigure => Ok(DomainSpec::hartogs_figure()),
            DomainConfig::Sublevel {
                expression,
                dimension,
                level,
                bbox,
            } => DomainSpec::sublevel(
                parse(expression, *dimension)?,
                *dimension,
                *level,
                bbox.clone(),
            ),
            DomainConfig::Intersection { members } => DomainSpec::intersection(
                members
                    .iter()
                    .map(|m| m.build())
                    .collect::<levi_core::Result<_>>()?,
            ),
            DomainConfig::Whole { dimension } => {
                if *dimension == 0 {
                    return Err(levi_core::Error::InvalidInput(
                        "dimension must be at least 1".into(),
                    ));
                }
                Ok(DomainSpec::Whole {
                    dimension: *dimension,
                })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PshModeConfig {
    #[default]
    Spectral,
    CircleAverage,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PshSection {
    #[serde(default)]
    pub mode: PshModeConfig,
    #[serde(default)]
    pub radii: Option<RadiusSchedule>,
    #[serde(default)]
    pub quadrature: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyConfig {
    /// The built-in dilated exponential family for the Hartogs figure.
    HartogsFigureWitness,
    Sequence {
        sequence: DiscSequence,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscSection {
    pub family: FamilyConfig,
    #[serde(default)]
    pub probe: Option<ProbeConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HullMethod {
    /// Real affine functionals (convex hull).
    #[default]
    Affine,
    /// Holomorphic polynomials (polynomial hull).
    Polynomial,
    /// Coordinate functions (bounding polydisc).
    Bound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HullSection {
    #[serde(default)]
    pub method: HullMethod,
    /// `K`, inline. Real points are coordinate lists; complex points are
    /// lists of `[re, im]` pairs.
    #[serde(default)]
    pub points: Option<toml::Value>,
    /// `K` read from a text file (one comma-separated point per line).
    #[serde(default)]
    pub points_file: Option<PathBuf>,
    pub queries: toml::Value,
    #[serde(default)]
    pub degree: Option<u32>,
    #[serde(default)]
    pub family: Option<PolynomialFamilyConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolynomialFamilyConfig {
    Monomials,
    Random,
    MonomialsAndRandom,
}

impl From<PolynomialFamilyConfig> for PolynomialFamily {
    fn from(f: PolynomialFamilyConfig) -> Self {
        match f {
            PolynomialFamilyConfig::Monomials => PolynomialFamily::Monomials,
            PolynomialFamilyConfig::Random => PolynomialFamily::Random,
            PolynomialFamilyConfig::MonomialsAndRandom => PolynomialFamily::MonomialsAndRandom,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExhaustionSection {
    pub function: ExhaustionFunction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelftestExpression {
    pub expression: String,
    pub dimension: usize,
}

/// Everything that determines a run. Two equal configs produce identical
/// reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub metric: Option<Metric>,
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
    /// Worker threads; never affects results, so not echoed.
    #[serde(default, skip_serializing)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub domain: Option<DomainConfig>,
    #[serde(default)]
    pub expression: Option<String>,
    #[serde(default)]
    pub psh: Option<PshSection>,
    #[serde(default)]
    pub disc: Option<DiscSection>,
    #[serde(default)]
    pub hull: Option<HullSection>,
    #[serde(default)]
    pub exhaustion: Option<ExhaustionSection>,
    #[serde(default)]
    pub selftest: Option<Vec<SelftestExpression>>,
}

impl RunConfig {
    pub fn empty(command: Command) -> Self {
        RunConfig {
            command: Some(command),
            seed: 0,
            samples: None,
            tol: None,
            metric: None,
            out: None,
            workers: None,
            domain: None,
            expression: None,
            psh: None,
            disc: None,
            hull: None,
            exhaustion: None,
            selftest: None,
        }
    }

    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config {
            path: e
                .span()
                .map(|s| format!("byte {}..{}", s.start, s.end))
                .unwrap_or_default(),
            message: e.message().to_string(),
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut cfg = Self::from_toml(&text)?;
        // relative point files resolve against the config's directory
        if let Some(h) = cfg.hull.as_mut() {
            if let (Some(file), Some(dir)) = (h.points_file.as_mut(), path.parent()) {
                if file.is_relative() {
                    *file = dir.join(&*file);
                }
            }
        }
        Ok(cfg)
    }

    pub fn command(&self) -> CliResult<Command> {
        self.command
            .ok_or_else(|| CliError::field("command", "missing"))
    }

    pub fn domain(&self) -> CliResult<DomainSpec> {
        let d = self
            .domain
            .as_ref()
            .ok_or_else(|| CliError::field("domain", "missing"))?;
        d.build().map_err(|e| CliError::field("domain", e))
    }

    pub fn expression_text(&self) -> CliResult<&str> {
        self.expression
            .as_deref()
            .ok_or_else(|| CliError::field("expression", "missing"))
    }

    pub fn samples_or(&self, default: usize) -> CliResult<usize> {
        match self.samples {
            Some(0) => Err(CliError::field("samples", "must be positive")),
            Some(n) => Ok(n),
            None => Ok(default),
        }
    }

    pub fn tol_or(&self, default: f64) -> CliResult<f64> {
        match self.tol {
            Some(t) if !(t >= 0.0 && t.is_finite()) => Err(CliError::field(
                "tol",
                format!("{t} must be finite and non-negative"),
            )),
            Some(t) => Ok(t),
            None => Ok(default),
        }
    }
}
