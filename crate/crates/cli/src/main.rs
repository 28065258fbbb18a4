use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use levi_cli::{config::Command, run_with_workers, verify, CliError, CliResult, Report, RunConfig};
use levi_core::domain::Metric;

#[derive(Parser)]
#[command(
    name = "levi",
    version,
    about = "Pseudoconvexity and plurisubharmonicity probes in several complex variables"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Classify boundary points of a domain by the Levi form.
    Classify(RunArgs),
    /// Test an expression for plurisubharmonicity on a region.
    PshTest(RunArgs),
    /// Sub-mean-value test of -ln d on a domain.
    LogDistanceProbe(RunArgs),
    /// Logarithmic convexity test for complete Reinhardt domains.
    Reinhardt(RunArgs),
    /// Continuity-principle probe with a family of analytic discs.
    DiscProbe(RunArgs),
    /// Hull membership with separating certificates.
    Hull(RunArgs),
    /// Blow-up probe for an exhaustion function.
    Exhaustion(RunArgs),
    /// Symbolic derivatives against finite differences.
    DerivativeSelftest(RunArgs),
    /// Re-check every witness and certificate in a report.
    Verify { report: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    metric: Option<Metric>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

impl RunArgs {
    fn into_config(self, command: Command) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::empty(command),
        };
        match cfg.command {
            Some(c) if c != command => {
                return Err(CliError::CommandMismatch {
                    config: c.name().into(),
                    invoked: command.name().into(),
                })
            }
            _ => cfg.command = Some(command),
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if self.samples.is_some() {
            cfg.samples = self.samples;
        }
        if self.tol.is_some() {
            cfg.tol = self.tol;
        }
        if self.metric.is_some() {
            cfg.metric = self.metric;
        }
        if self.out.is_some() {
            cfg.out = self.out;
        }
        if self.workers.is_some() {
            cfg.workers = self.workers;
        }
        Ok(cfg)
    }
}

fn execute(cli: Cli) -> CliResult<i32> {
    let (command, args) = match cli.command {
        Sub::Verify { report } => {
            let r = Report::read(&report)?;
            let outcome = verify(&r)?;
            for f in &outcome.failures {
                println!("FAIL {}: {}", f.record, f.reason);
            }
            if outcome.pass() {
                println!("pass: {} records re-verified", outcome.checked);
                return Ok(0);
            }
            println!(
                "fail: {} of {} records did not re-verify",
                outcome.failures.len(),
                outcome.checked
            );
            return Ok(2);
        }
        Sub::Classify(a) => (Command::Classify, a),
        Sub::PshTest(a) => (Command::PshTest, a),
        Sub::LogDistanceProbe(a) => (Command::LogDistanceProbe, a),
        Sub::Reinhardt(a) => (Command::Reinhardt, a),
        Sub::DiscProbe(a) => (Command::DiscProbe, a),
        Sub::Hull(a) => (Command::Hull, a),
        Sub::Exhaustion(a) => (Command::Exhaustion, a),
        Sub::DerivativeSelftest(a) => (Command::DerivativeSelftest, a),
    };
    let cfg = args.into_config(command)?;
    let report = run_with_workers(&cfg, cfg.workers)?;
    match &cfg.out {
        Some(path) => {
            report.write(path)?;
            println!("{}", report.summary);
        }
        None => {
            println!("{}", report.to_json());
            eprintln!("{}", report.summary);
        }
    }
    Ok(report.status.exit_code())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
