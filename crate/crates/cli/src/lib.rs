//! Command-line front end: TOML configs in, versioned JSON reports out.

pub mod config;
pub mod error;
pub mod report;
pub mod run;
pub mod verify;

pub use config::{Command, RunConfig};
pub use error::{CliError, CliResult};
pub use report::{Report, Status};
pub use run::{run, run_with_workers};
pub use verify::{verify, VerifyOutcome};
