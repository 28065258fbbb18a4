//! Versioned JSON reports.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u64 = 1;

/// Field excluded from the comparison canon.
pub const WALL_TIME_FIELD: &str = "wall_time_seconds";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// Completed without any negative verdict.
    Clean,
    /// Completed; at least one witness of a failed property is embedded.
    Witnesses,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Clean => 0,
            Status::Witnesses => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u64,
    pub command: String,
    pub config: RunConfig,
    /// Sorted by key; keys are zero-padded so lexical order is index order.
    pub records: BTreeMap<String, Value>,
    pub status: Status,
    pub summary: String,
    pub wall_time_seconds: f64,
}

/// `prefix-0042`.
pub fn record_key(prefix: &str, i: usize) -> String {
    format!("{prefix}-{i:06}")
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// The report without its wall-time field, as compact JSON. Equal
    /// configs give byte-identical canonical forms.
    pub fn canonical_json(&self) -> String {
        canonical(&serde_json::to_value(self).expect("reports serialize"))
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| CliError::Report(e.to_string()))?;
        let found = v
            .get("schema_version")
            .and_then(Value::as_u64)
            .ok_or_else(|| CliError::Report("missing schema_version".into()))?;
        if found != SCHEMA_VERSION {
            return Err(CliError::Schema {
                found,
                supported: SCHEMA_VERSION,
            });
        }
        serde_json::from_value(v).map_err(|e| CliError::Report(e.to_string()))
    }
}

/// Canonical form of a report value (wall time removed).
pub fn canonical(v: &Value) -> String {
    let mut v = v.clone();
    if let Some(obj) = v.as_object_mut() {
        obj.remove(WALL_TIME_FIELD);
    }
    serde_json::to_string(&v).expect("values serialize")
}
