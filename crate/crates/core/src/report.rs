//! Run configuration and the structured verification report.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::catalog::Expected;
use crate::error::{GeomError, Result};
use crate::nonparallel::{CaseLabel, CheckedClaim};
use crate::ruled::ExtensionCheck;

pub const SCHEMA_VERSION: u32 = 1;

fn default_samples() -> usize {
    10
}
fn default_seed() -> u64 {
    7
}
fn default_rank_tol() -> f64 {
    crate::subspaces::DEFAULT_RANK_TOL
}
fn default_fd_step() -> f64 {
    1e-3
}
fn default_lambda_radius() -> f64 {
    0.1
}
fn default_max_normal_order() -> usize {
    2
}

/// Everything that determines a verification run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub entry: String,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_rank_tol")]
    pub rank_tol: f64,
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
    /// Initial fiber radius of ruled extensions.
    #[serde(default = "default_lambda_radius")]
    pub lambda_radius: f64,
    /// Lowest normal flag order computed; entries may ask for more.
    #[serde(default = "default_max_normal_order")]
    pub max_normal_order: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(entry: impl Into<String>) -> Self {
        Self {
            entry: entry.into(),
            params: BTreeMap::new(),
            samples: default_samples(),
            seed: default_seed(),
            rank_tol: default_rank_tol(),
            fd_step: default_fd_step(),
            lambda_radius: default_lambda_radius(),
            max_normal_order: default_max_normal_order(),
            out: None,
        }
    }

    pub fn with_param(mut self, key: &str, value: &str) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(GeomError::Config(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("rank_tol", self.rank_tol)?;
        positive("fd_step", self.fd_step)?;
        positive("lambda_radius", self.lambda_radius)?;
        if self.rank_tol >= 1e-2 {
            return Err(GeomError::Config(format!("rank_tol {} is too coarse", self.rank_tol)));
        }
        if self.fd_step >= 0.1 {
            return Err(GeomError::Config(format!("fd_step {} is too large", self.fd_step)));
        }
        if self.samples == 0 || self.samples > 10_000 {
            return Err(GeomError::Config(format!(
                "samples must lie in 1..=10000, got {}",
                self.samples
            )));
        }
        if !(1..=8).contains(&self.max_normal_order) {
            return Err(GeomError::Config(format!(
                "max_normal_order must lie in 1..=8, got {}",
                self.max_normal_order
            )));
        }
        Ok(())
    }

    /// Parses a JSON config; errors carry the line and column.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| {
            GeomError::Config(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn emit(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is always serializable")
    }
}

/// How a verdict compares its observed value against the tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparator {
    /// Worst observed residual must not exceed the tolerance.
    AtMost,
    /// Smallest observed value must reach the tolerance.
    AtLeast,
    /// Count of mismatching points must be zero.
    Exact,
}

/// Aggregate judgement of one invariant over the run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub invariant: String,
    pub comparator: Comparator,
    pub tolerance: f64,
    pub worst: f64,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FindingKind {
    Invariant,
    Degeneracy,
    Error,
}

/// A concrete failure, tied to a point when there is one.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Finding {
    pub kind: FindingKind,
    pub invariant: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<usize>,
    pub message: String,
}

/// A candidate sample point that failed the regularity screen.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Rejection {
    pub x: Vec<f64>,
    pub reason: String,
}

/// Per-point results of the pipeline.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointRecord {
    pub index: usize,
    pub x: Vec<f64>,
    pub flag_dims: Vec<usize>,
    pub p: usize,
    pub q: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    pub d: usize,
    pub nu: usize,
    /// Certified lower bounds for `ν_s`, keyed by `s`.
    pub nu_s: BTreeMap<usize, usize>,
    pub case: CaseLabel,
    pub claims: Vec<CheckedClaim>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    pub residuals: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extension: Option<ExtensionCheck>,
    /// Stage failures that did not disqualify the point.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Timings {
    pub total_ms: f64,
    pub stages_ms: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntryInfo {
    pub name: String,
    pub params: BTreeMap<String, String>,
    pub anchor: String,
    pub expected: Expected,
}

/// The full outcome of `verify`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub config: RunConfig,
    pub entry: EntryInfo,
    pub points: Vec<PointRecord>,
    pub rejected: Vec<Rejection>,
    pub verdicts: Vec<Verdict>,
    pub findings: Vec<Finding>,
    pub timings: Timings,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn verdict(&self, invariant: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.invariant == invariant)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report values are finite")
    }

    /// JSON with the timings zeroed, for reproducibility comparisons.
    pub fn to_json_without_timings(&self) -> String {
        let mut r = self.clone();
        r.timings = Timings::default();
        r.to_json()
    }

    /// Process exit code: 0 clean, 3 for degeneracy, 1 for any other finding.
    pub fn exit_code(&self) -> i32 {
        if self.findings.is_empty() {
            0
        } else if self.findings.iter().any(|f| f.kind == FindingKind::Degeneracy) {
            3
        } else {
            1
        }
    }
}
