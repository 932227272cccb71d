//! Command-line front end: `list` and `verify`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::catalog;
use crate::error::GeomError;
use crate::pipeline;
use crate::report::{Report, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVARIANT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "osculum", version, about = "Verify structure invariants of catalog submanifolds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List catalog entries, their parameters and declared invariants.
    List {
        /// Emit the listing as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Sample an entry and check its declared invariants.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Catalog entry name; optional when --config names one.
    pub entry: Option<String>,
    /// Entry parameter as key=value; repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "rank-tol")]
    pub rank_tol: Option<f64>,
    #[arg(long = "fd-step")]
    pub fd_step: Option<f64>,
    #[arg(long = "lambda-radius")]
    pub lambda_radius: Option<f64>,
    #[arg(long = "max-normal-order")]
    pub max_normal_order: Option<usize>,
    /// JSON run configuration; command-line options override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Where to write the JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the JSON report instead of the summary.
    #[arg(long)]
    pub json: bool,
}

/// Catalog listing as text.
pub fn cmd_list() -> String {
    let mut out = String::new();
    for schema in catalog::schemas() {
        let _ = writeln!(out, "{}", schema.signature);
        let _ = writeln!(out, "  anchor: {}", schema.anchor);
        for p in &schema.params {
            let _ = writeln!(out, "  param {} (default {}): {}", p.name, p.default, p.help);
        }
        match catalog::build(schema.name, &BTreeMap::new()) {
            Ok(e) => {
                let _ = writeln!(out, "  expected at defaults [{}]:", e.expected.basis);
                for c in e.expected.claims() {
                    let _ = writeln!(out, "    {c}");
                }
                for c in &e.checks {
                    let _ = writeln!(out, "    {} <= {:.0e}", c.invariant, c.tolerance);
                }
            }
            Err(e) => {
                let _ = writeln!(out, "  (defaults fail to build: {e})");
            }
        }
    }
    out
}

/// Catalog listing as JSON.
pub fn cmd_list_json() -> String {
    let entries: Vec<serde_json::Value> = catalog::schemas()
        .into_iter()
        .map(|s| {
            let expected = catalog::build(s.name, &BTreeMap::new())
                .ok()
                .map(|e| serde_json::to_value(&e.expected).expect("serializable"));
            serde_json::json!({
                "name": s.name,
                "signature": s.signature,
                "anchor": s.anchor,
                "params": s.params,
                "expected": expected,
            })
        })
        .collect();
    serde_json::to_string_pretty(&entries).expect("serializable")
}

/// Merges a config file (if any) with command-line overrides.
pub fn resolve_config(args: &VerifyArgs) -> Result<RunConfig, GeomError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| GeomError::Config(format!("{}: {e}", path.display())))?;
            RunConfig::parse(&text).map_err(|e| GeomError::Config(format!("{}: {e}", path.display())))?
        }
        None => {
            let entry = args
                .entry
                .clone()
                .ok_or_else(|| GeomError::Config("an entry name or --config is required".into()))?;
            RunConfig::new(entry)
        }
    };
    if let Some(e) = &args.entry {
        cfg.entry = e.clone();
    }
    for p in &args.params {
        let (k, v) = catalog::parse_param(p)?;
        cfg.params.insert(k, v);
    }
    if let Some(v) = args.samples {
        cfg.samples = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.rank_tol {
        cfg.rank_tol = v;
    }
    if let Some(v) = args.fd_step {
        cfg.fd_step = v;
    }
    if let Some(v) = args.lambda_radius {
        cfg.lambda_radius = v;
    }
    if let Some(v) = args.max_normal_order {
        cfg.max_normal_order = v;
    }
    if args.out.is_some() {
        cfg.out = args.out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Human-readable summary of a report.
pub fn summary(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {:?}: {} points, {} rejected",
        report.entry.name,
        report.entry.params,
        report.points.len(),
        report.rejected.len()
    );
    let mut labels: BTreeMap<String, usize> = BTreeMap::new();
    for p in &report.points {
        *labels.entry(p.case.to_string()).or_default() += 1;
    }
    let _ = writeln!(out, "case labels: {labels:?}");
    for v in &report.verdicts {
        let _ = writeln!(
            out,
            "{} {:<52} worst {:>11.3e}  tol {:>8.1e}",
            if v.passed { "PASS" } else { "FAIL" },
            v.invariant,
            v.worst,
            v.tolerance
        );
    }
    for f in &report.findings {
        let at = f.point.map(|p| format!(" at point {p}")).unwrap_or_default();
        let _ = writeln!(out, "finding [{}]{at}: {}", f.invariant, f.message);
    }
    out
}

fn error_code(e: &GeomError) -> i32 {
    match e {
        GeomError::DegenerateExtension { .. } => EXIT_DEGENERATE,
        _ => EXIT_USAGE,
    }
}

/// Runs a verification and returns the report with its exit code.
pub fn cmd_verify(cfg: &RunConfig) -> Result<(Report, i32), GeomError> {
    let report = pipeline::verify(cfg)?;
    let code = report.exit_code();
    Ok((report, code))
}

/// Entry point for the binary; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::List { json } => {
            if json {
                println!("{}", cmd_list_json());
            } else {
                print!("{}", cmd_list());
            }
            EXIT_OK
        }
        Command::Verify(args) => {
            let cfg = match resolve_config(&args) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_USAGE;
                }
            };
            let (report, code) = match cmd_verify(&cfg) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return error_code(&e);
                }
            };
            if let Some(path) = &cfg.out {
                if let Err(e) = std::fs::write(path, report.to_json()) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return EXIT_USAGE;
                }
            }
            if args.json {
                println!("{}", report.to_json());
            } else {
                print!("{}", summary(&report));
            }
            code
        }
    }
}
