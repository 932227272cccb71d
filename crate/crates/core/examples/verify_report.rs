//! Runs the full pipeline and prints the verdicts and the JSON report size.

use osculum::pipeline::verify;
use osculum::report::RunConfig;

fn main() -> osculum::Result<()> {
    let entry = std::env::args().nth(1).unwrap_or_else(|| "torus".into());
    let mut cfg = RunConfig::new(entry);
    cfg.samples = 5;
    let report = verify(&cfg)?;
    for v in &report.verdicts {
        println!("{} {:<50} {:.2e} (tol {:.0e})", if v.passed { "PASS" } else { "FAIL" }, v.invariant, v.worst, v.tolerance);
    }
    println!("{} findings, {} bytes of JSON, exit code {}", report.findings.len(), report.to_json().len(), report.exit_code());
    Ok(())
}
