use clap::Parser;
use osculum::catalog;
use osculum::cli::{cmd_list, cmd_list_json, run, Cli, EXIT_INVARIANT, EXIT_OK, EXIT_USAGE};

fn exit_code(args: &[&str]) -> i32 {
    run(Cli::try_parse_from(args).expect("arguments parse"))
}

#[test]
fn listing_names_the_families_and_their_anchors() {
    let text = cmd_list();
    assert!(text.contains("section4-ruled(m)"));
    assert!(text.contains("curve-parallel(n,N)"));
    for s in catalog::schemas() {
        assert!(text.contains(s.signature), "{}", s.signature);
        assert!(text.contains(&format!("anchor: {}", s.anchor)), "{}", s.name);
    }
    let json: serde_json::Value = serde_json::from_str(&cmd_list_json()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), catalog::schemas().len());
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(exit_code(&["osculum", "verify", "no-such-entry"]), EXIT_USAGE);
    assert_eq!(exit_code(&["osculum", "verify", "sphere", "--param", "bogus=1"]), EXIT_USAGE);
    assert_eq!(exit_code(&["osculum", "verify", "sphere", "--param", "n"]), EXIT_USAGE);
    assert_eq!(exit_code(&["osculum", "verify", "sphere", "--rank-tol=-1"]), EXIT_USAGE);
    assert_eq!(exit_code(&["osculum", "verify"]), EXIT_USAGE);
    assert!(Cli::try_parse_from(["osculum", "verify", "sphere", "--samples", "x"]).is_err());
}

#[test]
fn clean_runs_exit_with_zero() {
    assert_eq!(exit_code(&["osculum", "verify", "sphere", "--samples", "3"]), EXIT_OK);
    assert_eq!(
        exit_code(&["osculum", "verify", "curve-parallel", "--param", "n=3", "--param", "N=8", "--samples", "3"]),
        EXIT_OK
    );
}

#[test]
fn failed_invariants_exit_with_one() {
    // The ruled example's declared k = p does not hold; see the README.
    assert_eq!(exit_code(&["osculum", "verify", "section4-ruled", "--samples", "2"]), EXIT_INVARIANT);
}

#[test]
fn config_files_and_report_files() {
    let dir = std::env::temp_dir().join(format!("osculum-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.json");
    let out = dir.join("report.json");
    std::fs::write(&cfg, r#"{"entry": "torus", "samples": 2, "seed": 3}"#).unwrap();
    let code = exit_code(&["osculum", "verify", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["config"]["seed"], 3);
    assert_eq!(report["points"].as_array().unwrap().len(), 2);
    for field in ["verdicts", "findings", "timings", "entry"] {
        assert!(report.get(field).is_some(), "{field}");
    }

    std::fs::write(&cfg, "{\n  \"entry\": \"torus\",\n  \"samples\": -2\n}").unwrap();
    assert_eq!(exit_code(&["osculum", "verify", "--config", cfg.to_str().unwrap()]), EXIT_USAGE);
    std::fs::remove_dir_all(&dir).unwrap();
}
