use osculum::pipeline::verify;
use osculum::report::RunConfig;

fn report(entry: &str, params: &[(&str, &str)], seed: u64) -> String {
    let mut cfg = RunConfig::new(entry);
    cfg.samples = 3;
    cfg.seed = seed;
    for (k, v) in params {
        cfg = cfg.with_param(k, v);
    }
    verify(&cfg).unwrap().to_json_without_timings()
}

#[test]
fn identical_configs_give_identical_reports() {
    for (entry, params) in [
        ("torus", vec![]),
        ("helix-product", vec![("helices", "1")]),
        ("holomorphic-curve", vec![]),
        ("curve-parallel", vec![("n", "2"), ("N", "5")]),
    ] {
        assert_eq!(report(entry, &params, 9), report(entry, &params, 9), "{entry}");
    }
}

#[test]
fn the_seed_changes_the_sample() {
    assert_ne!(report("torus", &[], 1), report("torus", &[], 2));
}
