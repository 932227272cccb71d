use osculum::catalog::{self, Rulings};
use osculum::nonparallel::CaseLabel;
use osculum::pipeline::{key, verify};
use osculum::report::{Report, RunConfig};

fn run(entry: &str, params: &[(&str, &str)], samples: usize) -> Report {
    let mut cfg = RunConfig::new(entry);
    cfg.samples = samples;
    for (k, v) in params {
        cfg = cfg.with_param(k, v);
    }
    verify(&cfg).unwrap()
}

fn labels(r: &Report) -> Vec<CaseLabel> {
    r.points.iter().map(|p| p.case).collect()
}

#[test]
fn every_default_entry_builds_and_declares_its_ranks() {
    for e in catalog::defaults().unwrap() {
        assert_eq!(e.chart.dim(), e.expected.n, "{}", e.name);
        assert_eq!(e.chart.ambient_dim(), e.expected.ambient, "{}", e.name);
        assert!(!e.expected.claims().is_empty(), "{}", e.name);
    }
}

#[test]
fn calibration_entries_pass() {
    for (entry, params) in [("sphere", vec![("n", "2")]), ("flat", vec![]), ("torus", vec![])] {
        let r = run(entry, &params, 4);
        assert!(r.passed(), "{entry}: {:?}", r.findings);
    }
    let torus = run("torus", &[], 3);
    assert!(labels(&torus).iter().all(|&c| c == CaseLabel::Parallel));
}

#[test]
fn helix_products_cover_three_case_labels() {
    for (helices, parabolas, label) in [
        ("2", "0", CaseLabel::CaseI),
        ("1", "1", CaseLabel::CaseII),
        ("2", "1", CaseLabel::CaseIIIB),
    ] {
        let r = run("helix-product", &[("helices", helices), ("parabolas", parabolas)], 3);
        assert!(r.passed(), "{helices}/{parabolas}: {:?}", r.findings);
        assert!(labels(&r).iter().all(|&c| c == label), "{:?}", labels(&r));
    }
}

#[test]
fn case_ii_extension_has_rank_one_nullity() {
    let r = run("helix-product", &[("helices", "1"), ("flat", "1"), ("parabolas", "1")], 2);
    for p in &r.points {
        let e = p.extension.as_ref().expect("case ii builds an extension");
        let m = p.x.len() + e.r;
        assert_eq!(e.p_f, 1);
        assert!(e.nu_f + 1 >= m, "nu_F {} for m {m}", e.nu_f);
    }
}

#[test]
fn holomorphic_curve_is_out_of_scope_with_planar_flag() {
    let r = run("holomorphic-curve", &[("m", "3")], 3);
    assert!(r.passed(), "{:?}", r.findings);
    for p in &r.points {
        assert_eq!(p.flag_dims, vec![2; 5]);
        assert_eq!(p.case, CaseLabel::OutOfScope);
    }
}

#[test]
fn ruled_example_keeps_its_structure() {
    let r = run("section4-ruled", &[("shear", "0.5")], 3);
    assert_eq!(r.entry.expected.rulings, Rulings::D);
    for p in &r.points {
        assert_eq!((p.p, p.s, p.d, p.nu), (4, Some(2), 2, 0));
        assert!(p.residuals[key::ALPHA_ON_RULINGS] > 1e-6);
    }
    for v in [
        "S matches N_3 of the base (angle)",
        "osculating space matches the base flag (angle)",
        "vertical second fundamental form span (angle)",
        "S is constant along rulings",
    ] {
        assert!(r.verdict(v).is_some_and(|v| v.passed), "{v}");
    }
}

#[test]
fn curve_parallel_is_case_one_and_flat() {
    let r = run("curve-parallel", &[("n", "3"), ("N", "8")], 4);
    assert!(r.passed(), "{:?}", r.findings);
    for p in &r.points {
        assert_eq!((p.p, p.s, p.nu), (1, Some(1), 2));
        assert_eq!(p.case, CaseLabel::CaseI);
        assert!(p.residuals[key::SECTIONAL] < 1e-8);
    }
}

#[test]
fn every_verdict_name_is_unique() {
    let r = run("helix-product", &[], 2);
    let mut names: Vec<_> = r.verdicts.iter().map(|v| v.invariant.as_str()).collect();
    let total = names.len();
    names.sort_unstable();
    names.dedup();
    assert_eq!(names.len(), total);
}
