//! The verification pipeline: sample, screen, analyze each point, aggregate.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::catalog::{self, CatalogEntry, CheckKind, CheckParams, Rulings};
use crate::chart::ImmersionChart;
use crate::error::{GeomError, Result};
use crate::frames::richardson_diff;
use crate::geometry::{
    geometry_residuals, point_geometry, relative_nullity, ricci, s_nullity, sectional, PointGeometry,
};
use crate::nonparallel::{
    chart_directions, classify_case, codazzi_residual, nonparallel_data, phi_frame_fd, phi_pairing,
    s_drift, CaseLabel, NonparallelData,
};
use crate::report::{
    Comparator, EntryInfo, Finding, FindingKind, PointRecord, Rejection, Report, RunConfig, Timings,
    Verdict, SCHEMA_VERSION,
};
use crate::ruled::{build_extension, gamma_tensor, verify_extension_at, SplittingSpec};
use crate::subspaces::Subspace;

/// Step of the jet-versus-difference comparison.
pub const JET_FD_STEP: f64 = 1e-4;
/// Ratio window for second-order convergence when the step halves.
pub const CONVERGENCE_WINDOW: (f64, f64) = (3.2, 4.8);
/// Below this (relative) size a difference error is treated as converged noise.
pub const CONVERGENCE_FLOOR: f64 = 1e-9;
/// Unit ruling vectors tried per point in the Ricci check.
pub const RICCI_PROBES: usize = 50;

/// Names of per-point residuals in [`PointRecord::residuals`](crate::report::PointRecord).
pub mod key {
    pub const ALPHA_TANGENT: &str = "alpha_tangent";
    pub const ALPHA_SYMMETRY: &str = "alpha_symmetry";
    pub const FLAG_ORTHOGONALITY: &str = "flag_orthogonality";
    pub const FIRST_NORMAL_ANGLE: &str = "first_normal_angle";
    pub const HIGHER_FORM_LEAK: &str = "higher_form_leak";
    pub const PHI_RESIDUAL: &str = "phi_pairing_residual";
    pub const S_CONTAINMENT: &str = "s_containment";
    pub const KERNEL_ANGLE: &str = "kernel_angle";
    pub const PHI_ERR_H: &str = "phi_fd_error_h";
    pub const PHI_ERR_H2: &str = "phi_fd_error_h2";
    pub const CODAZZI: &str = "codazzi";
    pub const RICCI_MAX: &str = "ricci_max_on_rulings";
    pub const RICCI_ZERO_ANGLE: &str = "ricci_near_zero_angle";
    pub const RICCI_ERROR: &str = "ricci_error";
    pub const SECTIONAL: &str = "sectional_max";
    pub const ALPHA_ON_RULINGS: &str = "alpha_on_rulings";
    pub const S_DRIFT_H: &str = "s_drift_h";
    pub const S_DRIFT_H2: &str = "s_drift_h2";
    pub const GAMMA_CONTAINMENT: &str = "gamma_containment";
    pub const JET_FD: &str = "jet_fd_error";
}

/// Verifies the entry named in `cfg`. Errors are usage or configuration
/// problems; numerical failures end up in the report's findings.
pub fn verify(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let entry = catalog::build(&cfg.entry, &cfg.params)?;
    Ok(verify_entry(&entry, cfg))
}

struct Ctx<'a> {
    entry: &'a CatalogEntry,
    cfg: &'a RunConfig,
    order: usize,
    spec: SplittingSpec,
}

/// Stage timings of one point, in milliseconds.
type StageTimes = BTreeMap<String, f64>;

struct Outcome {
    record: PointRecord,
    times: StageTimes,
}

fn timed<T>(times: &mut StageTimes, stage: &str, f: impl FnOnce() -> T) -> T {
    let t0 = Instant::now();
    let out = f();
    *times.entry(stage.to_string()).or_insert(0.0) += t0.elapsed().as_secs_f64() * 1e3;
    out
}

/// Runs the pipeline on an already built entry.
pub fn verify_entry(entry: &CatalogEntry, cfg: &RunConfig) -> Report {
    let start = Instant::now();
    let ctx = Ctx {
        entry,
        cfg,
        order: cfg.max_normal_order.max(entry.expected.normal_order()),
        spec: SplittingSpec::new(entry.chart.clone(), cfg.rank_tol, cfg.fd_step),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut accepted: Vec<(Vec<f64>, PointGeometry, NonparallelData)> = Vec::new();
    let mut rejected = Vec::new();
    let max_attempts = 20 * cfg.samples;
    let mut attempts = 0;
    let mut stages = StageTimes::new();
    let screen_start = Instant::now();
    while accepted.len() < cfg.samples && attempts < max_attempts {
        let batch = (cfg.samples - accepted.len()).min(max_attempts - attempts);
        let candidates: Vec<Vec<f64>> = (0..batch).map(|_| entry.sample(&mut rng)).collect();
        attempts += batch;
        let screened: Vec<_> = candidates
            .into_par_iter()
            .map(|x| {
                let r = screen(&ctx, &x);
                (x, r)
            })
            .collect();
        for (x, r) in screened {
            match r {
                Ok((g, nd)) if accepted.len() < cfg.samples => accepted.push((x, g, nd)),
                Ok(_) => {}
                Err(reason) => rejected.push(Rejection { x, reason }),
            }
        }
    }
    stages.insert("screen".into(), screen_start.elapsed().as_secs_f64() * 1e3);

    let outcomes: Vec<Outcome> = accepted
        .into_par_iter()
        .enumerate()
        .map(|(i, (x, g, nd))| analyze(&ctx, i, x, g, nd))
        .collect();
    let mut points = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        for (k, v) in o.times {
            *stages.entry(k).or_insert(0.0) += v;
        }
        points.push(o.record);
    }

    let once_start = Instant::now();
    let (verdicts, findings) = aggregate(&ctx, &points, &rejected);
    stages.insert("aggregate".into(), once_start.elapsed().as_secs_f64() * 1e3);

    Report {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        entry: EntryInfo {
            name: entry.name.clone(),
            params: entry.params.clone(),
            anchor: entry.anchor.to_string(),
            expected: entry.expected.clone(),
        },
        points,
        rejected,
        verdicts,
        findings,
        timings: Timings {
            total_ms: start.elapsed().as_secs_f64() * 1e3,
            stages_ms: stages,
        },
    }
}

fn signature(nd: &NonparallelData) -> (usize, usize, usize, usize) {
    (nd.p, nd.s, nd.d(), nd.nu)
}

/// Accepts a point when every rank decision is stable across the tolerance band.
fn screen(ctx: &Ctx, x: &[f64]) -> std::result::Result<(PointGeometry, NonparallelData), String> {
    let tol = ctx.cfg.rank_tol;
    let chart = &ctx.entry.chart;
    let at = |t: f64| -> Result<(PointGeometry, NonparallelData)> {
        let g = point_geometry(chart, x, ctx.order, t)?;
        let phi = phi_pairing(&g, None)?;
        let nd = nonparallel_data(&g, phi, t)?;
        Ok((g, nd))
    };
    let (g, nd) = at(tol).map_err(|e| e.to_string())?;
    for t in [tol * 10.0, tol / 10.0] {
        let (g2, nd2) = at(t).map_err(|e| format!("at tolerance {t:e}: {e}"))?;
        if g2.flag_dims() != g.flag_dims() {
            return Err(format!(
                "normal flag {:?} at tolerance {t:e} differs from {:?}",
                g2.flag_dims(),
                g.flag_dims()
            ));
        }
        if signature(&nd2) != signature(&nd) {
            return Err(format!(
                "(p, s, dim D, nu) = {:?} at tolerance {t:e} differs from {:?}",
                signature(&nd2),
                signature(&nd)
            ));
        }
    }
    Ok((g, nd))
}

fn capped(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        FRAC_PI_2
    }
}

fn point_seed(cfg: &RunConfig, index: usize) -> u64 {
    cfg.seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index as u64 + 1)
}

fn random_unit_in(s: &Subspace, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let c = DVector::from_fn(s.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
    let v = s.basis() * c;
    let nv = v.norm();
    v / nv
}

fn analyze(ctx: &Ctx, index: usize, x: Vec<f64>, geom: PointGeometry, nd: NonparallelData) -> Outcome {
    let cfg = ctx.cfg;
    let entry = ctx.entry;
    let chart = &entry.chart;
    let tol = cfg.rank_tol;
    let h = cfg.fd_step;
    let mut times = StageTimes::new();
    let mut res = BTreeMap::new();
    let mut errors = Vec::new();
    let note = |errors: &mut Vec<String>, stage: &str, e: GeomError| errors.push(format!("{stage}: {e}"));

    let gr = geometry_residuals(&geom);
    res.insert(key::ALPHA_TANGENT.into(), gr.alpha_tangent);
    res.insert(key::ALPHA_SYMMETRY.into(), gr.alpha_symmetry);
    res.insert(key::FLAG_ORTHOGONALITY.into(), gr.flag_orthogonality);
    res.insert(key::FIRST_NORMAL_ANGLE.into(), capped(gr.first_normal_angle));
    res.insert(key::HIGHER_FORM_LEAK.into(), gr.higher_form_leak);
    res.insert(key::PHI_RESIDUAL.into(), nd.phi.residual);
    res.insert(key::S_CONTAINMENT.into(), nd.containment);
    if nd.q > 0 {
        res.insert(key::KERNEL_ANGLE.into(), capped(nd.kernel_angle));
    }

    // φ by two independent routes, at h and h/2.
    if nd.q > 0 && nd.p > 0 {
        let r = timed(&mut times, "phi_fd", || -> Result<(f64, f64)> {
            let (fd1, g1) = phi_frame_fd(chart, &x, h, tol)?;
            let pair1 = phi_pairing(&g1, Some(&fd1.mu_basis))?;
            let (fd2, g2) = phi_frame_fd(chart, &x, 0.5 * h, tol)?;
            let pair2 = phi_pairing(&g2, Some(&fd2.mu_basis))?;
            Ok((pair1.distance(&fd1), pair2.distance(&fd2)))
        });
        match r {
            Ok((e1, e2)) => {
                res.insert(key::PHI_ERR_H.into(), e1);
                res.insert(key::PHI_ERR_H2.into(), e2);
            }
            Err(e) => note(&mut errors, "phi_frame_fd", e),
        }
        match timed(&mut times, "codazzi", || codazzi_residual(chart, &x, h, tol)) {
            Ok(v) => {
                res.insert(key::CODAZZI.into(), v);
            }
            Err(e) => note(&mut errors, "codazzi", e),
        }
    }

    let nu_s: BTreeMap<usize, usize> = timed(&mut times, "nu_s", || {
        (1..=nd.p)
            .filter_map(|s| {
                s_nullity(&geom, s, 4, point_seed(cfg, index) ^ s as u64)
                    .ok()
                    .map(|r| (s, r.lower_bound))
            })
            .collect()
    });

    // L = 𝒮^⊥ ∩ N_1 decides whether the ruled extension machinery applies.
    let ell = nd.default_l(&geom).map(|l| l.dim()).ok();
    let normal_dim = geom.ambient_dim() - geom.dim();
    let extension_applies =
        nd.s > 0 && nd.q > 0 && nd.s < nd.n && ell.is_some_and(|l| l > 0 && l < normal_dim);
    let mut k = None;
    if extension_applies {
        match timed(&mut times, "gamma", || gamma_tensor(&ctx.spec, &x)) {
            Ok(gd) => {
                k = Some(gd.k);
                res.insert(key::GAMMA_CONTAINMENT.into(), gd.containment);
            }
            Err(e) => note(&mut errors, "gamma", e),
        }
    }
    let classification = match classify_case(&nd, k) {
        Ok(c) => Some(c),
        Err(e) => {
            note(&mut errors, "classify", e);
            None
        }
    };
    let case = classification.as_ref().map(|c| c.label);
    let needs_extension = matches!(
        case,
        Some(CaseLabel::CaseII | CaseLabel::CaseIIIA | CaseLabel::CaseIIIB)
    ) && extension_applies;
    let mut extension = None;
    let mut r = None;
    if needs_extension {
        let built = timed(&mut times, "extension", || -> Result<_> {
            let ext = build_extension(&ctx.spec, &x, std::slice::from_ref(&x), cfg.lambda_radius)?;
            verify_extension_at(&ext, &x, point_seed(cfg, index))
        });
        match built {
            Ok(check) => {
                r = Some(check.r);
                extension = Some(check);
            }
            Err(e) => note(&mut errors, "extension", e),
        }
    }

    // Curvature along rulings, flatness, constant Ricci.
    let mut rng = ChaCha8Rng::seed_from_u64(point_seed(cfg, index));
    let (nullity, _) = relative_nullity(&geom, tol);
    let rulings = match entry.expected.rulings {
        Rulings::None => None,
        Rulings::D => Some(nd.d_space.clone()),
        Rulings::Nullity => Some(nullity.clone()),
    };
    if let Some(rs) = rulings.as_ref().filter(|s| s.dim() > 0) {
        let mut worst = f64::NEG_INFINITY;
        let mut zero_angle: f64 = 0.0;
        for _ in 0..RICCI_PROBES {
            let v = random_unit_in(rs, &mut rng);
            let ric = ricci(&geom, &v).value;
            worst = worst.max(ric);
            if ric.abs() < 1e-8 {
                let off = nullity.reject(&v).norm().min(1.0).asin();
                zero_angle = zero_angle.max(off);
            }
        }
        res.insert(key::RICCI_MAX.into(), worst);
        res.insert(key::RICCI_ZERO_ANGLE.into(), zero_angle);
    }
    if let Some(target) = entry.expected.ricci {
        let full = Subspace::full(geom.dim());
        let worst = (0..RICCI_PROBES)
            .map(|_| (ricci(&geom, &random_unit_in(&full, &mut rng)).value - target).abs())
            .fold(0.0, f64::max);
        res.insert(key::RICCI_ERROR.into(), worst);
    }
    if entry.expected.flat {
        let n = geom.dim();
        let worst = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .map(|(a, b)| sectional(&geom, a, b).abs())
            .fold(0.0, f64::max);
        res.insert(key::SECTIONAL.into(), worst);
    }
    if entry.expected.rulings == Rulings::D && nd.d() > 0 {
        let n = geom.dim();
        let mut sq = 0.0;
        for y in nd.d_space.vectors() {
            for b in 0..n {
                let e = DVector::from_fn(n, |i, _| if i == b { 1.0 } else { 0.0 });
                sq += geom.alpha.eval(&[&y, &e]).norm_squared();
            }
        }
        res.insert(key::ALPHA_ON_RULINGS.into(), sq.sqrt());
        let dirs = chart_directions(&geom, &nd.d_space);
        let drift = timed(&mut times, "s_drift", || -> Result<(f64, f64)> {
            Ok((
                s_drift(chart, &x, &dirs, h, tol)?,
                s_drift(chart, &x, &dirs, 0.5 * h, tol)?,
            ))
        });
        match drift {
            Ok((a, b)) => {
                res.insert(key::S_DRIFT_H.into(), a);
                res.insert(key::S_DRIFT_H2.into(), b);
            }
            Err(e) => note(&mut errors, "s_drift", e),
        }
    }

    match timed(&mut times, "jet_fd", || jet_fd_error(chart, &x, 4)) {
        Ok(v) => {
            res.insert(key::JET_FD.into(), v);
        }
        Err(e) => note(&mut errors, "jet_fd", e),
    }

    let cp = CheckParams { tol, h };
    for check in &entry.checks {
        if let CheckKind::PerPoint(f) = &check.kind {
            match timed(&mut times, "entry_checks", || f(&x, &cp)) {
                Ok(v) => {
                    res.insert(format!("check: {}", check.invariant), v);
                }
                Err(e) => note(&mut errors, &check.invariant, e),
            }
        }
    }

    let record = PointRecord {
        index,
        flag_dims: geom.flag_dims(),
        p: nd.p,
        q: nd.q,
        s: (nd.q > 0 && nd.p > 0).then_some(nd.s),
        d: nd.d(),
        nu: nd.nu,
        nu_s,
        case: case.unwrap_or(CaseLabel::OutOfScope),
        claims: classification.map(|c| c.claims).unwrap_or_default(),
        ell: if nd.s > 0 { ell } else { None },
        k,
        r,
        residuals: res,
        extension,
        errors,
        x,
    };
    Outcome { record, times }
}

/// Worst relative disagreement between jet derivatives of orders `1..=max`
/// and Richardson-extrapolated differences of the jets one order lower.
pub fn jet_fd_error(chart: &ImmersionChart, x: &[f64], max: usize) -> Result<f64> {
    let n = chart.dim();
    let exact = chart.eval_jet(x, max)?;
    let table = exact.table().clone();
    let lower = |y: &[f64]| -> Result<nalgebra::DMatrix<f64>> {
        let d = chart.eval_jet(y, max - 1)?;
        let t = d.table().clone();
        let cols: Vec<DVector<f64>> = (0..t.len()).map(|s| d.by_slot(s).clone()).collect();
        Ok(nalgebra::DMatrix::from_fn(chart.ambient_dim(), cols.len(), |r, c| cols[c][r]))
    };
    let low_table = crate::jets::IndexTable::shared(n, max - 1);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let diff = richardson_diff(&lower, x, &crate::frames::coordinate(n, i), JET_FD_STEP)?;
        for slot in 0..low_table.len() {
            let mut e = low_table.exponents(slot).to_vec();
            e[i] += 1;
            let target = table.index_of(&e).expect("degree within the exact table");
            let a = exact.by_slot(target);
            let b = diff.column(slot);
            let denom = a.amax().max(1.0);
            worst = worst.max((a - b).amax() / denom);
        }
    }
    Ok(worst)
}

struct Aggregator {
    verdicts: Vec<Verdict>,
    findings: Vec<Finding>,
}

impl Aggregator {
    fn push(&mut self, v: Verdict, failures: Vec<(Option<usize>, String)>, kind: FindingKind) {
        if !v.passed {
            if failures.is_empty() {
                self.findings.push(Finding {
                    kind,
                    invariant: v.invariant.clone(),
                    point: None,
                    message: v.detail.clone(),
                });
            }
            for (point, message) in failures {
                self.findings.push(Finding {
                    kind,
                    invariant: v.invariant.clone(),
                    point,
                    message,
                });
            }
        }
        self.verdicts.push(v);
    }

    /// Residual `key` must stay at or below `tol` at every point that has it.
    fn at_most(&mut self, points: &[PointRecord], name: &str, key: &str, tol: f64) {
        let mut worst: f64 = 0.0;
        let mut failures = Vec::new();
        let mut seen = 0;
        for p in points {
            if let Some(&v) = p.residuals.get(key) {
                seen += 1;
                worst = worst.max(v);
                if v.is_nan() || v > tol {
                    failures.push((Some(p.index), format!("{key} = {v:.3e} > {tol:.1e}")));
                }
            }
        }
        if seen == 0 {
            return;
        }
        let passed = failures.is_empty();
        self.push(
            Verdict {
                invariant: name.into(),
                comparator: Comparator::AtMost,
                tolerance: tol,
                worst,
                passed,
                detail: format!("{seen} points, worst {worst:.3e}"),
            },
            failures,
            FindingKind::Invariant,
        );
    }

    /// Residual `key` must reach `tol` at every point.
    fn at_least(&mut self, points: &[PointRecord], name: &str, key: &str, tol: f64) {
        let mut worst = f64::INFINITY;
        let mut failures = Vec::new();
        let mut seen = 0;
        for p in points {
            if let Some(&v) = p.residuals.get(key) {
                seen += 1;
                worst = worst.min(v);
                if v.is_nan() || v < tol {
                    failures.push((Some(p.index), format!("{key} = {v:.3e} < {tol:.1e}")));
                }
            }
        }
        if seen == 0 {
            return;
        }
        let passed = failures.is_empty();
        self.push(
            Verdict {
                invariant: name.into(),
                comparator: Comparator::AtLeast,
                tolerance: tol,
                worst,
                passed,
                detail: format!("{seen} points, smallest {worst:.3e}"),
            },
            failures,
            FindingKind::Invariant,
        );
    }

    /// `observed(p)` must equal `expected` at every point.
    fn exact<T: PartialEq + std::fmt::Debug>(
        &mut self,
        points: &[PointRecord],
        name: &str,
        expected: T,
        observed: impl Fn(&PointRecord) -> T,
    ) {
        let failures: Vec<(Option<usize>, String)> = points
            .iter()
            .filter_map(|p| {
                let o = observed(p);
                (o != expected).then(|| (Some(p.index), format!("observed {o:?}, expected {expected:?}")))
            })
            .collect();
        let passed = failures.is_empty();
        self.push(
            Verdict {
                invariant: name.into(),
                comparator: Comparator::Exact,
                tolerance: 0.0,
                worst: failures.len() as f64,
                passed,
                detail: format!("expected {expected:?} at {} points", points.len()),
            },
            failures,
            FindingKind::Invariant,
        );
    }

    /// `holds(p)` must be true at every point; `describe` explains a failure.
    fn all(
        &mut self,
        points: &[PointRecord],
        name: &str,
        holds: impl Fn(&PointRecord) -> Option<std::result::Result<(), String>>,
    ) {
        let mut seen = 0;
        let mut failures = Vec::new();
        for p in points {
            match holds(p) {
                None => {}
                Some(Ok(())) => seen += 1,
                Some(Err(m)) => {
                    seen += 1;
                    failures.push((Some(p.index), m));
                }
            }
        }
        if seen == 0 {
            return;
        }
        let passed = failures.is_empty();
        self.push(
            Verdict {
                invariant: name.into(),
                comparator: Comparator::Exact,
                tolerance: 0.0,
                worst: failures.len() as f64,
                passed,
                detail: format!("{seen} points checked"),
            },
            failures,
            FindingKind::Invariant,
        );
    }

    /// Errors must decrease by the convergence factor when the step halves,
    /// unless both are already at the noise floor.
    fn convergence(&mut self, points: &[PointRecord], name: &str, k1: &str, k2: &str) {
        let (lo, hi) = CONVERGENCE_WINDOW;
        let mut worst: f64 = 0.0;
        let mut failures = Vec::new();
        let mut seen = 0;
        for p in points {
            let (Some(&a), Some(&b)) = (p.residuals.get(k1), p.residuals.get(k2)) else {
                continue;
            };
            seen += 1;
            if a < CONVERGENCE_FLOOR && b < CONVERGENCE_FLOOR {
                continue;
            }
            let ratio = a / b;
            worst = worst.max((ratio - 4.0).abs());
            if !(lo..=hi).contains(&ratio) {
                failures.push((Some(p.index), format!("ratio {ratio:.3} ({a:.3e} / {b:.3e})")));
            }
        }
        if seen == 0 {
            return;
        }
        let passed = failures.is_empty();
        self.push(
            Verdict {
                invariant: name.into(),
                comparator: Comparator::AtMost,
                tolerance: hi - 4.0,
                worst,
                passed,
                detail: format!(
                    "{seen} points; |ratio - 4| judged unless both errors < {CONVERGENCE_FLOOR:.0e}"
                ),
            },
            failures,
            FindingKind::Invariant,
        );
    }
}

fn aggregate(ctx: &Ctx, points: &[PointRecord], rejected: &[Rejection]) -> (Vec<Verdict>, Vec<Finding>) {
    let cfg = ctx.cfg;
    let ex = &ctx.entry.expected;
    let mut agg = Aggregator {
        verdicts: Vec::new(),
        findings: Vec::new(),
    };

    let regular = points.len();
    agg.push(
        Verdict {
            invariant: "regular sample points".into(),
            comparator: Comparator::AtLeast,
            tolerance: cfg.samples as f64,
            worst: regular as f64,
            passed: regular == cfg.samples,
            detail: format!("{regular} accepted, {} rejected", rejected.len()),
        },
        Vec::new(),
        FindingKind::Degeneracy,
    );

    agg.all(points, "pipeline stages complete", |p| {
        Some(if p.errors.is_empty() {
            Ok(())
        } else {
            Err(p.errors.join("; "))
        })
    });

    // Declared ranks and labels.
    if let Some(v) = ex.p {
        agg.exact(points, "rank N_1 = p", v, |p| p.p);
    }
    if let Some(f) = &ex.flag_dims {
        agg.exact(points, "normal flag dimensions", f.clone(), |p| {
            p.flag_dims.iter().take(f.len()).copied().collect::<Vec<_>>()
        });
    }
    if let Some(v) = ex.s {
        agg.exact(points, "s = dim S", Some(v), |p| p.s);
    }
    if let Some(v) = ex.d {
        agg.exact(points, "dim D", v, |p| p.d);
    }
    if let Some(v) = ex.nu {
        agg.exact(points, "relative nullity nu", v, |p| p.nu);
    }
    agg.all(points, "s-nullity bounds are nonincreasing in s", |p| {
        let bounds: Vec<(usize, usize)> = p.nu_s.iter().map(|(&s, &b)| (s, b)).collect();
        if bounds.len() < 2 {
            return None;
        }
        Some(match bounds.windows(2).find(|w| w[1].1 > w[0].1) {
            Some(w) => Err(format!("nu_{} >= {} but nu_{} >= {}", w[0].0, w[0].1, w[1].0, w[1].1)),
            None => Ok(()),
        })
    });
    agg.all(points, "s-nullity at s = p is the relative nullity", |p| {
        let &b = p.nu_s.get(&p.p)?;
        Some(if b == p.nu { Ok(()) } else { Err(format!("nu_p >= {b} but nu = {}", p.nu)) })
    });
    if let Some(v) = ex.ell {
        agg.exact(points, "ell = dim L", Some(v), |p| p.ell);
    }
    if let Some(v) = ex.k {
        agg.exact(points, "k = dim Gamma", Some(v), |p| p.k);
    }
    if let Some(v) = ex.r {
        agg.exact(points, "r = dim Lambda", Some(v), |p| p.r);
    }
    agg.exact(points, "case label", ex.case, |p| p.case);
    agg.all(points, "case consequences", |p| {
        let bad: Vec<&str> = p.claims.iter().filter(|c| !c.passed).map(|c| c.claim.as_str()).collect();
        (!p.claims.is_empty()).then(|| if bad.is_empty() { Ok(()) } else { Err(bad.join("; ")) })
    });
    agg.all(points, "dim D >= n - s", |p| {
        let s = p.s.filter(|&s| s > 0 && s <= 6)?;
        let n = ex.n;
        Some(if p.d + s >= n {
            Ok(())
        } else {
            Err(format!("dim D = {} < n - s = {}", p.d, n - s.min(n)))
        })
    });

    // Frame and form consistency.
    agg.at_most(points, "alpha is normal", key::ALPHA_TANGENT, 1e-10);
    agg.at_most(points, "alpha is symmetric", key::ALPHA_SYMMETRY, 1e-10);
    agg.at_most(points, "normal flag is orthogonal", key::FLAG_ORTHOGONALITY, 1e-10);
    agg.at_most(points, "N_1 is the span of alpha (angle)", key::FIRST_NORMAL_ANGLE, 1e-8);
    agg.at_most(points, "higher forms lie in their normal spaces", key::HIGHER_FORM_LEAK, 1e-10);
    agg.at_most(points, "phi pairing least-squares residual", key::PHI_RESIDUAL, 1e-8);
    agg.at_most(points, "S lies in N_1", key::S_CONTAINMENT, 1e-8);
    agg.at_most(points, "D equals the kernel of phi (angle)", key::KERNEL_ANGLE, 1e-6);
    agg.convergence(points, "phi routes agree to second order", key::PHI_ERR_H, key::PHI_ERR_H2);
    agg.at_most(points, "Codazzi residual", key::CODAZZI, 1e-6);
    agg.at_most(points, "Gamma lies in E + L", key::GAMMA_CONTAINMENT, 1e-6);
    agg.at_most(points, "jet derivatives match differences (relative)", key::JET_FD, 1e-6);

    // Curvature.
    agg.at_most(points, "Ricci along rulings is nonpositive", key::RICCI_MAX, 1e-8);
    agg.at_most(points, "Ricci vanishes only near the nullity (angle)", key::RICCI_ZERO_ANGLE, 1e-4);
    agg.at_most(points, "Ricci equals the declared constant", key::RICCI_ERROR, 1e-9);
    agg.at_most(points, "sectional curvature vanishes", key::SECTIONAL, 1e-8);
    agg.at_least(points, "alpha is nonzero on rulings", key::ALPHA_ON_RULINGS, 1e-6);
    agg.convergence(points, "S is constant along rulings", key::S_DRIFT_H, key::S_DRIFT_H2);

    // Ruled extension.
    let with_ext: Vec<PointRecord> = points.iter().filter(|p| p.extension.is_some()).cloned().collect();
    if !with_ext.is_empty() {
        let ext_res = |f: fn(&crate::ruled::ExtensionCheck) -> f64, name: &'static str| {
            with_ext
                .iter()
                .map(|p| {
                    let mut q = p.clone();
                    q.residuals = BTreeMap::from([(name.to_string(), capped(f(p.extension.as_ref().expect("filtered"))))]);
                    q
                })
                .collect::<Vec<_>>()
        };
        agg.at_most(&ext_res(|e| e.roundtrip, "roundtrip"), "extension restricts to f", "roundtrip", 1e-12);
        agg.at_most(
            &ext_res(|e| e.delta_angle, "delta_angle"),
            "Delta equals the nullity of alpha_F on P (angle)",
            "delta_angle",
            1e-5,
        );
        agg.at_most(
            &ext_res(|e| e.fiber_affinity, "fiber_affinity"),
            "extension fibers are straight",
            "fiber_affinity",
            1e-10,
        );
        agg.at_most(&ext_res(|e| e.p_normal, "p_normal"), "P stays normal to F", "p_normal", 1e-8);
        agg.at_most(
            &ext_res(|e| e.d_straightness, "d_straightness"),
            "alpha(D, D) is tangent to F (relative)",
            "d_straightness",
            1e-8,
        );
        agg.at_most(
            &ext_res(|e| e.integrability, "integrability"),
            "D is involutive",
            "integrability",
            1e-5,
        );
        agg.at_most(&ext_res(|e| e.p_drift, "p_drift"), "P is parallel along D", "p_drift", 1e-5);
        agg.at_least(
            &ext_res(|e| e.transversality, "transversality"),
            "Lambda is transverse to TM (angle)",
            "transversality",
            1e-3,
        );
        agg.all(&with_ext, "dim Delta = dim nullity of alpha_F on P", |p| {
            let e = p.extension.as_ref()?;
            Some(if e.delta_dim == e.nullity_dim {
                Ok(())
            } else {
                Err(format!("{} vs {}", e.delta_dim, e.nullity_dim))
            })
        });
        agg.all(&with_ext, "n - d <= k <= n - d + ell", |p| {
            let e = p.extension.as_ref()?;
            let n = ex.n;
            Some(if n - e.d <= e.k && e.k <= n - e.d + e.ell {
                Ok(())
            } else {
                Err(format!("k = {} outside [{}, {}]", e.k, n - e.d, n - e.d + e.ell))
            })
        });
        agg.all(&with_ext, "r = n - d + ell - k", |p| {
            let e = p.extension.as_ref()?;
            Some(if e.r + e.k == ex.n - e.d + e.ell {
                Ok(())
            } else {
                Err(format!("r = {}, n - d + ell - k = {}", e.r, ex.n - e.d + e.ell - e.k))
            })
        });
        if let Some(fx) = &ex.extension {
            agg.exact(&with_ext, "extension dimension m", fx.m, |p| {
                ex.n + p.extension.as_ref().map_or(0, |e| e.r)
            });
            agg.exact(&with_ext, "extension rank N_1", fx.p_f, |p| {
                p.extension.as_ref().map_or(0, |e| e.p_f)
            });
            agg.all(&with_ext, "extension relative nullity", |p| {
                let e = p.extension.as_ref()?;
                Some(if e.nu_f >= fx.nu_f_min {
                    Ok(())
                } else {
                    Err(format!("nu_F = {} < {}", e.nu_f, fx.nu_f_min))
                })
            });
        }
    }

    // Entry-specific checks.
    let cp = CheckParams {
        tol: cfg.rank_tol,
        h: cfg.fd_step,
    };
    for check in &ctx.entry.checks {
        match &check.kind {
            CheckKind::PerPoint(_) => {
                let key = format!("check: {}", check.invariant);
                agg.at_most(points, &check.invariant, &key, check.tolerance);
            }
            CheckKind::Once(f) => {
                let (worst, passed, detail) = match f(&cp) {
                    Ok(v) => (v, v <= check.tolerance, format!("observed {v:.3e}")),
                    Err(e) => (f64::INFINITY, false, e.to_string()),
                };
                agg.push(
                    Verdict {
                        invariant: check.invariant.clone(),
                        comparator: Comparator::AtMost,
                        tolerance: check.tolerance,
                        worst: capped(worst),
                        passed,
                        detail: detail.clone(),
                    },
                    vec![(None, detail)],
                    FindingKind::Invariant,
                );
            }
        }
    }

    (agg.verdicts, agg.findings)
}
