//! Null-hypothesis charts: round sphere, affine subspace, flat torus.

use std::collections::BTreeMap;

use super::{box_sampler, Basis, CatalogEntry, Expected, Rulings};
use crate::chart::{chart_map, constant_like, Domain, ImmersionChart};
use crate::error::{GeomError, Result};
use crate::jets::Jet;
use crate::nonparallel::CaseLabel;

pub(super) const SPHERE_ANCHOR: &str = "unit sphere as a graph; umbilic, first normal bundle of rank one";
pub(super) const FLAT_ANCHOR: &str = "affine subspace; every fundamental form vanishes";
pub(super) const TORUS_ANCHOR: &str = "product of two circles in R^4, included in R^6; parallel first normal bundle";

const MAX_ORDER: usize = 6;

/// Upper hemisphere of the unit `S^n ⊂ R^{n+1}` as a graph.
pub fn sphere(n: usize) -> Result<CatalogEntry> {
    if !(1..=8).contains(&n) {
        return Err(GeomError::Parameter(format!("sphere needs 1 <= n <= 8, got {n}")));
    }
    let half = 0.5 / (n as f64).sqrt();
    let map = chart_map(|u: &[Jet]| {
        let mut r2 = constant_like(&u[0], 1.0);
        for x in u {
            r2 = &r2 - &(x * x);
        }
        let mut out = u.to_vec();
        out.push(r2.sqrt()?);
        Ok(out)
    });
    let chart = ImmersionChart::new("sphere", n, n + 1, Domain::cube(n, half), MAX_ORDER, map);
    let mut expected = Expected::new(n, n + 1, CaseLabel::Absent, Basis::Calibration);
    expected.p = Some(1);
    expected.nu = Some(0);
    expected.flag_dims = Some(vec![1, 0]);
    expected.ricci = Some(n as f64 - 1.0);
    Ok(CatalogEntry {
        name: "sphere".into(),
        params: BTreeMap::new(),
        sampler: box_sampler(&chart, 0.02),
        chart,
        expected,
        anchor: SPHERE_ANCHOR,
        checks: Vec::new(),
    })
}

/// The coordinate `n`-plane in `R^N`.
pub fn flat(n: usize, big_n: usize) -> Result<CatalogEntry> {
    if n == 0 || big_n < n {
        return Err(GeomError::Parameter(format!("flat needs 1 <= n <= N, got n={n}, N={big_n}")));
    }
    let map = chart_map(move |u: &[Jet]| {
        let mut out = u.to_vec();
        out.resize(big_n, constant_like(&u[0], 0.0));
        Ok(out)
    });
    let chart = ImmersionChart::new("flat", n, big_n, Domain::cube(n, 1.0), MAX_ORDER, map);
    let mut expected = Expected::new(n, big_n, CaseLabel::Absent, Basis::Calibration);
    expected.p = Some(0);
    expected.nu = Some(n);
    expected.flag_dims = Some(vec![0, 0]);
    expected.flat = true;
    expected.rulings = Rulings::Nullity;
    Ok(CatalogEntry {
        name: "flat".into(),
        params: BTreeMap::new(),
        sampler: box_sampler(&chart, 0.02),
        chart,
        expected,
        anchor: FLAT_ANCHOR,
        checks: Vec::new(),
    })
}

/// `(cos u, sin u, 1.5 cos v, 1.5 sin v, 0, 0)`.
pub fn torus() -> CatalogEntry {
    let map = chart_map(|u: &[Jet]| {
        let zero = constant_like(&u[0], 0.0);
        Ok(vec![
            u[0].cos(),
            u[0].sin(),
            u[1].cos() * 1.5,
            u[1].sin() * 1.5,
            zero.clone(),
            zero,
        ])
    });
    let chart = ImmersionChart::new("torus", 2, 6, Domain::cube(2, 3.0), MAX_ORDER, map);
    let mut expected = Expected::new(2, 6, CaseLabel::Parallel, Basis::Calibration);
    expected.p = Some(2);
    expected.s = Some(0);
    expected.nu = Some(0);
    expected.flag_dims = Some(vec![2, 0]);
    expected.flat = true;
    CatalogEntry {
        name: "torus".into(),
        params: BTreeMap::new(),
        sampler: box_sampler(&chart, 0.02),
        chart,
        expected,
        anchor: TORUS_ANCHOR,
        checks: Vec::new(),
    }
}
