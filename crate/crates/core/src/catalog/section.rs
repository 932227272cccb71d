//! Ruled submanifolds over a holomorphic curve: `f = g + Σ t_a e_a`, where
//! `e_a` is an orthonormal frame of `N_1 ⊕ … ⊕ N_{m−1}` of the base curve `g`.
//!
//! The fibers are straight, `𝒮` is the plane `N_{m+1}` of the base, and the
//! rulings carry nonzero second fundamental form.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use nalgebra::DVector;
use rand::Rng;

use super::holomorphic::{holomorphic_chart, psi_derivative, realify, CJet, MAX_ORDER};
use super::{Basis, CatalogEntry, CheckKind, CheckParams, EntryCheck, Expected, Rulings};
use crate::chart::{chart_map, ChartMap, Domain, ImmersionChart};
use crate::error::{GeomError, Result};
use crate::geometry::{point_geometry, PointGeometry};
use crate::jets::Jet;
use crate::nonparallel::{nonparallel_at, CaseLabel};
use crate::subspaces::{intersection, max_angle, span_of_scaled, sum, Subspace};

pub(super) const ANCHOR: &str =
    "straight normal fibers over an elliptic holomorphic curve; rank-two S, rulings of minimal dimension";

/// Half-width of the base coordinates.
const BASE_HALF: f64 = 0.5;

fn dot(a: &[Jet], b: &[Jet]) -> Jet {
    let mut acc = Jet::zero(a[0].table());
    for (x, y) in a.iter().zip(b) {
        acc = &acc + &(x * y);
    }
    acc
}

/// Gram-Schmidt over jets: the result is an orthonormal frame field together
/// with all of its derivatives.
fn gram_schmidt(vectors: Vec<Vec<Jet>>) -> Result<Vec<Vec<Jet>>> {
    let mut out: Vec<Vec<Jet>> = Vec::with_capacity(vectors.len());
    for mut w in vectors {
        for e in &out {
            let c = dot(&w, e);
            for (wi, ei) in w.iter_mut().zip(e) {
                *wi = &*wi - &(&c * ei);
            }
        }
        let inv = dot(&w, &w).sqrt()?.recip()?;
        out.push(w.iter().map(|wi| wi * &inv).collect());
    }
    Ok(out)
}

/// Orthonormal frame of `N_1 ⊕ … ⊕ N_{m−1}` along the curve, `2m − 2` vectors.
fn normal_frame(z: &CJet, m: usize) -> Result<Vec<Vec<Jet>>> {
    let mut vecs = Vec::with_capacity(2 * m);
    for k in 1..=m {
        let d = psi_derivative(z, m + 3, k);
        let rotated: Vec<CJet> = d.iter().map(CJet::times_i).collect();
        vecs.push(realify(&d));
        vecs.push(realify(&rotated));
    }
    let mut frame = gram_schmidt(vecs)?;
    Ok(frame.split_off(2))
}

/// Base coordinates `(a + κ t_1³, v)` of a chart point.
fn base_point(x: &[f64], shear: f64) -> Vec<f64> {
    vec![x[0] + shear * x[2].powi(3), x[1]]
}

fn section_map(m: usize, shear: f64) -> ChartMap {
    chart_map(move |w: &[Jet]| {
        let u = if shear != 0.0 {
            &w[0] + &(w[2].powi(3) * shear)
        } else {
            w[0].clone()
        };
        let z = CJet {
            re: u,
            im: w[1].clone(),
        };
        let mut out = realify(&psi_derivative(&z, m + 3, 0));
        for (t, e) in w[2..].iter().zip(normal_frame(&z, m)?) {
            for (o, c) in out.iter_mut().zip(&e) {
                *o = &*o + &(t * c);
            }
        }
        Ok(out)
    })
}

fn section_chart(m: usize, t_radius: f64, shear: f64) -> ImmersionChart {
    let n = 2 * m;
    let mut lo = vec![-BASE_HALF, -BASE_HALF];
    lo.extend(vec![-t_radius; n - 2]);
    let hi: Vec<f64> = lo.iter().map(|v| -v).collect();
    ImmersionChart::new(
        "section4-ruled",
        n,
        2 * (m + 3),
        Domain::new(lo, hi),
        MAX_ORDER,
        section_map(m, shear),
    )
}

/// Smallest relative singular value of the Jacobian over the corners of the box.
fn worst_conditioning(chart: &ImmersionChart) -> Result<f64> {
    let dom = chart.domain();
    let n = chart.dim();
    let mut worst = f64::INFINITY;
    for mask in 0..(1u32 << n) {
        for shrink in [1.0, 0.5] {
            let x: Vec<f64> = (0..n)
                .map(|i| if mask & (1 << i) != 0 { dom.hi[i] } else { dom.lo[i] } * shrink)
                .collect();
            let d = chart.eval_jet(&x, 1)?;
            let j = nalgebra::DMatrix::from_fn(chart.ambient_dim(), n, |r, c| d.partial(&[c])[r]);
            let s = crate::linalg::svd(&j)?.s;
            worst = worst.min(s[n - 1] / s[0]);
        }
    }
    Ok(worst)
}

fn capped_angle(a: &Subspace, b: &Subspace) -> f64 {
    max_angle(a, b).min(FRAC_PI_2)
}

struct Section {
    chart: ImmersionChart,
    base: ImmersionChart,
    m: usize,
    shear: f64,
}

impl Section {
    fn geometries(&self, x: &[f64], tol: f64) -> Result<(PointGeometry, PointGeometry)> {
        let f = point_geometry(&self.chart, x, 2, tol)?;
        let g = point_geometry(&self.base, &base_point(x, self.shear), self.m + 1, tol)?;
        Ok((f, g))
    }

    /// `f_*TM ⊕ N_1^f` against `g_*TL ⊕ N_1 ⊕ … ⊕ N_{m+1}`.
    fn osculating(&self, x: &[f64], cp: &CheckParams) -> Result<f64> {
        let (f, g) = self.geometries(x, cp.tol)?;
        Ok(capped_angle(&f.osculating[1], &g.osculating[self.m + 1]))
    }

    /// `𝒮` against `N_{m+1}` of the base.
    fn s_plane(&self, x: &[f64], cp: &CheckParams) -> Result<f64> {
        let (_, nd) = nonparallel_at(&self.chart, x, cp.tol)?;
        let g = point_geometry(&self.base, &base_point(x, self.shear), self.m + 1, cp.tol)?;
        Ok(capped_angle(&nd.s_space, &g.normal_flag[self.m]))
    }

    /// `span α(Z, V)` over fiber directions `V` against `(g_*TL ⊕ N_m) ∩ N_1^f`.
    fn vertical_span(&self, x: &[f64], cp: &CheckParams) -> Result<f64> {
        let (f, g) = self.geometries(x, cp.tol)?;
        let n = f.dim();
        let mut values = Vec::new();
        for a in 2..n {
            // the shear makes `∂/∂t_1` move the base point; undo that drift
            let mut w = f.jacobian.column(a).into_owned();
            if a == 2 {
                w -= f.jacobian.column(0) * (3.0 * self.shear * x[2] * x[2]);
            }
            let v = f.frame.transpose() * w;
            for b in 0..n {
                let e = DVector::from_fn(n, |i, _| if i == b { 1.0 } else { 0.0 });
                values.push(f.alpha.eval(&[&e, &v]));
            }
        }
        let span = span_of_scaled(&values, f.ambient_dim(), cp.tol, f.scale)?;
        let base = sum(&g.tangent, &g.normal_flag[self.m - 1], cp.tol)?;
        let target = intersection(&base, &f.first_normal(), 1e-6)?;
        Ok(capped_angle(&span, &target))
    }
}

/// The ruled example over `Ψ` with `n = 2m`, `N = 2m + 6`.
pub fn section4_ruled(m: usize, t_radius: f64, shear: f64) -> Result<CatalogEntry> {
    if !(2..=3).contains(&m) {
        return Err(GeomError::Parameter(format!("section4-ruled needs 2 <= m <= 3, got {m}")));
    }
    if !(t_radius > 0.0 && t_radius <= 1.0) {
        return Err(GeomError::Parameter(format!("t_radius must lie in (0, 1], got {t_radius}")));
    }
    if !(0.0..=10.0).contains(&shear.abs()) {
        return Err(GeomError::Parameter(format!("|shear| must be at most 10, got {shear}")));
    }
    let mut radius = t_radius;
    let chart = loop {
        let chart = section_chart(m, radius, shear);
        if worst_conditioning(&chart).is_ok_and(|c| c > 1e-3) {
            break chart;
        }
        radius *= 0.5;
        if radius < 1e-6 {
            return Err(GeomError::DegenerateExtension { radius });
        }
    };
    let base = holomorphic_chart(m, BASE_HALF + 10.0 * radius.powi(3) + 0.1);
    let n = 2 * m;
    let mut expected = Expected::new(n, 2 * (m + 3), CaseLabel::CaseIIIA, Basis::Theorem);
    expected.p = Some(4);
    expected.s = Some(2);
    expected.d = Some(n - 2);
    expected.nu = Some(0);
    expected.ell = Some(2);
    expected.k = Some(4);
    expected.r = Some(0);
    expected.rulings = Rulings::D;

    let t_min = 0.3 * radius;
    let inner = 0.9 * radius;
    let sampler = Arc::new(move |rng: &mut rand_chacha::ChaCha8Rng| {
        let mut x = vec![
            rng.random_range(-0.9 * BASE_HALF..0.9 * BASE_HALF),
            rng.random_range(-0.9 * BASE_HALF..0.9 * BASE_HALF),
        ];
        loop {
            let t: Vec<f64> = (0..n - 2).map(|_| rng.random_range(-inner..inner)).collect();
            if t.iter().map(|v| v * v).sum::<f64>().sqrt() >= t_min {
                x.extend(t);
                return x;
            }
        }
    });

    let sec = Arc::new(Section {
        chart: chart.clone(),
        base,
        m,
        shear,
    });
    let (a, b, c) = (sec.clone(), sec.clone(), sec);
    let checks = vec![
        EntryCheck {
            invariant: "osculating space matches the base flag (angle)".into(),
            tolerance: 1e-6,
            kind: CheckKind::PerPoint(Arc::new(move |x, cp| a.osculating(x, cp))),
        },
        EntryCheck {
            invariant: format!("S matches N_{} of the base (angle)", m + 1),
            tolerance: 1e-6,
            kind: CheckKind::PerPoint(Arc::new(move |x, cp| b.s_plane(x, cp))),
        },
        EntryCheck {
            invariant: "vertical second fundamental form span (angle)".into(),
            tolerance: 1e-6,
            kind: CheckKind::PerPoint(Arc::new(move |x, cp| c.vertical_span(x, cp))),
        },
    ];
    Ok(CatalogEntry {
        name: "section4-ruled".into(),
        params: BTreeMap::new(),
        chart,
        expected,
        anchor: ANCHOR,
        sampler,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonparallel::classify_case;
    use rand::SeedableRng;

    #[test]
    fn frame_is_orthonormal_and_normal() {
        let chart = section_chart(2, 0.3, 0.0);
        let t = crate::jets::IndexTable::shared(2, 2);
        let z = CJet {
            re: Jet::variable(&t, 0, 0.2),
            im: Jet::variable(&t, 1, -0.1),
        };
        let e = normal_frame(&z, 2).unwrap();
        assert_eq!(e.len(), 2);
        let d1 = psi_derivative(&z, 5, 1);
        let tangent = realify(&d1);
        for a in 0..2 {
            assert!((dot(&e[a], &e[a]).value() - 1.0).abs() < 1e-14);
            assert!(dot(&e[a], &tangent).value().abs() < 1e-14);
        }
        assert!(dot(&e[0], &e[1]).value().abs() < 1e-14);
        assert_eq!(chart.ambient_dim(), 10);
    }

    #[test]
    fn invariants_at_a_sample() {
        let e = section4_ruled(2, 0.3, 0.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let x = e.sample(&mut rng);
        let (_, nd) = nonparallel_at(&e.chart, &x, 1e-8).unwrap();
        assert_eq!((nd.p, nd.s, nd.d()), (4, 2, 2));
        let cp = CheckParams { tol: 1e-8, h: 1e-3 };
        for c in &e.checks {
            if let CheckKind::PerPoint(f) = &c.kind {
                let v = f(&x, &cp).unwrap();
                assert!(v < c.tolerance, "{}: {v:e}", c.invariant);
            }
        }
        let c = classify_case(&nd, Some(4)).unwrap();
        assert_eq!(c.label, CaseLabel::CaseIIIA);
    }
}
