//! The holomorphic curve `Ψ(z) = (z, z²/2!, …, z^{m+3}/(m+3)!)` as a real
//! surface in `R^{2(m+3)}`.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{box_sampler, Basis, CatalogEntry, CheckKind, EntryCheck, Expected};
use crate::chart::{chart_map, ChartMap, Domain, ImmersionChart};
use crate::error::{GeomError, Result};
use crate::geometry::point_geometry;
use crate::jets::Jet;
use crate::nonparallel::CaseLabel;

pub(super) const ANCHOR: &str =
    "holomorphic curve with monomial components; minimal, hence elliptic with J the rotation by a right angle";

pub(super) const MAX_ORDER: usize = 8;

/// A complex number whose parts are jets.
#[derive(Clone, Debug)]
pub(super) struct CJet {
    pub re: Jet,
    pub im: Jet,
}

impl CJet {
    fn one_like(j: &Jet) -> Self {
        Self {
            re: Jet::constant(j.table(), 1.0),
            im: Jet::zero(j.table()),
        }
    }

    fn mul(&self, o: &CJet) -> CJet {
        CJet {
            re: &(&self.re * &o.re) - &(&self.im * &o.im),
            im: &(&self.re * &o.im) + &(&self.im * &o.re),
        }
    }

    fn scale(&self, c: f64) -> CJet {
        CJet {
            re: self.re.scale(c),
            im: self.im.scale(c),
        }
    }

    /// Multiplication by `i`.
    pub fn times_i(&self) -> CJet {
        CJet {
            re: -&self.im,
            im: self.re.clone(),
        }
    }
}

/// The `k`-th derivative of `Ψ` with `terms` components, evaluated at `z`.
pub(super) fn psi_derivative(z: &CJet, terms: usize, k: usize) -> Vec<CJet> {
    let mut powers = vec![CJet::one_like(&z.re)];
    for i in 1..=terms {
        let next = powers[i - 1].mul(z);
        powers.push(next);
    }
    let zero = CJet {
        re: Jet::zero(z.re.table()),
        im: Jet::zero(z.re.table()),
    };
    (1..=terms)
        .map(|j| {
            if j < k {
                zero.clone()
            } else {
                let e = j - k;
                powers[e].scale(1.0 / factorial(e))
            }
        })
        .collect()
}

fn factorial(e: usize) -> f64 {
    (1..=e).map(|i| i as f64).product()
}

/// `(Re w_1, Im w_1, Re w_2, …)`.
pub(super) fn realify(w: &[CJet]) -> Vec<Jet> {
    w.iter().flat_map(|c| [c.re.clone(), c.im.clone()]).collect()
}

/// The chart map `(u, v) ↦ Ψ(u + iv)` reading the first two input jets.
pub fn holomorphic_map(m: usize) -> ChartMap {
    chart_map(move |w: &[Jet]| {
        let z = CJet {
            re: w[0].clone(),
            im: w[1].clone(),
        };
        Ok(realify(&psi_derivative(&z, m + 3, 0)))
    })
}

pub(super) fn holomorphic_chart(m: usize, half_width: f64) -> ImmersionChart {
    ImmersionChart::new(
        "holomorphic-curve",
        2,
        2 * (m + 3),
        Domain::cube(2, half_width),
        MAX_ORDER,
        holomorphic_map(m),
    )
}

/// Largest `‖α(Z,Z) + α(JZ,JZ)‖` over 20 pseudo-random unit `Z`.
///
/// The chart is conformal and the tangent frame is Gram-Schmidt on `(g_u, g_v)`,
/// so `J` acts on frame coordinates as the rotation `(a, b) ↦ (−b, a)`.
fn ellipticity(chart: &ImmersionChart, x: &[f64], tol: f64) -> Result<f64> {
    let geom = point_geometry(chart, x, 1, tol)?;
    let seed = x.iter().fold(0u64, |acc, v| acc.rotate_left(13) ^ v.to_bits());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let z = DVector::from_vec(vec![theta.cos(), theta.sin()]);
        let jz = DVector::from_vec(vec![-theta.sin(), theta.cos()]);
        let r = geom.alpha.eval(&[&z, &z]) + geom.alpha.eval(&[&jz, &jz]);
        worst = worst.max(r.norm());
    }
    Ok(worst)
}

/// The surface `Ψ(u + iv)` for `m ≥ 2`.
pub fn holomorphic_curve(m: usize) -> Result<CatalogEntry> {
    if !(2..=5).contains(&m) {
        return Err(GeomError::Parameter(format!("holomorphic-curve needs 2 <= m <= 5, got {m}")));
    }
    let chart = holomorphic_chart(m, 0.6);
    let mut expected = Expected::new(2, 2 * (m + 3), CaseLabel::OutOfScope, Basis::ClosedForm);
    expected.p = Some(2);
    expected.s = Some(2);
    expected.nu = Some(0);
    expected.flag_dims = Some(vec![2; m + 2]);
    let check_chart = chart.clone();
    let checks = vec![EntryCheck {
        invariant: "ellipticity residual".into(),
        tolerance: 1e-10,
        kind: CheckKind::PerPoint(Arc::new(move |x, cp| ellipticity(&check_chart, x, cp.tol))),
    }];
    Ok(CatalogEntry {
        name: "holomorphic-curve".into(),
        params: BTreeMap::new(),
        sampler: box_sampler(&chart, 0.02),
        chart,
        expected,
        anchor: ANCHOR,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subspaces::{max_angle, Subspace};
    use nalgebra::DMatrix;

    #[test]
    fn flag_at_origin_is_coordinate_planes() {
        let chart = holomorphic_chart(2, 0.6);
        let g = point_geometry(&chart, &[0.0, 0.0], 4, 1e-8).unwrap();
        assert_eq!(g.flag_dims(), vec![2, 2, 2, 2]);
        for (k, nk) in g.normal_flag.iter().enumerate() {
            let mut b = DMatrix::zeros(10, 2);
            b[(2 * k + 2, 0)] = 1.0;
            b[(2 * k + 3, 1)] = 1.0;
            let plane = Subspace::from_orthonormal(b, 0.0).unwrap();
            assert!(max_angle(nk, &plane) < 1e-12, "N_{}", k + 1);
        }
    }

    #[test]
    fn minimal_away_from_origin() {
        let chart = holomorphic_chart(2, 0.6);
        assert!(ellipticity(&chart, &[0.31, -0.2], 1e-8).unwrap() < 1e-12);
    }

    #[test]
    fn derivative_table() {
        let t = crate::jets::IndexTable::shared(2, 1);
        let z = CJet {
            re: Jet::variable(&t, 0, 0.5),
            im: Jet::variable(&t, 1, 0.0),
        };
        let d2 = psi_derivative(&z, 4, 2);
        assert_eq!(d2[0].re.value(), 0.0);
        assert_eq!(d2[1].re.value(), 1.0);
        assert_eq!(d2[2].re.value(), 0.5);
        assert_eq!(d2[3].re.value(), 0.125);
    }
}
