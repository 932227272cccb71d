//! Products of circular helices, lines and planar parabolas.
//!
//! A helix `(a cos t, a sin t, b t)` contributes its principal normal to `N_1`
//! and its binormal to `N_1^⊥`; torsion makes `φ(binormal, tangent)` a nonzero
//! multiple of the principal normal. Parabolas add curvature that `φ` never
//! reaches, lines add relative nullity. Counting factors selects the case.

use std::collections::BTreeMap;

use super::{box_sampler, Basis, CatalogEntry, Expected, ExtensionExpect, Rulings};
use crate::chart::{chart_map, Domain, ImmersionChart};
use crate::error::{GeomError, Result};
use crate::jets::Jet;
use crate::nonparallel::CaseLabel;

pub(super) const ANCHOR: &str =
    "helices times lines times parabolas; the factor counts select the nonparallel case";

const MAX_ORDER: usize = 6;

fn radius(i: usize) -> f64 {
    1.0 + 0.25 * i as f64
}

fn pitch(i: usize) -> f64 {
    0.4 + 0.15 * i as f64
}

/// `h` helices, `j` lines and `l` parabolas, in that coordinate order.
pub fn helix_product(h: usize, j: usize, l: usize) -> Result<CatalogEntry> {
    let n = h + j + l;
    if n == 0 {
        return Err(GeomError::Parameter("helix-product needs at least one factor".into()));
    }
    if h > 6 {
        return Err(GeomError::Parameter(format!("helix-product supports at most 6 helices, got {h}")));
    }
    let big_n = 3 * h + j + 2 * l;
    let map = chart_map(move |u: &[Jet]| {
        let mut out = Vec::with_capacity(big_n);
        for (i, t) in u[..h].iter().enumerate() {
            out.push(t.cos() * radius(i));
            out.push(t.sin() * radius(i));
            out.push(t * pitch(i));
        }
        out.extend(u[h..h + j].iter().cloned());
        for y in &u[h + j..] {
            out.push(y.clone());
            out.push(y * y * 0.5);
        }
        Ok(out)
    });
    let mut lo = vec![-1.5; h];
    lo.extend(vec![-1.0; j + l]);
    let hi: Vec<f64> = lo.iter().map(|v| -v).collect();
    let chart = ImmersionChart::new("helix-product", n, big_n, Domain::new(lo, hi), MAX_ORDER, map);

    let p = h + l;
    let case = if h == 0 {
        CaseLabel::Absent
    } else if h >= n {
        CaseLabel::OutOfScope
    } else if h == p {
        CaseLabel::CaseI
    } else if h == 1 {
        CaseLabel::CaseII
    } else {
        CaseLabel::CaseIIIB
    };
    let mut expected = Expected::new(n, big_n, case, Basis::ClosedForm);
    expected.p = Some(p);
    expected.nu = Some(j);
    expected.flag_dims = Some(vec![p, h]);
    if h > 0 {
        expected.s = Some(h);
        expected.d = Some(n - h);
    }
    match case {
        CaseLabel::CaseI => expected.rulings = Rulings::Nullity,
        CaseLabel::CaseII | CaseLabel::CaseIIIB => {
            expected.ell = Some(l);
            expected.k = Some(h);
            expected.r = Some(l);
            let m = n + l;
            expected.extension = Some(ExtensionExpect {
                m,
                p_f: h,
                nu_f_min: m - h,
            });
        }
        _ => {}
    }
    Ok(CatalogEntry {
        name: "helix-product".into(),
        params: BTreeMap::new(),
        sampler: box_sampler(&chart, 0.02),
        chart,
        expected,
        anchor: ANCHOR,
        checks: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonparallel::{classify_case, nonparallel_at};

    #[test]
    fn factor_counts_select_the_case() {
        for (h, j, l) in [(2, 1, 1), (1, 1, 1), (2, 1, 0), (0, 1, 1)] {
            let e = helix_product(h, j, l).unwrap();
            let x = e.chart.domain().center();
            let (_, nd) = nonparallel_at(&e.chart, &x, 1e-8).unwrap();
            assert_eq!(Some(nd.p), e.expected.p);
            assert_eq!(nd.nu, e.expected.nu.unwrap());
            if let Some(s) = e.expected.s {
                assert_eq!(nd.s, s);
                assert_eq!(Some(nd.d()), e.expected.d);
            }
            let c = classify_case(&nd, e.expected.k).unwrap();
            assert_eq!(c.label, e.expected.case, "({h},{j},{l})");
        }
    }
}
