//! Oracles shared by the integration tests and the acceptance harness.

#![allow(dead_code)]

use std::sync::Arc;

use osculum::jets::{IndexTable, Jet};
use rand::Rng;

/// A jet with coefficients drawn from `[-1, 1]`.
pub fn random_jet(table: &Arc<IndexTable>, rng: &mut impl Rng) -> Jet {
    let coeffs = (0..table.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    Jet::from_coeffs(table, coeffs).expect("coefficient count matches the table")
}

fn binomial(n: u8, k: u8) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// Every multi-index `f ≤ e`, componentwise.
fn lower_indices(e: &[u8]) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    for &ei in e {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..=ei).map(move |fi| {
                    let mut p = prefix.clone();
                    p.push(fi);
                    p
                })
            })
            .collect();
    }
    out
}

/// Worst relative gap between `∂^e(ab)` and the general Leibniz sum.
pub fn leibniz_error(a: &Jet, b: &Jet) -> f64 {
    let prod = a * b;
    let table = a.table();
    let mut worst: f64 = 0.0;
    for slot in 0..table.len() {
        let e = table.exponents(slot).to_vec();
        let mut expected = 0.0;
        let mut magnitude = 0.0;
        for f in lower_indices(&e) {
            let rest: Vec<u8> = e.iter().zip(&f).map(|(ei, fi)| ei - fi).collect();
            let weight: f64 = e.iter().zip(&f).map(|(&ei, &fi)| binomial(ei, fi)).product();
            let term = weight * a.derivative(&f).unwrap() * b.derivative(&rest).unwrap();
            expected += term;
            magnitude += term.abs();
        }
        let got = prod.derivative(&e).unwrap();
        worst = worst.max((got - expected).abs() / magnitude.max(1.0));
    }
    worst
}

/// Chain rule through `compose`: `g(u, v) = u·v + sin u + exp v`, expanded at
/// the values of the inner jets and composed with them, against the same
/// expression evaluated directly on the inner jets.
pub fn chain_error(u: &Jet, v: &Jet) -> f64 {
    let order = u.order();
    let outer_table = IndexTable::shared(2, order);
    let s = Jet::variable(&outer_table, 0, u.value());
    let t = Jet::variable(&outer_table, 1, v.value());
    let outer = &(&(&s * &t) + &s.sin()) + &t.exp();
    let composed = outer.compose(&[u.clone(), v.clone()]).expect("layouts agree");
    let direct = &(&(u * v) + &u.sin()) + &v.exp();
    composed
        .coeffs()
        .iter()
        .zip(direct.coeffs())
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(1.0))
        .fold(0.0, f64::max)
}
