//! Normal exponential image of a parallel normal subbundle of a curve.
//!
//! The curve is `c(t) = Q (a_k cos(kt)/k, a_k sin(kt)/k)_k`, which has constant
//! speed `σ = |a|` and nowhere vanishing curvature. The normal fields solve
//! `ξ' = −⟨ξ, c''⟩ c' / σ²` with a fixed-step RK4 integrator; chart jets are
//! recovered from the ODE's Taylor recursion started at the nearest node.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{box_sampler, Basis, CatalogEntry, CheckKind, EntryCheck, Expected, Rulings};
use crate::chart::{chart_map, Domain, ImmersionChart};
use crate::error::{GeomError, Result};
use crate::jets::Jet;
use crate::nonparallel::CaseLabel;

pub(super) const ANCHOR: &str =
    "parallel normal subbundle of a curve with nonvanishing curvature, pushed out by the normal exponential map";

const STEP: f64 = 1e-3;
const RENORMALIZE_EVERY: usize = 100;
const T_WINDOW: f64 = 1.0;
const T_DOMAIN: f64 = 0.9;
/// Extra Taylor terms kept when re-centering from a node.
const EXTRA_TERMS: usize = 12;
const MAX_ORDER: usize = 6;

/// The curve, its transported normal fields at the integration nodes, and
/// the orthonormality drift observed during integration.
#[derive(Clone, Debug)]
pub struct CurveData {
    coeffs: Vec<f64>,
    q: DMatrix<f64>,
    /// `nodes[i][a]` is `ξ_a(t_i)` with `t_i = (i − half) * STEP`.
    nodes: Vec<Vec<DVector<f64>>>,
    half: usize,
    speed2: f64,
    drift: f64,
}

fn trig_derivative(cos: bool, x: f64, m: usize) -> f64 {
    let (s, c) = x.sin_cos();
    let cycle = if cos { [c, -s, -c, s] } else { [s, c, -s, -c] };
    cycle[m % 4]
}

impl CurveData {
    fn new(big_n: usize, fields: usize, seed: u64) -> Result<Self> {
        let k = big_n / 2;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..1.0)).collect();
        let raw = DMatrix::from_fn(big_n, 2 * k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let q = crate::subspaces::orthonormalize_columns(&raw);
        let speed2 = coeffs.iter().map(|a| a * a).sum();
        let mut data = Self {
            coeffs,
            q,
            nodes: Vec::new(),
            half: (T_WINDOW / STEP).round() as usize,
            speed2,
            drift: 0.0,
        };
        let start: Vec<DVector<f64>> = {
            let tangent = data.taylor(0.0, 2)[1].clone();
            let mut out: Vec<DVector<f64>> = Vec::with_capacity(fields);
            while out.len() < fields {
                let mut v = DVector::from_fn(big_n, |_, _| rng.sample::<f64, _>(StandardNormal));
                v.axpy(-v.dot(&tangent) / tangent.norm_squared(), &tangent, 1.0);
                for e in &out {
                    let d = e.dot(&v);
                    v.axpy(-d, e, 1.0);
                }
                let nv = v.norm();
                if nv > 1e-3 {
                    out.push(v / nv);
                }
            }
            out
        };
        data.integrate(start);
        Ok(data)
    }

    /// Taylor coefficients of `c` at `t0` up to degree `order`.
    fn taylor(&self, t0: f64, order: usize) -> Vec<DVector<f64>> {
        let k = self.coeffs.len();
        let mut fact = 1.0;
        (0..=order)
            .map(|m| {
                if m > 0 {
                    fact *= m as f64;
                }
                let local = DVector::from_fn(2 * k, |r, _| {
                    let freq = (r / 2 + 1) as f64;
                    let amp = self.coeffs[r / 2] / freq * freq.powi(m as i32) / fact;
                    amp * trig_derivative(r % 2 == 0, freq * t0, m)
                });
                &self.q * local
            })
            .collect()
    }

    fn rhs(&self, t: f64, xi: &[DVector<f64>]) -> Vec<DVector<f64>> {
        let c = self.taylor(t, 2);
        let (d1, d2) = (&c[1], c[2].clone() * 2.0);
        xi.iter()
            .map(|v| d1 * (-v.dot(&d2) / self.speed2))
            .collect()
    }

    fn rk4_step(&self, t: f64, y: &[DVector<f64>], h: f64) -> Vec<DVector<f64>> {
        let add = |a: &[DVector<f64>], b: &[DVector<f64>], s: f64| -> Vec<DVector<f64>> {
            a.iter().zip(b).map(|(x, y)| x + y * s).collect()
        };
        let k1 = self.rhs(t, y);
        let k2 = self.rhs(t + 0.5 * h, &add(y, &k1, 0.5 * h));
        let k3 = self.rhs(t + 0.5 * h, &add(y, &k2, 0.5 * h));
        let k4 = self.rhs(t + h, &add(y, &k3, h));
        y.iter()
            .enumerate()
            .map(|(i, v)| v + (&k1[i] + &k2[i] * 2.0 + &k3[i] * 2.0 + &k4[i]) * (h / 6.0))
            .collect()
    }

    /// Largest deviation of the Gram matrix from the identity, then Gram-Schmidt.
    fn renormalize(&mut self, y: &mut [DVector<f64>]) {
        for i in 0..y.len() {
            for j in 0..y.len() {
                let target = if i == j { 1.0 } else { 0.0 };
                self.drift = self.drift.max((y[i].dot(&y[j]) - target).abs());
            }
        }
        for i in 0..y.len() {
            for j in 0..i {
                let d = y[j].dot(&y[i]);
                let yj = y[j].clone();
                y[i].axpy(-d, &yj, 1.0);
            }
            let n = y[i].norm();
            y[i] /= n;
        }
    }

    fn integrate(&mut self, start: Vec<DVector<f64>>) {
        let total = 2 * self.half + 1;
        let mut nodes = vec![Vec::new(); total];
        nodes[self.half] = start.clone();
        for dir in [1.0, -1.0] {
            let mut y = start.clone();
            for step in 1..=self.half {
                let t = dir * (step - 1) as f64 * STEP;
                y = self.rk4_step(t, &y, dir * STEP);
                if step % RENORMALIZE_EVERY == 0 {
                    self.renormalize(&mut y);
                }
                let idx = if dir > 0.0 { self.half + step } else { self.half - step };
                nodes[idx] = y.clone();
            }
        }
        self.nodes = nodes;
    }

    /// Worst `|⟨ξ_a, ξ_b⟩ − δ_ab|` seen before each renormalization.
    pub fn transport_drift(&self) -> f64 {
        self.drift
    }

    /// Taylor coefficients of every `ξ_a` at `t0` up to degree `order`.
    fn field_taylor(&self, t0: f64, order: usize) -> Result<Vec<Vec<DVector<f64>>>> {
        let idx_f = (t0 / STEP).round() + self.half as f64;
        if !(0.0..self.nodes.len() as f64).contains(&idx_f) {
            return Err(GeomError::Domain { point: vec![t0] });
        }
        let idx = idx_f as usize;
        let tn = (idx as f64 - self.half as f64) * STEP;
        let delta = t0 - tn;
        let deg = order + EXTRA_TERMS;
        let c = self.taylor(tn, deg + 2);
        let p: Vec<DVector<f64>> = (0..=deg).map(|l| &c[l + 1] * (l + 1) as f64).collect();
        let qq: Vec<DVector<f64>> = (0..=deg).map(|l| &c[l + 2] * ((l + 1) * (l + 2)) as f64).collect();
        let mut out = Vec::with_capacity(self.nodes[idx].len());
        for xi0 in &self.nodes[idx] {
            let mut a = vec![xi0.clone()];
            let mut w = Vec::with_capacity(deg);
            for m in 0..deg {
                let wm: f64 = (0..=m).map(|j| a[j].dot(&qq[m - j])).sum();
                w.push(wm);
                let mut next = DVector::zeros(xi0.len());
                for i in 0..=m {
                    next.axpy(w[i], &p[m - i], 1.0);
                }
                a.push(next * (-1.0 / (self.speed2 * (m + 1) as f64)));
            }
            // Re-center from the node at `tn` to `t0`.
            let mut binom = vec![vec![1.0f64; deg + 1]; deg + 1];
            for mm in 1..=deg {
                for r in 1..mm {
                    binom[mm][r] = binom[mm - 1][r - 1] + binom[mm - 1][r];
                }
            }
            let shifted: Vec<DVector<f64>> = (0..=order)
                .map(|r| {
                    let mut s = DVector::zeros(xi0.len());
                    for mm in r..=deg {
                        s.axpy(binom[mm][r] * delta.powi((mm - r) as i32), &a[mm], 1.0);
                    }
                    s
                })
                .collect();
            out.push(shifted);
        }
        Ok(out)
    }

    fn eval(&self, w: &[Jet]) -> Result<Vec<Jet>> {
        let t = &w[0];
        let order = t.order();
        let big_n = self.q.nrows();
        let mut local = Vec::with_capacity(2 * self.coeffs.len());
        for (i, a) in self.coeffs.iter().enumerate() {
            let freq = (i + 1) as f64;
            let arg = t * freq;
            local.push(arg.cos() * (a / freq));
            local.push(arg.sin() * (a / freq));
        }
        let mut out: Vec<Jet> = (0..big_n)
            .map(|r| {
                let mut acc = Jet::zero(t.table());
                for (c, l) in local.iter().enumerate() {
                    acc = &acc + &(l * self.q[(r, c)]);
                }
                acc
            })
            .collect();
        let fields = self.field_taylor(t.value(), order)?;
        for (s, series) in w[1..].iter().zip(&fields) {
            for (r, o) in out.iter_mut().enumerate() {
                let coeffs: Vec<f64> = series.iter().map(|v| v[r]).collect();
                *o = &*o + &(s * &t.compose_series(&coeffs));
            }
        }
        Ok(out)
    }
}

/// `f(t, s) = c(t) + Σ s_a ξ_a(t)` with `n − 1` parallel normal fields in `R^N`.
pub fn curve_parallel(n: usize, big_n: usize, seed: u64) -> Result<CatalogEntry> {
    if n < 2 || n + 1 > big_n || big_n > 24 {
        return Err(GeomError::Parameter(format!(
            "curve-parallel needs 2 <= n <= N - 1 and N <= 24, got n={n}, N={big_n}"
        )));
    }
    let data = Arc::new(CurveData::new(big_n, n - 1, seed)?);
    let curvature = {
        let c = data.taylor(0.0, 2);
        (c[2].clone() * 2.0).norm()
    };
    if curvature < 1e-3 {
        return Err(GeomError::Precondition("curve curvature vanishes on the window".into()));
    }
    let s_half = (0.5 * data.speed2 / (curvature * ((n - 1) as f64).sqrt())).min(0.1);
    let mut lo = vec![-T_DOMAIN];
    lo.extend(vec![-s_half; n - 1]);
    let hi: Vec<f64> = lo.iter().map(|v| -v).collect();
    let eval_data = data.clone();
    let map = chart_map(move |w: &[Jet]| eval_data.eval(w));
    let chart = ImmersionChart::new("curve-parallel", n, big_n, Domain::new(lo, hi), MAX_ORDER, map);

    let mut expected = Expected::new(n, big_n, CaseLabel::CaseI, Basis::Theorem);
    expected.p = Some(1);
    expected.nu = Some(n - 1);
    expected.flat = true;
    expected.rulings = Rulings::Nullity;
    if big_n > n + 1 {
        expected.s = Some(1);
        expected.d = Some(n - 1);
    } else {
        expected.case = CaseLabel::Absent;
    }
    let drift_data = data.clone();
    let checks = vec![EntryCheck {
        invariant: "parallel transport orthonormality drift".into(),
        tolerance: 1e-9,
        kind: CheckKind::Once(Arc::new(move |_| Ok(drift_data.transport_drift()))),
    }];
    Ok(CatalogEntry {
        name: "curve-parallel".into(),
        params: BTreeMap::new(),
        sampler: box_sampler(&chart, 0.05),
        chart,
        expected,
        anchor: ANCHOR,
        checks,
    })
}
