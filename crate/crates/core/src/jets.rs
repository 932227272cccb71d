//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] stores the Taylor coefficients `c_I = (1/I!) d^I f` of a scalar
//! function at an expansion point, for every multi-index `I` of total degree
//! at most `order`. Coefficients are dense in graded-lexicographic order and
//! the layout is shared through an [`IndexTable`] cached per
//! `(num_vars, order)` pair.
//!
//! Charts are written once as closures over jets; evaluating them on the
//! variable jets `x_i + du_i` yields every partial derivative up to the
//! requested order with only rounding error.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DVector;

use crate::error::{GeomError, Result};

/// Multi-index layout for jets in `num_vars` variables truncated at `order`.
pub struct IndexTable {
    num_vars: usize,
    order: usize,
    exps: Vec<Vec<u8>>,
    degree: Vec<usize>,
    factorial: Vec<f64>,
    lookup: HashMap<Vec<u8>, usize>,
    // (i, j, k): coeff i times coeff j lands in slot k
    mul: Vec<(u32, u32, u32)>,
}

impl fmt::Debug for IndexTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IndexTable")
            .field("num_vars", &self.num_vars)
            .field("order", &self.order)
            .field("len", &self.exps.len())
            .finish()
    }
}

fn compositions(total: usize, parts: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if parts == 1 {
        prefix.push(total as u8);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in (0..=total).rev() {
        prefix.push(first as u8);
        compositions(total - first, parts - 1, prefix, out);
        prefix.pop();
    }
}

fn trig_series(cycle: [f64; 4], order: usize) -> Vec<f64> {
    (0..=order).map(|k| cycle[k % 4] / factorial(k)).collect()
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

type TableCache = HashMap<(usize, usize), Arc<IndexTable>>;

impl IndexTable {
    fn build(num_vars: usize, order: usize) -> Self {
        let mut exps = Vec::new();
        for deg in 0..=order {
            compositions(deg, num_vars, &mut Vec::new(), &mut exps);
        }
        let degree: Vec<usize> = exps
            .iter()
            .map(|e| e.iter().map(|&v| v as usize).sum())
            .collect();
        let factorial_w = exps
            .iter()
            .map(|e| e.iter().map(|&v| factorial(v as usize)).product())
            .collect();
        let lookup: HashMap<Vec<u8>, usize> = exps
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        let mut mul = Vec::new();
        for (i, ei) in exps.iter().enumerate() {
            for (j, ej) in exps.iter().enumerate() {
                if degree[i] + degree[j] > order {
                    continue;
                }
                let sum: Vec<u8> = ei.iter().zip(ej).map(|(a, b)| a + b).collect();
                mul.push((i as u32, j as u32, lookup[&sum] as u32));
            }
        }
        Self {
            num_vars,
            order,
            exps,
            degree,
            factorial: factorial_w,
            lookup,
            mul,
        }
    }

    /// Returns the process-wide table for `(num_vars, order)`.
    pub fn shared(num_vars: usize, order: usize) -> Arc<IndexTable> {
        static CACHE: OnceLock<Mutex<TableCache>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("jet table cache poisoned");
        guard
            .entry((num_vars, order))
            .or_insert_with(|| Arc::new(IndexTable::build(num_vars, order)))
            .clone()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    /// Exponent vector stored at `slot`.
    pub fn exponents(&self, slot: usize) -> &[u8] {
        &self.exps[slot]
    }

    pub fn degree(&self, slot: usize) -> usize {
        self.degree[slot]
    }

    pub fn index_of(&self, exps: &[u8]) -> Option<usize> {
        self.lookup.get(exps).copied()
    }

    /// Slot of the multi-index obtained by differentiating once in each listed variable.
    pub fn index_of_vars(&self, vars: &[usize]) -> Option<usize> {
        let mut e = vec![0u8; self.num_vars];
        for &v in vars {
            if v >= self.num_vars {
                return None;
            }
            e[v] += 1;
        }
        self.index_of(&e)
    }

    fn same_layout(&self, other: &IndexTable) -> bool {
        self.num_vars == other.num_vars && self.order == other.order
    }
}

/// Truncated Taylor expansion of a scalar function of `num_vars` variables.
#[derive(Clone)]
pub struct Jet {
    table: Arc<IndexTable>,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("num_vars", &self.table.num_vars)
            .field("order", &self.table.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.table.same_layout(&other.table) && self.coeffs == other.coeffs
    }
}

/// Binary and unary operations accepted by [`jet_arith`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JetOp {
    Add,
    Sub,
    Mul,
    Scale(f64),
    Sin,
    Cos,
    Exp,
    Reciprocal,
}

/// Checked entry point for jet arithmetic. Binary operations require `b`;
/// unary ones ignore it.
pub fn jet_arith(a: &Jet, b: Option<&Jet>, op: JetOp) -> Result<Jet> {
    let need = |b: Option<&Jet>| -> Result<Jet> {
        let b = b.ok_or_else(|| GeomError::Shape(format!("{op:?} needs two operands")))?;
        a.check_layout(b)?;
        Ok(b.clone())
    };
    match op {
        JetOp::Add => Ok(a.add_ref(&need(b)?)),
        JetOp::Sub => Ok(a.sub_ref(&need(b)?)),
        JetOp::Mul => Ok(a.mul_ref(&need(b)?)),
        JetOp::Scale(c) => Ok(a.scale(c)),
        JetOp::Sin => Ok(a.sin()),
        JetOp::Cos => Ok(a.cos()),
        JetOp::Exp => Ok(a.exp()),
        JetOp::Reciprocal => a.recip(),
    }
}

impl Jet {
    pub fn zero(table: &Arc<IndexTable>) -> Self {
        Self {
            table: table.clone(),
            coeffs: vec![0.0; table.len()],
        }
    }

    pub fn constant(table: &Arc<IndexTable>, value: f64) -> Self {
        let mut j = Self::zero(table);
        j.coeffs[0] = value;
        j
    }

    /// The coordinate function `u_var` expanded at `value`.
    pub fn variable(table: &Arc<IndexTable>, var: usize, value: f64) -> Self {
        let mut j = Self::constant(table, value);
        if table.order >= 1 {
            let mut e = vec![0u8; table.num_vars];
            e[var] = 1;
            j.coeffs[table.lookup[&e]] = 1.0;
        }
        j
    }

    /// Variable jets for every coordinate of the expansion point `x`.
    pub fn variables(x: &[f64], order: usize) -> Vec<Jet> {
        let table = IndexTable::shared(x.len(), order);
        x.iter()
            .enumerate()
            .map(|(i, &v)| Jet::variable(&table, i, v))
            .collect()
    }

    pub fn from_coeffs(table: &Arc<IndexTable>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != table.len() {
            return Err(GeomError::Shape(format!(
                "expected {} coefficients, got {}",
                table.len(),
                coeffs.len()
            )));
        }
        Ok(Self {
            table: table.clone(),
            coeffs,
        })
    }

    pub fn table(&self) -> &Arc<IndexTable> {
        &self.table
    }

    pub fn num_vars(&self) -> usize {
        self.table.num_vars
    }

    pub fn order(&self) -> usize {
        self.table.order
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Degree-zero coefficient, the value at the expansion point.
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeff(&self, exps: &[u8]) -> Option<f64> {
        self.table.index_of(exps).map(|i| self.coeffs[i])
    }

    /// Partial derivative `d^I f` at the expansion point.
    pub fn derivative(&self, exps: &[u8]) -> Option<f64> {
        self.table
            .index_of(exps)
            .map(|i| self.coeffs[i] * self.table.factorial[i])
    }

    fn check_layout(&self, other: &Jet) -> Result<()> {
        if self.table.same_layout(&other.table) {
            Ok(())
        } else {
            Err(GeomError::Shape(format!(
                "jet layouts differ: ({}, {}) vs ({}, {})",
                self.table.num_vars, self.table.order, other.table.num_vars, other.table.order
            )))
        }
    }

    fn add_ref(&self, other: &Jet) -> Jet {
        assert!(self.table.same_layout(&other.table), "jet layout mismatch");
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Jet {
            table: self.table.clone(),
            coeffs,
        }
    }

    fn sub_ref(&self, other: &Jet) -> Jet {
        assert!(self.table.same_layout(&other.table), "jet layout mismatch");
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Jet {
            table: self.table.clone(),
            coeffs,
        }
    }

    fn mul_ref(&self, other: &Jet) -> Jet {
        assert!(self.table.same_layout(&other.table), "jet layout mismatch");
        let mut out = vec![0.0; self.coeffs.len()];
        for &(i, j, k) in &self.table.mul {
            let a = self.coeffs[i as usize];
            if a != 0.0 {
                out[k as usize] += a * other.coeffs[j as usize];
            }
        }
        Jet {
            table: self.table.clone(),
            coeffs: out,
        }
    }

    pub fn scale(&self, c: f64) -> Jet {
        Jet {
            table: self.table.clone(),
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    pub fn add_scalar(&self, c: f64) -> Jet {
        let mut j = self.clone();
        j.coeffs[0] += c;
        j
    }

    /// `sum_k series[k] * (self - self(0))^k`, the composition of a univariate
    /// Taylor series expanded at `self.value()` with this jet.
    pub fn compose_series(&self, series: &[f64]) -> Jet {
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        let mut out = Jet::constant(&self.table, series.first().copied().unwrap_or(0.0));
        let mut power = Jet::constant(&self.table, 1.0);
        for &c in series.iter().skip(1).take(self.table.order) {
            power = power.mul_ref(&delta);
            if c != 0.0 {
                for (o, p) in out.coeffs.iter_mut().zip(&power.coeffs) {
                    *o += c * p;
                }
            }
        }
        out
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose_series(&trig_series([s, c, -s, -c], self.order()))
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose_series(&trig_series([c, -s, -c, s], self.order()))
    }

    pub fn exp(&self) -> Jet {
        let ea = self.value().exp();
        let series: Vec<f64> = (0..=self.order()).map(|k| ea / factorial(k)).collect();
        self.compose_series(&series)
    }

    pub fn recip(&self) -> Result<Jet> {
        let a = self.value();
        if a == 0.0 || !a.is_finite() {
            return Err(GeomError::Singularity(format!(
                "reciprocal of jet with constant term {a}"
            )));
        }
        let mut series = Vec::with_capacity(self.order() + 1);
        let mut term = 1.0 / a;
        for _ in 0..=self.order() {
            series.push(term);
            term *= -1.0 / a;
        }
        Ok(self.compose_series(&series))
    }

    pub fn sqrt(&self) -> Result<Jet> {
        let a = self.value();
        if a <= 0.0 || !a.is_finite() {
            return Err(GeomError::Singularity(format!(
                "square root of jet with constant term {a}"
            )));
        }
        let mut series = Vec::with_capacity(self.order() + 1);
        // binom(1/2, k) a^(1/2 - k)
        let mut binom = 1.0;
        let mut pow = a.sqrt();
        for k in 0..=self.order() {
            series.push(binom * pow);
            binom *= (0.5 - k as f64) / (k as f64 + 1.0);
            pow /= a;
        }
        Ok(self.compose_series(&series))
    }

    pub fn powi(&self, n: u32) -> Jet {
        let mut out = Jet::constant(&self.table, 1.0);
        for _ in 0..n {
            out = out.mul_ref(self);
        }
        out
    }

    /// Re-expresses this jet in a table with more variables; variable `i`
    /// becomes variable `var_map[i]` of `target`.
    pub fn lift(&self, target: &Arc<IndexTable>, var_map: &[usize]) -> Result<Jet> {
        if var_map.len() != self.num_vars() || target.order < self.order() {
            return Err(GeomError::Shape("incompatible jet lift".into()));
        }
        let mut out = Jet::zero(target);
        let mut e = vec![0u8; target.num_vars];
        for (slot, exps) in self.table.exps.iter().enumerate() {
            e.iter_mut().for_each(|v| *v = 0);
            for (i, &p) in exps.iter().enumerate() {
                e[var_map[i]] += p;
            }
            let k = target
                .index_of(&e)
                .ok_or_else(|| GeomError::Shape("lift target too small".into()))?;
            out.coeffs[k] += self.coeffs[slot];
        }
        Ok(out)
    }

    /// Substitutes `u_i = inner[i]` (chain rule): the result is the jet of
    /// `f(inner)` assuming `inner[i].value()` equals this jet's expansion point.
    pub fn compose(&self, inner: &[Jet]) -> Result<Jet> {
        if inner.len() != self.num_vars() {
            return Err(GeomError::Shape(format!(
                "compose needs {} inner jets, got {}",
                self.num_vars(),
                inner.len()
            )));
        }
        let table = inner
            .first()
            .map(|j| j.table.clone())
            .ok_or_else(|| GeomError::Shape("compose of a 0-variable jet".into()))?;
        for j in inner {
            if !j.table.same_layout(&table) {
                return Err(GeomError::Shape("inner jets disagree in layout".into()));
            }
        }
        let order = self.order();
        let powers: Vec<Vec<Jet>> = inner
            .iter()
            .map(|j| {
                let mut d = j.clone();
                d.coeffs[0] = 0.0;
                let mut pw = vec![Jet::constant(&table, 1.0)];
                for k in 1..=order {
                    let next = pw[k - 1].mul_ref(&d);
                    pw.push(next);
                }
                pw
            })
            .collect();
        let mut out = Jet::zero(&table);
        for (slot, exps) in self.table.exps.iter().enumerate() {
            let c = self.coeffs[slot];
            if c == 0.0 {
                continue;
            }
            let mut term = Jet::constant(&table, c);
            for (v, &p) in exps.iter().enumerate() {
                if p > 0 {
                    term = term.mul_ref(&powers[v][p as usize]);
                }
            }
            out = out.add_ref(&term);
        }
        Ok(out)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        self.add_ref(&rhs)
    }
}

impl<'a> Add<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.add_ref(rhs)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self.sub_ref(&rhs)
    }
}

impl<'a> Sub<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.sub_ref(rhs)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        self.mul_ref(&rhs)
    }
}

impl<'a> Mul<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.mul_ref(rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

/// All partial derivatives `d^I f` (ambient-vector valued) of a map at a point.
#[derive(Clone, Debug)]
pub struct DerivativeTensor {
    table: Arc<IndexTable>,
    values: Vec<DVector<f64>>,
}

impl DerivativeTensor {
    /// Collects the per-component jets of a vector-valued map.
    pub fn from_jets(jets: &[Jet]) -> Result<Self> {
        let first = jets
            .first()
            .ok_or_else(|| GeomError::Shape("empty jet vector".into()))?;
        let table = first.table.clone();
        for j in jets {
            first.check_layout(j)?;
        }
        let values = (0..table.len())
            .map(|slot| {
                let w = table.factorial[slot];
                DVector::from_iterator(jets.len(), jets.iter().map(|j| j.coeffs[slot] * w))
            })
            .collect();
        Ok(Self { table, values })
    }

    pub fn table(&self) -> &Arc<IndexTable> {
        &self.table
    }

    pub fn order(&self) -> usize {
        self.table.order
    }

    pub fn num_vars(&self) -> usize {
        self.table.num_vars
    }

    pub fn ambient_dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn value(&self) -> &DVector<f64> {
        &self.values[0]
    }

    /// The derivative `d/du_{vars[0]} ... d/du_{vars[k-1]} f`.
    pub fn partial(&self, vars: &[usize]) -> &DVector<f64> {
        let slot = self
            .table
            .index_of_vars(vars)
            .expect("partial derivative beyond stored order");
        &self.values[slot]
    }

    pub fn by_slot(&self, slot: usize) -> &DVector<f64> {
        &self.values[slot]
    }

    /// All stored derivatives of exactly total degree `k`.
    pub fn of_degree(&self, k: usize) -> impl Iterator<Item = &DVector<f64>> {
        (0..self.table.len())
            .filter(move |&s| self.table.degree[s] == k)
            .map(move |s| &self.values[s])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn graded_lex_layout() {
        let t = IndexTable::shared(2, 2);
        let exps: Vec<&[u8]> = (0..t.len()).map(|i| t.exponents(i)).collect();
        assert_eq!(
            exps,
            vec![&[0, 0][..], &[1, 0], &[0, 1], &[2, 0], &[1, 1], &[0, 2]]
        );
    }

    #[test]
    fn table_size_is_binomial() {
        // C(n + K, K)
        assert_eq!(IndexTable::shared(4, 3).len(), 35);
        assert_eq!(IndexTable::shared(3, 5).len(), 56);
    }

    #[test]
    fn product_of_monomials() {
        let t = IndexTable::shared(1, 5);
        let u = Jet::variable(&t, 0, 0.0);
        let p = &u.powi(2) * &u.powi(3);
        for k in 0..=5u8 {
            let expect = if k == 5 { 1.0 } else { 0.0 };
            assert_eq!(p.coeff(&[k]).unwrap(), expect);
        }
    }

    #[test]
    fn add_zero_is_identity() {
        let t = IndexTable::shared(2, 3);
        let x = Jet::variable(&t, 0, 0.3).sin();
        let z = Jet::zero(&t);
        assert_eq!(jet_arith(&x, Some(&z), JetOp::Add).unwrap(), x);
    }

    #[test]
    fn sine_maclaurin() {
        let t = IndexTable::shared(1, 3);
        let s = Jet::variable(&t, 0, 0.0).sin();
        let expect = [0.0, 1.0, 0.0, -1.0 / 6.0];
        for (c, e) in s.coeffs().iter().zip(expect) {
            assert_abs_diff_eq!(*c, e, epsilon = 1e-16);
        }
    }

    #[test]
    fn mismatched_layouts_are_rejected() {
        let a = Jet::variable(&IndexTable::shared(1, 3), 0, 0.0);
        let b = Jet::variable(&IndexTable::shared(2, 3), 0, 0.0);
        assert!(matches!(
            jet_arith(&a, Some(&b), JetOp::Mul),
            Err(GeomError::Shape(_))
        ));
    }

    #[test]
    fn reciprocal_of_zero_is_singular() {
        let t = IndexTable::shared(1, 3);
        let u = Jet::variable(&t, 0, 0.0);
        assert!(matches!(
            jet_arith(&u, None, JetOp::Reciprocal),
            Err(GeomError::Singularity(_))
        ));
    }

    #[test]
    fn reciprocal_and_sqrt_invert() {
        let t = IndexTable::shared(2, 4);
        let x = Jet::variable(&t, 0, 0.7);
        let y = Jet::variable(&t, 1, -0.2);
        let f = (&x * &x + y.exp()).add_scalar(1.0);
        let one = &f * &f.recip().unwrap();
        assert_abs_diff_eq!(one.value(), 1.0, epsilon = 1e-15);
        for c in &one.coeffs()[1..] {
            assert_abs_diff_eq!(*c, 0.0, epsilon = 1e-14);
        }
        let r = f.sqrt().unwrap();
        let back = &r * &r;
        for (a, b) in back.coeffs().iter().zip(f.coeffs()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-14);
        }
    }

    #[test]
    fn truncation_drops_high_degrees() {
        let t = IndexTable::shared(1, 2);
        let u = Jet::variable(&t, 0, 0.0);
        let cube = u.powi(3);
        assert!(cube.coeffs().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn derivative_applies_factorials() {
        let t = IndexTable::shared(2, 4);
        let x = Jet::variable(&t, 0, 0.0);
        let y = Jet::variable(&t, 1, 0.0);
        // f = x^2 y^2, d^4/dx^2dy^2 = 4
        let f = &x.powi(2) * &y.powi(2);
        assert_eq!(f.derivative(&[2, 2]).unwrap(), 4.0);
    }

    #[test]
    fn lift_embeds_variables() {
        let t1 = IndexTable::shared(1, 3);
        let t3 = IndexTable::shared(3, 3);
        let u = Jet::variable(&t1, 0, 0.5).sin();
        let lifted = u.lift(&t3, &[2]).unwrap();
        let direct = Jet::variable(&t3, 2, 0.5).sin();
        for (a, b) in lifted.coeffs().iter().zip(direct.coeffs()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-15);
        }
    }
}
