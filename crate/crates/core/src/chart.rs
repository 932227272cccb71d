//! Immersion charts: a coordinate box and a map written once over jets.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use rand::Rng;

use crate::error::{GeomError, Result};
use crate::jets::{DerivativeTensor, IndexTable, Jet};

/// Closure evaluating the chart on input jets (one per chart coordinate).
pub type ChartMap = Arc<dyn Fn(&[Jet]) -> Result<Vec<Jet>> + Send + Sync>;

/// Axis-aligned box of chart coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Domain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len(), "domain bounds disagree in dimension");
        Self { lo, hi }
    }

    pub fn cube(dim: usize, half_width: f64) -> Self {
        Self::new(vec![-half_width; dim], vec![half_width; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (l, h))| *v >= *l && *v <= *h)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| 0.5 * (l + h))
            .collect()
    }

    /// Uniform sample of the box shrunk by `margin` on every side.
    pub fn sample(&self, margin: f64, rng: &mut impl Rng) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| {
                let (a, b) = (l + margin, h - margin);
                if b > a {
                    rng.random_range(a..b)
                } else {
                    0.5 * (l + h)
                }
            })
            .collect()
    }
}

/// A local parametrization `f: U ⊂ R^n → R^N` of an immersed submanifold.
#[derive(Clone)]
pub struct ImmersionChart {
    name: String,
    dim: usize,
    ambient_dim: usize,
    domain: Domain,
    max_order: usize,
    map: ChartMap,
}

impl fmt::Debug for ImmersionChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImmersionChart")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("ambient_dim", &self.ambient_dim)
            .field("domain", &self.domain)
            .field("max_order", &self.max_order)
            .finish()
    }
}

impl ImmersionChart {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        ambient_dim: usize,
        domain: Domain,
        max_order: usize,
        map: ChartMap,
    ) -> Self {
        assert_eq!(domain.dim(), dim, "domain dimension must match chart dimension");
        Self {
            name: name.into(),
            dim,
            ambient_dim,
            domain,
            max_order,
            map,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn map(&self) -> &ChartMap {
        &self.map
    }

    fn check(&self, x: &[f64], order: usize) -> Result<()> {
        if !self.domain.contains(x) {
            return Err(GeomError::Domain { point: x.to_vec() });
        }
        if order > self.max_order {
            return Err(GeomError::Capability {
                requested: order,
                max: self.max_order,
            });
        }
        Ok(())
    }

    /// Component jets of the chart expanded at `x`.
    pub fn jet(&self, x: &[f64], order: usize) -> Result<Vec<Jet>> {
        self.check(x, order)?;
        let vars = Jet::variables(x, order);
        let out = (self.map)(&vars)?;
        if out.len() != self.ambient_dim {
            return Err(GeomError::Shape(format!(
                "chart {} produced {} components, expected {}",
                self.name,
                out.len(),
                self.ambient_dim
            )));
        }
        Ok(out)
    }

    /// Every partial derivative of order `<= order` at `x`.
    pub fn eval_jet(&self, x: &[f64], order: usize) -> Result<DerivativeTensor> {
        DerivativeTensor::from_jets(&self.jet(x, order)?)
    }

    /// The point `f(x)`.
    pub fn value(&self, x: &[f64]) -> Result<DVector<f64>> {
        let j = self.jet(x, 0)?;
        Ok(DVector::from_iterator(j.len(), j.iter().map(Jet::value)))
    }

    /// `self ∘ reparam`, where `reparam` maps the new coordinates (box
    /// `domain`) into this chart's domain.
    pub fn compose(&self, name: impl Into<String>, domain: Domain, reparam: ChartMap) -> Self {
        let inner = self.map.clone();
        let dim = domain.dim();
        let map: ChartMap = Arc::new(move |w: &[Jet]| {
            let u = reparam(w)?;
            inner(&u)
        });
        Self::new(name, dim, self.ambient_dim, domain, self.max_order, map)
    }

    /// Same map on a different box.
    pub fn with_domain(&self, domain: Domain) -> Self {
        assert_eq!(domain.dim(), self.dim);
        let mut c = self.clone();
        c.domain = domain;
        c
    }

    /// Same map under another name.
    pub fn renamed(&self, name: impl Into<String>) -> Self {
        let mut c = self.clone();
        c.name = name.into();
        c
    }
}

/// Builds a chart from a closure over plain jets, wrapping it in an `Arc`.
pub fn chart_map<F>(f: F) -> ChartMap
where
    F: Fn(&[Jet]) -> Result<Vec<Jet>> + Send + Sync + 'static,
{
    Arc::new(f)
}

/// Constant jet helper for chart closures.
pub fn constant_like(j: &Jet, value: f64) -> Jet {
    Jet::constant(j.table(), value)
}

/// The shared table of the input jets of a chart closure.
pub fn table_of(inputs: &[Jet]) -> std::sync::Arc<IndexTable> {
    inputs[0].table().clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn circle() -> ImmersionChart {
        ImmersionChart::new(
            "circle",
            1,
            2,
            Domain::cube(1, 3.0),
            8,
            chart_map(|u| Ok(vec![u[0].cos(), u[0].sin()])),
        )
    }

    #[test]
    fn circle_derivatives() {
        let d = circle().eval_jet(&[0.0], 2).unwrap();
        assert_eq!(d.value().as_slice(), &[1.0, 0.0]);
        assert_eq!(d.partial(&[0]).as_slice(), &[0.0, 1.0]);
        assert_abs_diff_eq!(d.partial(&[0, 0])[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.partial(&[0, 0])[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn affine_chart_derivatives() {
        let a = [[1.0, 2.0], [0.5, -1.0], [3.0, 0.0]];
        let b = [0.1, 0.2, 0.3];
        let chart = ImmersionChart::new(
            "affine",
            2,
            3,
            Domain::cube(2, 10.0),
            4,
            chart_map(move |u| {
                Ok((0..3)
                    .map(|r| (&u[0] * a[r][0] + &u[1] * a[r][1]).add_scalar(b[r]))
                    .collect())
            }),
        );
        let d = chart.eval_jet(&[1.5, -2.0], 2).unwrap();
        for j in 0..2 {
            for r in 0..3 {
                assert_eq!(d.partial(&[j])[r], a[r][j]);
            }
        }
        for v in d.of_degree(2) {
            assert_eq!(v.amax(), 0.0);
        }
    }

    #[test]
    fn domain_and_capability_errors() {
        let c = circle();
        assert!(matches!(c.eval_jet(&[5.0], 1), Err(GeomError::Domain { .. })));
        assert!(matches!(
            c.eval_jet(&[0.0], 9),
            Err(GeomError::Capability { requested: 9, max: 8 })
        ));
    }
}
