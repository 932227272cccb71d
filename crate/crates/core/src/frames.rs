//! Smooth local frames of point-dependent subspaces and the finite
//! differences used to differentiate them.

use nalgebra::{DMatrix, DVector};

use crate::chart::ImmersionChart;
use crate::error::{GeomError, Result};
use crate::geometry::{point_geometry, PointGeometry};
use crate::subspaces::Subspace;

/// Smallest Gram-Schmidt residual accepted when rebuilding a frame away from
/// the point where its pivots were chosen.
pub const PIVOT_FLOOR: f64 = 1e-3;

/// A frame recipe: project fixed reference vectors onto a subspace and
/// orthonormalize them in a fixed order.
///
/// The pivots are chosen once, greedily, at a base point. Reusing them at
/// nearby points yields a frame field that varies smoothly with the subspace.
#[derive(Clone, Debug)]
pub struct PivotedFrame {
    reference: DMatrix<f64>,
    pivots: Vec<usize>,
}

impl PivotedFrame {
    /// Picks `target.dim()` columns of `reference` whose projections onto
    /// `target` are as independent as possible.
    pub fn choose(reference: &DMatrix<f64>, target: &Subspace) -> Result<Self> {
        if reference.nrows() != target.ambient_dim() {
            return Err(GeomError::Shape("reference basis has the wrong length".into()));
        }
        let k = target.dim();
        let mut chosen: Vec<DVector<f64>> = Vec::with_capacity(k);
        let mut pivots = Vec::with_capacity(k);
        let projected: Vec<DVector<f64>> = (0..reference.ncols())
            .map(|j| target.proj(&reference.column(j).into_owned()))
            .collect();
        for _ in 0..k {
            let mut best = None::<(usize, f64, DVector<f64>)>;
            for (j, v) in projected.iter().enumerate() {
                if pivots.contains(&j) {
                    continue;
                }
                let r = reject_all(v, &chosen);
                let nr = r.norm();
                if best.as_ref().is_none_or(|b| nr > b.1) {
                    best = Some((j, nr, r));
                }
            }
            let (j, nr, r) = best.ok_or_else(|| GeomError::Frame("reference basis too small".into()))?;
            if nr < 1e-6 {
                return Err(GeomError::Frame(format!(
                    "reference basis degenerate on subspace (residual {nr:.2e})"
                )));
            }
            pivots.push(j);
            chosen.push(r / nr);
        }
        Ok(Self {
            reference: reference.clone(),
            pivots,
        })
    }

    /// Standard basis of `R^ambient` as the reference.
    pub fn standard(ambient: usize, target: &Subspace) -> Result<Self> {
        Self::choose(&DMatrix::identity(ambient, ambient), target)
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn dim(&self) -> usize {
        self.pivots.len()
    }

    /// Orthonormal frame of `target` built from the fixed pivots.
    pub fn at(&self, target: &Subspace) -> Result<DMatrix<f64>> {
        if target.dim() != self.pivots.len() {
            return Err(GeomError::Frame(format!(
                "subspace dimension {} differs from frame size {}",
                target.dim(),
                self.pivots.len()
            )));
        }
        let n = target.ambient_dim();
        let mut chosen: Vec<DVector<f64>> = Vec::with_capacity(self.pivots.len());
        for &j in &self.pivots {
            let v = target.proj(&self.reference.column(j).into_owned());
            let r = reject_all(&v, &chosen);
            let nr = r.norm();
            if nr < PIVOT_FLOOR {
                return Err(GeomError::Frame(format!(
                    "pivot {j} lost rank (residual {nr:.2e})"
                )));
            }
            chosen.push(r / nr);
        }
        Ok(DMatrix::from_fn(n, chosen.len(), |r, c| chosen[c][r]))
    }
}

fn reject_all(v: &DVector<f64>, basis: &[DVector<f64>]) -> DVector<f64> {
    let mut r = v.clone();
    for _pass in 0..2 {
        for b in basis {
            let d = b.dot(&r);
            r.axpy(-d, b, 1.0);
        }
    }
    r
}

fn shifted(x: &[f64], dir: &[f64], t: f64) -> Vec<f64> {
    x.iter().zip(dir).map(|(a, d)| a + t * d).collect()
}

/// `(g(x + h v) - g(x - h v)) / 2h`.
pub fn central_diff<F>(g: &F, x: &[f64], dir: &[f64], h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<DMatrix<f64>>,
{
    let plus = g(&shifted(x, dir, h))?;
    let minus = g(&shifted(x, dir, -h))?;
    if plus.shape() != minus.shape() {
        return Err(GeomError::Shape("stencil values disagree in shape".into()));
    }
    Ok((plus - minus) / (2.0 * h))
}

/// One Richardson step on [`central_diff`]: fourth-order accurate.
pub fn richardson_diff<F>(g: &F, x: &[f64], dir: &[f64], h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<DMatrix<f64>>,
{
    let coarse = central_diff(g, x, dir, h)?;
    let fine = central_diff(g, x, dir, 0.5 * h)?;
    Ok((fine * 4.0 - coarse) / 3.0)
}

/// Unit coordinate direction `e_i` in `R^n`.
pub fn coordinate(n: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    e
}

/// Selects a subspace from the geometry at a point.
pub type Selector<'a> = Box<dyn Fn(&PointGeometry) -> Result<Subspace> + Send + Sync + 'a>;

/// A frame field of a subspace distribution along a chart, with pivots fixed
/// at a base point.
pub struct FrameField<'a> {
    chart: &'a ImmersionChart,
    select: Selector<'a>,
    order: usize,
    tol: f64,
    pivots: PivotedFrame,
}

impl<'a> FrameField<'a> {
    /// Fixes pivots on `select(point_geometry(x))` using the standard basis.
    pub fn new(
        chart: &'a ImmersionChart,
        x: &[f64],
        normal_order: usize,
        tol: f64,
        select: Selector<'a>,
    ) -> Result<Self> {
        let g = point_geometry(chart, x, normal_order, tol)?;
        let target = select(&g)?;
        let pivots = PivotedFrame::standard(chart.ambient_dim(), &target)?;
        Ok(Self {
            chart,
            select,
            order: normal_order,
            tol,
            pivots,
        })
    }

    pub fn dim(&self) -> usize {
        self.pivots.dim()
    }

    /// Frame of the selected subspace at `y` (ambient columns).
    pub fn at(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        let g = point_geometry(self.chart, y, self.order, self.tol)?;
        self.pivots.at(&(self.select)(&g)?)
    }

    /// Ambient derivative of the frame along the chart direction `dir`.
    pub fn derivative(&self, x: &[f64], dir: &[f64], h: f64, richardson: bool) -> Result<DMatrix<f64>> {
        let g = |y: &[f64]| self.at(y);
        if richardson {
            richardson_diff(&g, x, dir, h)
        } else {
            central_diff(&g, x, dir, h)
        }
    }
}
