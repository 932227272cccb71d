//! Rank-revealing subspace numerics.
//!
//! Every [`Subspace`] carries an orthonormal basis and the relative
//! singular-value threshold that decided its dimension, so rank decisions
//! can be audited after the fact.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{GeomError, Result};
use crate::linalg::svd;

/// Default relative rank threshold.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Residual allowed when checking `A ⊂ B` before complementing.
pub const CONTAINMENT_TOL: f64 = 1e-8;

/// Linear subspace of `R^N` with an orthonormal basis stored column-wise.
#[derive(Clone, Debug)]
pub struct Subspace {
    basis: DMatrix<f64>,
    tol_used: f64,
}

impl Subspace {
    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            basis: DMatrix::zeros(ambient_dim, 0),
            tol_used: 0.0,
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self {
            basis: DMatrix::identity(ambient_dim, ambient_dim),
            tol_used: 0.0,
        }
    }

    /// Wraps columns that are already orthonormal (checked to 1e-10).
    pub fn from_orthonormal(basis: DMatrix<f64>, tol_used: f64) -> Result<Self> {
        let gram = basis.transpose() * &basis;
        let k = basis.ncols();
        let err = (gram - DMatrix::<f64>::identity(k, k)).amax();
        if err > 1e-10 {
            return Err(GeomError::Shape(format!(
                "basis is not orthonormal (Gram error {err:.3e})"
            )));
        }
        Ok(Self { basis, tol_used })
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn tol_used(&self) -> f64 {
        self.tol_used
    }

    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.basis.column(i).into_owned()
    }

    pub fn vectors(&self) -> Vec<DVector<f64>> {
        (0..self.dim()).map(|i| self.vector(i)).collect()
    }

    /// Orthogonal projector `B B^T`.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    /// Orthogonal projection; panics on dimension mismatch (see [`project`]).
    pub fn proj(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.basis * (self.basis.transpose() * v)
    }

    /// `v` minus its projection.
    pub fn reject(&self, v: &DVector<f64>) -> DVector<f64> {
        v - self.proj(v)
    }

    /// Coordinates of the projection of `v` on the stored basis.
    pub fn coords(&self, v: &DVector<f64>) -> DVector<f64> {
        self.basis.transpose() * v
    }

    /// Orthogonal complement in the ambient space.
    pub fn orthogonal_complement(&self) -> Subspace {
        let full = Subspace::full(self.ambient_dim());
        complement_within(self, &full).expect("every subspace lies in the ambient space")
    }

    /// Largest residual of this basis when projected on `other`.
    pub fn containment_residual(&self, other: &Subspace) -> f64 {
        (0..self.dim())
            .map(|i| other.reject(&self.vector(i)).norm())
            .fold(0.0, f64::max)
    }
}

fn check_finite(vectors: &[DVector<f64>]) -> Result<()> {
    if vectors.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
        return Err(GeomError::Data("non-finite entry in vector set".into()));
    }
    Ok(())
}

fn columns(vectors: &[DVector<f64>], ambient: usize) -> Result<DMatrix<f64>> {
    if vectors.iter().any(|v| v.len() != ambient) {
        return Err(GeomError::Shape("vectors disagree in ambient dimension".into()));
    }
    Ok(DMatrix::from_fn(ambient, vectors.len(), |i, j| vectors[j][i]))
}

/// Number of singular values above `tol * max(sigma_max, scale)`.
pub fn numerical_rank(singular_values: &[f64], tol: f64, scale: f64) -> usize {
    let smax = singular_values.iter().copied().fold(0.0, f64::max);
    let thr = tol * smax.max(scale);
    singular_values.iter().filter(|&&s| s > thr).count()
}

/// Singular values of `m` in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    svd(m).map(|d| d.s).unwrap_or_else(|_| vec![f64::NAN; m.nrows().min(m.ncols())])
}

/// Span of `vectors` in `R^ambient` at relative threshold `tol`.
pub fn span_of(vectors: &[DVector<f64>], ambient: usize, tol: f64) -> Result<Subspace> {
    span_of_scaled(vectors, ambient, tol, 0.0)
}

/// Like [`span_of`] but the threshold is `tol * max(sigma_max, scale)`, so a
/// set made only of rounding noise relative to `scale` spans nothing.
pub fn span_of_scaled(
    vectors: &[DVector<f64>],
    ambient: usize,
    tol: f64,
    scale: f64,
) -> Result<Subspace> {
    check_finite(vectors)?;
    if vectors.is_empty() {
        return Ok(Subspace::zero(ambient));
    }
    let m = columns(vectors, ambient)?;
    let d = svd(&m)?;
    let rank = numerical_rank(&d.s, tol, scale);
    let basis = d.u.columns(0, rank).into_owned();
    Ok(Subspace {
        basis,
        tol_used: tol,
    })
}

/// Orthogonal projection of `v` onto `s`.
pub fn project(s: &Subspace, v: &DVector<f64>) -> Result<DVector<f64>> {
    if v.len() != s.ambient_dim() {
        return Err(GeomError::Shape(format!(
            "vector of length {} against subspace of R^{}",
            v.len(),
            s.ambient_dim()
        )));
    }
    Ok(s.proj(v))
}

/// The orthogonal complement of `a` inside `b`; requires `a ⊂ b`.
pub fn complement_within(a: &Subspace, b: &Subspace) -> Result<Subspace> {
    if a.ambient_dim() != b.ambient_dim() {
        return Err(GeomError::Shape("subspaces live in different spaces".into()));
    }
    let residual = a.containment_residual(b);
    if residual > CONTAINMENT_TOL {
        return Err(GeomError::Containment { residual });
    }
    let target = b.dim().saturating_sub(a.dim());
    if target == 0 {
        return Ok(Subspace {
            basis: DMatrix::zeros(b.ambient_dim(), 0),
            tol_used: b.tol_used,
        });
    }
    let mut m = b.basis.clone();
    for j in 0..m.ncols() {
        let v = m.column(j).into_owned();
        m.set_column(j, &a.reject(&v));
    }
    let d = svd(&m)?;
    Ok(Subspace {
        basis: d.u.columns(0, target).into_owned(),
        tol_used: b.tol_used,
    })
}

/// Principal angles in nondecreasing order, `min(dim a, dim b)` of them.
///
/// Small angles are recovered from sines and large ones from cosines, which
/// keeps full accuracy near zero where `acos` alone loses half the digits.
pub fn principal_angles(a: &Subspace, b: &Subspace) -> Result<Vec<f64>> {
    if a.ambient_dim() != b.ambient_dim() {
        return Err(GeomError::Shape("subspaces live in different spaces".into()));
    }
    let (big, small) = if a.dim() >= b.dim() { (a, b) } else { (b, a) };
    if small.dim() == 0 {
        return Ok(Vec::new());
    }
    let c = big.basis.transpose() * &small.basis;
    let cosines = singular_values(&c);
    let s = &small.basis - &big.basis * &c;
    let mut sines = singular_values(&s);
    sines.reverse();
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let mut angles: Vec<f64> = cosines
        .iter()
        .zip(&sines)
        .map(|(&cs, &sn)| {
            if cs > half {
                sn.min(1.0).asin()
            } else {
                cs.clamp(-1.0, 1.0).acos()
            }
        })
        .collect();
    angles.sort_by(|x, y| x.partial_cmp(y).expect("finite angle"));
    Ok(angles)
}

/// True when the subspaces have equal dimension and all principal angles are below `tol`.
pub fn same_subspace(a: &Subspace, b: &Subspace, tol: f64) -> bool {
    a.dim() == b.dim()
        && principal_angles(a, b)
            .map(|v| v.iter().all(|&t| t < tol))
            .unwrap_or(false)
}

/// Largest principal angle, 0 for empty pairs, `+inf` on dimension mismatch.
pub fn max_angle(a: &Subspace, b: &Subspace) -> f64 {
    if a.dim() != b.dim() {
        return f64::INFINITY;
    }
    principal_angles(a, b)
        .map(|v| v.last().copied().unwrap_or(0.0))
        .unwrap_or(f64::INFINITY)
}

/// Right null space of `map` (rows = codomain, cols = domain).
pub fn kernel_of(map: &DMatrix<f64>, tol: f64) -> Subspace {
    kernel_of_scaled(map, tol, 0.0)
}

/// Null space with threshold `tol * max(sigma_max, scale)`.
pub fn kernel_of_scaled(map: &DMatrix<f64>, tol: f64, scale: f64) -> Subspace {
    let n = map.ncols();
    if n == 0 {
        return Subspace::zero(0);
    }
    if map.nrows() == 0 {
        return Subspace {
            basis: DMatrix::identity(n, n),
            tol_used: tol,
        };
    }
    let rows = map.nrows().max(n);
    let mut padded = DMatrix::zeros(rows, n);
    padded.rows_mut(0, map.nrows()).copy_from(map);
    let Ok(d) = svd(&padded) else {
        return Subspace::zero(n);
    };
    let rank = numerical_rank(&d.s, tol, scale);
    let basis = d.v.columns(rank, n - rank).into_owned();
    Subspace {
        basis,
        tol_used: tol,
    }
}

/// `a + b` through the span of the concatenated bases.
pub fn sum(a: &Subspace, b: &Subspace, tol: f64) -> Result<Subspace> {
    let mut v = a.vectors();
    v.extend(b.vectors());
    span_of(&v, a.ambient_dim(), tol)
}

/// `a ∩ b` from principal vectors whose angle is below `angle_tol`.
pub fn intersection(a: &Subspace, b: &Subspace, angle_tol: f64) -> Result<Subspace> {
    if a.ambient_dim() != b.ambient_dim() {
        return Err(GeomError::Shape("subspaces live in different spaces".into()));
    }
    let count = principal_angles(a, b)?
        .iter()
        .filter(|&&t| t < angle_tol)
        .count();
    if count == 0 {
        return Ok(Subspace::zero(a.ambient_dim()));
    }
    let c = a.basis.transpose() * &b.basis;
    let d = svd(&c)?;
    let vecs = &a.basis * d.u.columns(0, count);
    let basis = orthonormalize_columns(&vecs);
    Ok(Subspace {
        basis,
        tol_used: a.tol_used.max(b.tol_used),
    })
}

/// Modified Gram-Schmidt in column order; columns must be independent.
pub fn orthonormalize_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut q = m.clone();
    for j in 0..q.ncols() {
        for _pass in 0..2 {
            for i in 0..j {
                let qi = q.column(i).into_owned();
                let d = qi.dot(&q.column(j));
                let mut cj = q.column_mut(j);
                cj.axpy(-d, &qi, 1.0);
            }
        }
        let n = q.column(j).norm();
        q.column_mut(j).scale_mut(1.0 / n);
    }
    q
}

/// Summary of a subspace for reports.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SubspaceSummary {
    pub dim: usize,
    pub tol_used: f64,
}

impl From<&Subspace> for SubspaceSummary {
    fn from(s: &Subspace) -> Self {
        Self {
            dim: s.dim(),
            tol_used: s.tol_used,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn collinear_vectors_span_a_line() {
        let s = span_of(&[v(&[1., 0., 0.]), v(&[2., 0., 0.])], 3, 1e-8).unwrap();
        assert_eq!(s.dim(), 1);
        assert_abs_diff_eq!(s.vector(0)[0].abs(), 1.0, epsilon = 1e-15);
        assert_eq!(s.tol_used(), 1e-8);
    }

    #[test]
    fn threshold_swallows_noise() {
        let s = span_of(&[v(&[1., 0., 0.]), v(&[1., 1e-12, 0.])], 3, 1e-8).unwrap();
        assert_eq!(s.dim(), 1);
    }

    #[test]
    fn empty_and_nan_inputs() {
        assert_eq!(span_of(&[], 4, 1e-8).unwrap().dim(), 0);
        assert!(matches!(
            span_of(&[v(&[f64::NAN, 0.])], 2, 1e-8),
            Err(GeomError::Data(_))
        ));
    }

    #[test]
    fn projection_basics() {
        let s = span_of(&[v(&[1., 0., 0.])], 3, 1e-8).unwrap();
        let p = project(&s, &v(&[3., 4., 0.])).unwrap();
        assert_abs_diff_eq!((p - v(&[3., 0., 0.])).norm(), 0.0, epsilon = 1e-15);
        let inside = v(&[-2., 0., 0.]);
        assert_abs_diff_eq!((project(&s, &inside).unwrap() - &inside).norm(), 0.0, epsilon = 1e-13);
        assert!(project(&s, &v(&[1., 2.])).is_err());
    }

    #[test]
    fn complement_cases() {
        let a = span_of(&[v(&[1., 0., 0.])], 3, 1e-8).unwrap();
        let b = span_of(&[v(&[1., 0., 0.]), v(&[0., 1., 0.])], 3, 1e-8).unwrap();
        let c = complement_within(&a, &b).unwrap();
        assert_eq!(c.dim(), 1);
        assert_abs_diff_eq!(c.vector(0)[1].abs(), 1.0, epsilon = 1e-14);
        assert_eq!(complement_within(&b, &b).unwrap().dim(), 0);
        let outside = span_of(&[v(&[0., 0., 1.])], 3, 1e-8).unwrap();
        assert!(matches!(
            complement_within(&outside, &b),
            Err(GeomError::Containment { .. })
        ));
    }

    #[test]
    fn angles_between_axes() {
        let a = span_of(&[v(&[1., 0., 0.])], 3, 1e-8).unwrap();
        let b = span_of(&[v(&[0., 1., 0.])], 3, 1e-8).unwrap();
        let ang = principal_angles(&a, &b).unwrap();
        assert_abs_diff_eq!(ang[0], std::f64::consts::FRAC_PI_2, epsilon = 1e-15);
        let same = principal_angles(&a, &a).unwrap();
        assert_eq!(same, vec![0.0]);
    }

    #[test]
    fn tiny_angles_are_resolved() {
        let eps = 1e-11;
        let a = span_of(&[v(&[1., 0.])], 2, 1e-14).unwrap();
        let b = span_of(&[v(&[1., eps])], 2, 1e-14).unwrap();
        let ang = principal_angles(&a, &b).unwrap();
        assert!((ang[0] - eps).abs() < 1e-20);
    }

    #[test]
    fn kernels_of_simple_maps() {
        assert_eq!(kernel_of(&DMatrix::zeros(3, 3), 1e-8).dim(), 3);
        assert_eq!(kernel_of(&DMatrix::identity(3, 3), 1e-8).dim(), 0);
        let wide = DMatrix::from_row_slice(1, 3, &[1., 1., 0.]);
        let k = kernel_of(&wide, 1e-8);
        assert_eq!(k.dim(), 2);
        assert!((&wide * k.basis()).amax() < 1e-15);
    }

    #[test]
    fn intersection_of_planes() {
        let a = span_of(&[v(&[1., 0., 0.]), v(&[0., 1., 0.])], 3, 1e-8).unwrap();
        let b = span_of(&[v(&[0., 1., 0.]), v(&[0., 0., 1.])], 3, 1e-8).unwrap();
        let i = intersection(&a, &b, 1e-8).unwrap();
        assert_eq!(i.dim(), 1);
        assert_abs_diff_eq!(i.vector(0)[1].abs(), 1.0, epsilon = 1e-14);
    }
}
