//! Dense SVD and symmetric eigensolvers on `nalgebra` matrices, computed by `faer`.

use faer::Mat;
use nalgebra::DMatrix;

use crate::error::{GeomError, Result};

fn to_faer(m: &DMatrix<f64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin SVD `m = U diag(s) V^T` with `s` in descending order.
#[derive(Clone, Debug)]
pub struct Svd {
    /// `rows × min(rows, cols)`.
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    /// `cols × min(rows, cols)`.
    pub v: DMatrix<f64>,
}

pub fn svd(m: &DMatrix<f64>) -> Result<Svd> {
    let k = m.nrows().min(m.ncols());
    if k == 0 {
        return Ok(Svd {
            u: DMatrix::zeros(m.nrows(), 0),
            s: Vec::new(),
            v: DMatrix::zeros(m.ncols(), 0),
        });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(GeomError::Data("non-finite matrix entry".into()));
    }
    let d = to_faer(m)
        .thin_svd()
        .map_err(|e| GeomError::NumericalRank(format!("SVD did not converge: {e:?}")))?;
    let s = (0..k).map(|i| d.S()[i]).collect();
    Ok(Svd {
        u: from_faer(d.U()),
        s,
        v: from_faer(d.V()),
    })
}

/// Least-squares solution of `m w = rhs` through the pseudo-inverse with
/// singular values below `cutoff * s_max` dropped.
pub fn lstsq(d: &Svd, rhs: &nalgebra::DVector<f64>, cutoff: f64) -> nalgebra::DVector<f64> {
    let smax = d.s.first().copied().unwrap_or(0.0);
    let mut coef = d.u.transpose() * rhs;
    for (c, &s) in coef.iter_mut().zip(&d.s) {
        *c = if s > cutoff * smax { *c / s } else { 0.0 };
    }
    &d.v * coef
}

/// Eigenvalues (ascending) and eigenvectors of a symmetric matrix.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), DMatrix::zeros(0, 0)));
    }
    let e = to_faer(m)
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| GeomError::NumericalRank(format!("eigensolver did not converge: {e:?}")))?;
    let vals = (0..n).map(|i| e.S()[i]).collect();
    Ok((vals, from_faer(e.U())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_deficient_tall_matrix_reconstructs() {
        // A 4x2 rank-one matrix whose second column dominates.
        let m = DMatrix::from_row_slice(
            4,
            2,
            &[
                -2.7374e-5, -4.975e-3, 1.5e-17, 2.7e-16, 5.4748e-4, 9.9501e-2, -5.4748e-3, -0.99501,
            ],
        );
        let d = svd(&m).unwrap();
        let rec = &d.u * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d.s.clone())) * d.v.transpose();
        assert!((rec - &m).amax() < 1e-15);
        assert!(d.s[0] >= d.s[1]);
    }

    #[test]
    fn eigenvalues_ascend() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let (vals, vecs) = symmetric_eigen(&m).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] - 3.0).abs() < 1e-14);
        let v0 = vecs.column(0);
        assert!((v0[0] + v0[1]).abs() < 1e-14);
    }
}
