//! Rank-revealing spans, kernels, sums, intersections and principal angles.

use nalgebra::{DMatrix, DVector};
use osculum::subspaces::{intersection, kernel_of, principal_angles, span_of, sum, DEFAULT_RANK_TOL};

fn v(c: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(c)
}

fn main() -> osculum::Result<()> {
    // Three vectors in R^4, one of them a combination of the others up to 1e-12.
    let a = [v(&[1., 0., 0., 0.]), v(&[0., 1., 1., 0.]), v(&[1., 1., 1., 1e-12])];
    let span = span_of(&a, 4, DEFAULT_RANK_TOL)?;
    println!("span of 3 nearly dependent vectors has dimension {}", span.dim());

    let b = span_of(&[v(&[0., 0., 1., 0.]), v(&[0., 0., 0., 1.])], 4, DEFAULT_RANK_TOL)?;
    let s = sum(&span, &b, DEFAULT_RANK_TOL)?;
    let i = intersection(&span, &b, 1e-8)?;
    println!("dim A = {}, dim B = {}, dim(A + B) = {}, dim(A ∩ B) = {}", span.dim(), b.dim(), s.dim(), i.dim());

    let angles = principal_angles(&span, &b)?;
    println!("principal angles between A and B: {angles:.6?}");

    let m = DMatrix::from_row_slice(2, 4, &[1., 2., 3., 4., 2., 4., 6., 8.]);
    println!("kernel of a rank-one 2x4 map has dimension {}", kernel_of(&m, DEFAULT_RANK_TOL).dim());
    Ok(())
}
