//! Bilinear forms `β: V × U → W`, their regular elements, and the
//! inclusion `β(V, ker β_Z) ⊂ β_Z(U)` that holds at every regular `Z`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{GeomError, Result};
use crate::subspaces::{kernel_of, singular_values, span_of, DEFAULT_RANK_TOL};

/// A bilinear form stored as its value table on chosen bases.
#[derive(Clone, Debug, PartialEq)]
pub struct BilinearForm {
    dim_v: usize,
    dim_u: usize,
    dim_w: usize,
    // values[(i * dim_u + j)] = β(v_i, u_j) ∈ W
    values: Vec<DVector<f64>>,
}

impl BilinearForm {
    pub fn zeros(dim_v: usize, dim_u: usize, dim_w: usize) -> Self {
        Self {
            dim_v,
            dim_u,
            dim_w,
            values: vec![DVector::zeros(dim_w); dim_v * dim_u],
        }
    }

    /// Builds the form from `f(i, j) = β(v_i, u_j)`.
    pub fn from_fn(
        dim_v: usize,
        dim_u: usize,
        dim_w: usize,
        mut f: impl FnMut(usize, usize) -> DVector<f64>,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(dim_v * dim_u);
        for i in 0..dim_v {
            for j in 0..dim_u {
                let w = f(i, j);
                if w.len() != dim_w {
                    return Err(GeomError::Shape(format!(
                        "β(v_{i}, u_{j}) has length {} instead of {dim_w}",
                        w.len()
                    )));
                }
                values.push(w);
            }
        }
        Ok(Self {
            dim_v,
            dim_u,
            dim_w,
            values,
        })
    }

    /// Sum of `rank` random rank-one terms `a ⊗ b ⊗ c`; with `rank = None` every entry is Gaussian.
    pub fn random(
        dim_v: usize,
        dim_u: usize,
        dim_w: usize,
        rank: Option<usize>,
        rng: &mut impl Rng,
    ) -> Self {
        let mut gauss = |n: usize| DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        match rank {
            None => {
                let values = (0..dim_v * dim_u).map(|_| gauss(dim_w)).collect();
                Self {
                    dim_v,
                    dim_u,
                    dim_w,
                    values,
                }
            }
            Some(r) => {
                let mut form = Self::zeros(dim_v, dim_u, dim_w);
                for _ in 0..r {
                    let a = gauss(dim_v);
                    let b = gauss(dim_u);
                    let c = gauss(dim_w);
                    for i in 0..dim_v {
                        for j in 0..dim_u {
                            form.values[i * dim_u + j] += &c * (a[i] * b[j]);
                        }
                    }
                }
                form
            }
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.dim_v, self.dim_u, self.dim_w)
    }

    pub fn basis_value(&self, i: usize, j: usize) -> &DVector<f64> {
        &self.values[i * self.dim_u + j]
    }

    /// `β(v, u)` for coordinate vectors `v ∈ V`, `u ∈ U`.
    pub fn eval(&self, v: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim_w);
        for i in 0..self.dim_v {
            for j in 0..self.dim_u {
                let c = v[i] * u[j];
                if c != 0.0 {
                    out.axpy(c, self.basis_value(i, j), 1.0);
                }
            }
        }
        out
    }

    /// Matrix of `β_Z = β(Z, ·): U → W`.
    pub fn partial_map(&self, z: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim_w, self.dim_u);
        for i in 0..self.dim_v {
            if z[i] == 0.0 {
                continue;
            }
            for j in 0..self.dim_u {
                let mut col = m.column_mut(j);
                col.axpy(z[i], self.basis_value(i, j), 1.0);
            }
        }
        m
    }

    /// Rank of `β_Z` at relative threshold `tol`.
    pub fn rank_at(&self, z: &DVector<f64>, tol: f64) -> usize {
        crate::subspaces::numerical_rank(&singular_values(&self.partial_map(z)), tol, 0.0)
    }
}

/// A sampled regular element and the rank it achieves.
#[derive(Clone, Debug)]
pub struct RegularElement {
    pub z: DVector<f64>,
    pub rank: usize,
    /// Smallest retained singular value relative to the largest.
    pub conditioning: f64,
}

fn score(form: &BilinearForm, z: &DVector<f64>, tol: f64) -> (usize, f64) {
    let sv = singular_values(&form.partial_map(z));
    let rank = crate::subspaces::numerical_rank(&sv, tol, 0.0);
    let cond = if rank == 0 { 0.0 } else { sv[rank - 1] / sv[0] };
    (rank, cond)
}

fn better(a: (usize, f64), b: (usize, f64)) -> bool {
    a.0 > b.0 || (a.0 == b.0 && a.1 > b.1)
}

/// Searches for a regular element of `form`: random unit samples followed by
/// a short perturbative refinement of the best one toward better conditioning.
pub fn regular_element(form: &BilinearForm, trials: usize, seed: u64) -> RegularElement {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dv = form.dim_v;
    let unit = |rng: &mut ChaCha8Rng| {
        let g = DVector::from_fn(dv, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = g.norm();
        if n > 0.0 {
            g / n
        } else {
            g
        }
    };
    let mut best_z = unit(&mut rng);
    let mut best = score(form, &best_z, DEFAULT_RANK_TOL);
    for _ in 1..trials.max(1) {
        let z = unit(&mut rng);
        let s = score(form, &z, DEFAULT_RANK_TOL);
        if better(s, best) {
            best = s;
            best_z = z;
        }
    }
    for _ in 0..16 {
        let step = unit(&mut rng) * 0.1;
        let cand = &best_z + step;
        let n = cand.norm();
        if n == 0.0 {
            continue;
        }
        let cand = cand / n;
        let s = score(form, &cand, DEFAULT_RANK_TOL);
        if better(s, best) {
            best = s;
            best_z = cand;
        }
    }
    RegularElement {
        z: best_z,
        rank: best.0,
        conditioning: best.1,
    }
}

/// Largest component of `β(v_i, u)` orthogonal to `β_Z(U)` over basis
/// vectors `v_i` of `V` and a basis `u` of `ker β_Z`.
pub fn moore_check(form: &BilinearForm, z: &DVector<f64>) -> f64 {
    let m = form.partial_map(z);
    let kernel = kernel_of(&m, DEFAULT_RANK_TOL);
    if kernel.dim() == 0 {
        return 0.0;
    }
    let cols: Vec<DVector<f64>> = (0..m.ncols()).map(|j| m.column(j).into_owned()).collect();
    let image = span_of(&cols, form.dim_w, DEFAULT_RANK_TOL).expect("finite form values");
    let scale = form
        .values
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut worst: f64 = 0.0;
    for i in 0..form.dim_v {
        let mut e = DVector::zeros(form.dim_v);
        e[i] = 1.0;
        for u in kernel.vectors() {
            let w = form.eval(&e, &u);
            worst = worst.max(image.reject(&w).norm() / scale);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_product_has_rank_one() {
        let f = BilinearForm::from_fn(2, 2, 1, |i, j| {
            DVector::from_element(1, if i == j { 1.0 } else { 0.0 })
        })
        .unwrap();
        let re = regular_element(&f, 8, 1);
        assert_eq!(re.rank, 1);
    }

    #[test]
    fn zero_form_has_rank_zero_and_no_residual() {
        let f = BilinearForm::zeros(3, 3, 2);
        let re = regular_element(&f, 4, 3);
        assert_eq!(re.rank, 0);
        assert_eq!(moore_check(&f, &re.z), 0.0);
    }

    #[test]
    fn surjective_partial_map_has_zero_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = BilinearForm::random(3, 4, 2, None, &mut rng);
        let z = DVector::from_column_slice(&[0.3, -1.0, 0.2]);
        assert_eq!(f.rank_at(&z, 1e-8), 2);
        assert!(moore_check(&f, &z) < 1e-14);
    }

    #[test]
    fn non_regular_element_can_violate_inclusion() {
        // β(e1, ·) = [1 0], β(e2, ·) = [0 1] into W = R^1; Z = e1 is regular
        // (rank 1), but Z = 0 is not and its kernel is all of U.
        let f = BilinearForm::from_fn(2, 2, 1, |i, j| {
            DVector::from_element(1, if i == j { 1.0 } else { 0.0 })
        })
        .unwrap();
        let zero = DVector::zeros(2);
        assert!(moore_check(&f, &zero) > 0.5);
        let e1 = DVector::from_column_slice(&[1.0, 0.0]);
        assert!(moore_check(&f, &e1) < 1e-15);
    }

    #[test]
    fn shape_errors_are_reported() {
        let r = BilinearForm::from_fn(1, 1, 2, |_, _| DVector::zeros(3));
        assert!(matches!(r, Err(GeomError::Shape(_))));
    }
}
