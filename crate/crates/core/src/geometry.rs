//! Pointwise invariants of an immersion: tangent frame, metric, second and
//! higher fundamental forms, the osculating flag, nullities and Ricci
//! curvature from the Gauss equation.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::chart::ImmersionChart;
use crate::error::{GeomError, Result};
use crate::jets::DerivativeTensor;
use crate::subspaces::{
    complement_within, kernel_of_scaled, numerical_rank, orthonormalize_columns, principal_angles,
    span_of_scaled, Subspace,
};

/// A multilinear normal-valued form on the orthonormal tangent frame,
/// stored densely with the first slot varying slowest.
#[derive(Clone, Debug)]
pub struct FormTensor {
    order: usize,
    n: usize,
    values: Vec<DVector<f64>>,
}

impl FormTensor {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, idx: &[usize]) -> &DVector<f64> {
        &self.values[self.flat(idx)]
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    fn unflat(n: usize, order: usize, mut f: usize) -> Vec<usize> {
        let mut idx = vec![0; order];
        for slot in (0..order).rev() {
            idx[slot] = f % n;
            f /= n;
        }
        idx
    }

    /// Evaluates the form on arbitrary frame-coordinate vectors.
    pub fn eval(&self, args: &[&DVector<f64>]) -> DVector<f64> {
        let dim = self.values[0].len();
        let mut out = DVector::zeros(dim);
        for (f, v) in self.values.iter().enumerate() {
            let idx = Self::unflat(self.n, self.order, f);
            let w: f64 = idx.iter().zip(args).map(|(&i, a)| a[i]).product();
            if w != 0.0 {
                out.axpy(w, v, 1.0);
            }
        }
        out
    }
}

/// Everything the pipeline knows about an immersion at one chart point.
#[derive(Clone, Debug)]
pub struct PointGeometry {
    pub x: Vec<f64>,
    pub derivs: DerivativeTensor,
    /// Columns `d f / d u_i`.
    pub jacobian: DMatrix<f64>,
    /// `frame = jacobian * gauge`, upper triangular.
    pub gauge: DMatrix<f64>,
    /// Orthonormal tangent frame `e_a` as columns.
    pub frame: DMatrix<f64>,
    pub tangent: Subspace,
    pub normal: Subspace,
    pub metric: DMatrix<f64>,
    pub alpha: FormTensor,
    /// `α^ℓ` for `ℓ = 3, 4, ...`.
    pub higher_forms: Vec<FormTensor>,
    /// `osculating[k-1]` is the order-`k` osculating space; `osculating[0]` is the tangent space.
    pub osculating: Vec<Subspace>,
    /// `normal_flag[k-1] = N_k`.
    pub normal_flag: Vec<Subspace>,
    /// Size of the frame second derivatives, the scale for rank decisions on curvature data.
    pub scale: f64,
    pub tol: f64,
}

fn raw_tensor(derivs: &DerivativeTensor, n: usize, order: usize) -> Vec<DVector<f64>> {
    let total = n.pow(order as u32);
    (0..total)
        .map(|f| derivs.partial(&FormTensor::unflat(n, order, f)).clone())
        .collect()
}

/// Contracts every slot of a coordinate tensor with the gauge.
fn to_frame(raw: Vec<DVector<f64>>, gauge: &DMatrix<f64>, order: usize) -> Vec<DVector<f64>> {
    let n = gauge.nrows();
    let mut cur = raw;
    for slot in 0..order {
        let stride = n.pow((order - 1 - slot) as u32);
        let mut next = vec![DVector::zeros(cur[0].len()); cur.len()];
        for (f, out) in next.iter_mut().enumerate() {
            let a = (f / stride) % n;
            let base = f - a * stride;
            for i in 0..=a {
                let g = gauge[(i, a)];
                if g != 0.0 {
                    out.axpy(g, &cur[base + i * stride], 1.0);
                }
            }
        }
        cur = next;
    }
    cur
}

/// Modified Gram-Schmidt in coordinate order returning `(Q, R)`.
fn qr_in_order(m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = m.ncols();
    let mut q = m.clone();
    let mut r = DMatrix::zeros(n, n);
    for j in 0..n {
        for _pass in 0..2 {
            for i in 0..j {
                let qi = q.column(i).into_owned();
                let d = qi.dot(&q.column(j));
                r[(i, j)] += d;
                q.column_mut(j).axpy(-d, &qi, 1.0);
            }
        }
        let nj = q.column(j).norm();
        r[(j, j)] = nj;
        q.column_mut(j).scale_mut(1.0 / nj);
    }
    (q, r)
}

fn upper_inverse(r: &DMatrix<f64>) -> DMatrix<f64> {
    let n = r.nrows();
    let mut g = DMatrix::zeros(n, n);
    for j in 0..n {
        g[(j, j)] = 1.0 / r[(j, j)];
        for i in (0..j).rev() {
            let s: f64 = (i + 1..=j).map(|k| r[(i, k)] * g[(k, j)]).sum();
            g[(i, j)] = -s / r[(i, i)];
        }
    }
    g
}

/// Computes the tangent frame, fundamental forms and normal flag at `x`.
///
/// `N_k` is the complement of the order-`k` osculating space inside the
/// order-`k+1` one. A rank that changes between `tol / 10` and `10 tol` is
/// reported as a regularity error naming the offending `k`.
pub fn point_geometry(
    chart: &ImmersionChart,
    x: &[f64],
    max_normal_order: usize,
    tol: f64,
) -> Result<PointGeometry> {
    let order = max_normal_order.max(1) + 1;
    let derivs = chart.eval_jet(x, order)?;
    let n = chart.dim();
    let big_n = chart.ambient_dim();

    let jacobian = DMatrix::from_fn(big_n, n, |r, c| derivs.partial(&[c])[r]);
    let sv = crate::linalg::svd(&jacobian)?.s;
    let rank = numerical_rank(&sv, tol, 0.0);
    if rank < n {
        return Err(GeomError::NotImmersion { rank, dim: n });
    }
    let (frame, r) = qr_in_order(&jacobian);
    let gauge = upper_inverse(&r);
    let tangent = Subspace::from_orthonormal(frame.clone(), tol)?;
    let normal = tangent.orthogonal_complement();
    let metric = jacobian.transpose() * &jacobian;

    let second = to_frame(raw_tensor(&derivs, n, 2), &gauge, 2);
    let scale = second.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let alpha = FormTensor {
        order: 2,
        n,
        values: second.iter().map(|v| normal.proj(v)).collect(),
    };

    let mut osculating = vec![tangent.clone()];
    let mut normal_flag = Vec::new();
    for k in 1..=max_normal_order {
        let osc = osculating.last().expect("tangent space seeds the flag").clone();
        let raw: Vec<DVector<f64>> = derivs.of_degree(k + 1).cloned().collect();
        let raw_scale = raw.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let rejected: Vec<DVector<f64>> = raw.iter().map(|v| osc.reject(v)).collect();
        let m = DMatrix::from_fn(big_n, rejected.len(), |r, c| rejected[c][r]);
        let svals: Vec<f64> = if osc.dim() == big_n {
            Vec::new()
        } else {
            crate::subspaces::singular_values(&m)
        };
        let low = numerical_rank(&svals, tol * 10.0, raw_scale);
        let high = numerical_rank(&svals, tol / 10.0, raw_scale);
        if low != high {
            return Err(GeomError::Regularity { k, low, high });
        }
        let nk = if osc.dim() == big_n {
            Subspace::zero(big_n)
        } else {
            let s = span_of_scaled(&rejected, big_n, tol, raw_scale)?;
            // Re-orthogonalize against the flag to remove rounding drift.
            let cleaned: Vec<DVector<f64>> = s.vectors().iter().map(|v| osc.reject(v)).collect();
            let b = DMatrix::from_fn(big_n, cleaned.len(), |r, c| cleaned[c][r]);
            Subspace::from_orthonormal(orthonormalize_columns(&b), tol)?
        };
        let mut cols = osc.vectors();
        cols.extend(nk.vectors());
        let b = DMatrix::from_fn(big_n, cols.len(), |r, c| cols[c][r]);
        osculating.push(Subspace::from_orthonormal(orthonormalize_columns(&b), tol)?);
        normal_flag.push(nk);
    }

    let mut higher_forms = Vec::new();
    for ell in 3..=order {
        let Some(osc) = osculating.get(ell - 2) else {
            break;
        };
        let t = to_frame(raw_tensor(&derivs, n, ell), &gauge, ell);
        higher_forms.push(FormTensor {
            order: ell,
            n,
            values: t.iter().map(|v| osc.reject(v)).collect(),
        });
    }

    Ok(PointGeometry {
        x: x.to_vec(),
        derivs,
        jacobian,
        gauge,
        frame,
        tangent,
        normal,
        metric,
        alpha,
        higher_forms,
        osculating,
        normal_flag,
        scale,
        tol,
    })
}

impl PointGeometry {
    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.frame.nrows()
    }

    /// `N_1`, empty when the flag was not computed.
    pub fn first_normal(&self) -> Subspace {
        self.normal_flag
            .first()
            .cloned()
            .unwrap_or_else(|| Subspace::zero(self.ambient_dim()))
    }

    /// `N_1^⊥` inside the normal space.
    pub fn first_normal_complement(&self) -> Subspace {
        complement_within(&self.first_normal(), &self.normal)
            .expect("N_1 lies in the normal space by construction")
    }

    pub fn flag_dims(&self) -> Vec<usize> {
        self.normal_flag.iter().map(Subspace::dim).collect()
    }

    /// `α^ℓ`, if computed.
    pub fn form(&self, ell: usize) -> Option<&FormTensor> {
        match ell {
            2 => Some(&self.alpha),
            _ => self.higher_forms.get(ell.checked_sub(3)?),
        }
    }

    /// Ambient vector for frame coordinates `c`.
    pub fn frame_vector(&self, c: &DVector<f64>) -> DVector<f64> {
        &self.frame * c
    }

    /// Frame coordinates of a tangent subspace mapped to ambient space.
    pub fn to_ambient(&self, s: &Subspace) -> Subspace {
        let b = &self.frame * s.basis();
        Subspace::from_orthonormal(b, s.tol_used()).expect("frame is orthonormal")
    }

    /// Frame coordinates of the projection of an ambient subspace onto the tangent space.
    pub fn to_frame_coords(&self, s: &Subspace) -> Subspace {
        let b = self.frame.transpose() * s.basis();
        Subspace::from_orthonormal(orthonormalize_columns(&b), s.tol_used())
            .expect("tangent subspace has independent coordinates")
    }

    /// Chart-coordinate direction whose image is the frame vector with coordinates `c`.
    pub fn chart_direction(&self, c: &DVector<f64>) -> DVector<f64> {
        &self.gauge * c
    }

    /// Matrix of `X ↦ (⟨α(X, e_b), w_i⟩)_{b,i}` for the columns `w_i` of `target`.
    fn flattened_alpha(&self, target: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let k = target.ncols();
        let mut m = DMatrix::zeros(n * k, n);
        for a in 0..n {
            for b in 0..n {
                let v = self.alpha.get(&[a, b]);
                let c = target.transpose() * v;
                for i in 0..k {
                    m[(b * k + i, a)] = c[i];
                }
            }
        }
        m
    }

    /// `𝒩(α_U) = {X : π_U α(X, ·) = 0}` in frame coordinates, for `U` in ambient space.
    pub fn nullity_of_projection(&self, u: &Subspace, tol: f64) -> Subspace {
        kernel_of_scaled(&self.flattened_alpha(u.basis()), tol, self.scale)
    }

    /// Frame-coordinate coefficients of `α(e_a, e_b)` on the basis of `N_1`.
    fn alpha_in(&self, basis: &DMatrix<f64>) -> Vec<Vec<DVector<f64>>> {
        let n = self.dim();
        (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| basis.transpose() * self.alpha.get(&[a, b]))
                    .collect()
            })
            .collect()
    }
}

/// Relative nullity `𝒩(α)` in frame coordinates and its dimension.
pub fn relative_nullity(geom: &PointGeometry, tol: f64) -> (Subspace, usize) {
    let full = geom.normal.clone();
    let k = geom.nullity_of_projection(&full, tol);
    let d = k.dim();
    (k, d)
}

/// A certified lower bound for the `s`-nullity with the subspace that witnesses it.
#[derive(Clone, Debug)]
pub struct SNullity {
    pub s: usize,
    pub lower_bound: usize,
    /// The `s`-plane `U ⊂ N_1` (ambient) whose `𝒩(α_U)` has dimension `lower_bound`.
    pub witness: Subspace,
}

/// Lower bound for `ν_s = max dim 𝒩(α_U)` over `s`-planes `U ⊂ N_1`.
///
/// Each restart alternates between the `d`-plane `K` of the tangent space
/// least excited by `α_U` and the `s`-plane `U` of `N_1` least excited by
/// `α(K, ·)`, for target dimensions `d` from `n` downward. The reported value
/// is the kernel dimension actually certified by [`kernel_of_scaled`] at the
/// final `U`, so it never exceeds the true `ν_s`.
pub fn s_nullity(geom: &PointGeometry, s: usize, restarts: usize, seed: u64) -> Result<SNullity> {
    let n1 = geom.first_normal();
    let p = n1.dim();
    if s == 0 || s > p {
        return Err(GeomError::Parameter(format!("s = {s} outside 1..={p}")));
    }
    let n = geom.dim();
    let tol = geom.tol;
    let (_, base) = relative_nullity(geom, tol);
    if s == p {
        return Ok(SNullity {
            s,
            lower_bound: base,
            witness: n1,
        });
    }
    let a = geom.alpha_in(n1.basis());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let to_ambient = |u: &DMatrix<f64>| -> Subspace {
        Subspace::from_orthonormal(n1.basis() * u, tol).expect("orthonormal coefficients")
    };
    let mut best_dim = None::<usize>;
    let mut best_u = DMatrix::<f64>::zeros(p, s);
    for _ in 0..restarts.max(1) {
        let g = DMatrix::from_fn(p, s, |_, _| rng.sample::<f64, _>(StandardNormal));
        let u0 = orthonormalize_columns(&g);
        let start_kernel = geom.nullity_of_projection(&to_ambient(&u0), tol).dim();
        if best_dim.is_none_or(|b| start_kernel > b) {
            best_dim = Some(start_kernel);
            best_u = u0.clone();
        }
        for d in (base + 1..=n).rev() {
            if best_dim.is_some_and(|b| b >= d) {
                break;
            }
            let mut u = u0.clone();
            for _ in 0..60 {
                // B_U[a][a'] = Σ_b ⟨π_U α(a,b), π_U α(a',b)⟩
                let au: Vec<Vec<DVector<f64>>> = a
                    .iter()
                    .map(|row| row.iter().map(|v| u.transpose() * v).collect())
                    .collect();
                let bu = DMatrix::from_fn(n, n, |i, j| {
                    (0..n).map(|b| au[i][b].dot(&au[j][b])).sum::<f64>()
                });
                let (_, kv) = crate::linalg::symmetric_eigen(&bu)?;
                let kbasis = kv.columns(0, d).into_owned();
                let mut mk = DMatrix::<f64>::zeros(p, p);
                for c in 0..d {
                    let kvec = kbasis.column(c);
                    for b in 0..n {
                        let mut w = DVector::<f64>::zeros(p);
                        for (i, row) in a.iter().enumerate() {
                            w.axpy(kvec[i], &row[b], 1.0);
                        }
                        mk += &w * w.transpose();
                    }
                }
                let (_, uv) = crate::linalg::symmetric_eigen(&mk)?;
                u = uv.columns(0, s).into_owned();
            }
            let k = geom.nullity_of_projection(&to_ambient(&u), tol).dim();
            if best_dim.is_none_or(|b| k > b) {
                best_dim = Some(k);
                best_u = u.clone();
            }
        }
    }
    Ok(SNullity {
        s,
        lower_bound: best_dim.unwrap_or(base),
        witness: to_ambient(&best_u),
    })
}

/// Ricci curvature `Ric(X, X)` from the Gauss equation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RicciValue {
    pub value: f64,
    /// Set when the input was not a unit vector and had to be normalized.
    pub normalized: bool,
}

/// `Ric(X,X) = Σ_i ⟨α(X,X), α(e_i,e_i)⟩ − ‖α(X,e_i)‖²` for `X` in frame coordinates.
pub fn ricci(geom: &PointGeometry, x: &DVector<f64>) -> RicciValue {
    let norm = x.norm();
    let normalized = (norm - 1.0).abs() > 1e-12;
    let x = if normalized { x / norm } else { x.clone() };
    let n = geom.dim();
    let axx = geom.alpha.eval(&[&x, &x]);
    let mut value = 0.0;
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        let aii = geom.alpha.get(&[i, i]);
        let axi = geom.alpha.eval(&[&x, &e]);
        value += axx.dot(aii) - axi.norm_squared();
    }
    RicciValue { value, normalized }
}

/// Sectional curvature of the frame plane `(e_a, e_b)`.
pub fn sectional(geom: &PointGeometry, a: usize, b: usize) -> f64 {
    geom.alpha.get(&[a, a]).dot(geom.alpha.get(&[b, b])) - geom.alpha.get(&[a, b]).norm_squared()
}

/// Self-consistency residuals of a [`PointGeometry`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GeometryResiduals {
    /// `max |⟨α(e_a,e_b), e_c⟩|` relative to the curvature scale.
    pub alpha_tangent: f64,
    pub alpha_symmetry: f64,
    /// Largest `|cos|` between distinct flag members (and the tangent space).
    pub flag_orthogonality: f64,
    /// Largest principal angle between `N_1` and the span of α-values.
    pub first_normal_angle: f64,
    /// Largest component of a higher form value outside its normal space.
    pub higher_form_leak: f64,
}

pub fn geometry_residuals(geom: &PointGeometry) -> GeometryResiduals {
    let n = geom.dim();
    let scale = geom.scale.max(1e-300);
    let mut r = GeometryResiduals::default();
    for a in 0..n {
        for b in 0..n {
            let v = geom.alpha.get(&[a, b]);
            r.alpha_tangent = r
                .alpha_tangent
                .max((geom.frame.transpose() * v).amax() / scale);
            r.alpha_symmetry = r
                .alpha_symmetry
                .max((v - geom.alpha.get(&[b, a])).amax() / scale);
        }
    }
    let mut spaces = vec![&geom.tangent];
    spaces.extend(geom.normal_flag.iter());
    for i in 0..spaces.len() {
        for j in i + 1..spaces.len() {
            if spaces[i].dim() > 0 && spaces[j].dim() > 0 {
                let c = (spaces[i].basis().transpose() * spaces[j].basis()).amax();
                r.flag_orthogonality = r.flag_orthogonality.max(c);
            }
        }
    }
    let span = span_of_scaled(geom.alpha.values(), geom.ambient_dim(), geom.tol, geom.scale)
        .expect("finite α");
    let n1 = geom.first_normal();
    r.first_normal_angle = if span.dim() != n1.dim() {
        f64::INFINITY
    } else {
        principal_angles(&span, &n1)
            .map(|v| v.last().copied().unwrap_or(0.0))
            .unwrap_or(f64::INFINITY)
    };
    for form in &geom.higher_forms {
        let ell = form.order();
        let Some(target) = geom.normal_flag.get(ell - 2) else {
            continue;
        };
        let fscale = form
            .values()
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
            .max(scale);
        for v in form.values() {
            r.higher_form_leak = r.higher_form_leak.max(target.reject(v).norm() / fscale);
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{chart_map, Domain};
    use approx::assert_abs_diff_eq;

    /// Inverse stereographic chart of the unit 2-sphere.
    pub(crate) fn sphere() -> ImmersionChart {
        ImmersionChart::new(
            "sphere",
            2,
            3,
            Domain::cube(2, 0.8),
            10,
            chart_map(|u| {
                let r2 = &u[0] * &u[0] + &u[1] * &u[1];
                let inv = r2.add_scalar(1.0).recip()?;
                Ok(vec![
                    &u[0] * &inv * 2.0,
                    &u[1] * &inv * 2.0,
                    &r2.add_scalar(-1.0) * &inv,
                ])
            }),
        )
    }

    fn cylinder() -> ImmersionChart {
        ImmersionChart::new(
            "cylinder",
            2,
            3,
            Domain::cube(2, 1.0),
            10,
            chart_map(|u| Ok(vec![u[0].cos(), u[0].sin(), u[1].clone()])),
        )
    }

    fn plane_in_r5() -> ImmersionChart {
        ImmersionChart::new(
            "plane",
            2,
            5,
            Domain::cube(2, 1.0),
            10,
            chart_map(|u| {
                let z = crate::chart::constant_like(&u[0], 0.0);
                Ok(vec![
                    &u[0] + &u[1],
                    &u[0] - &u[1],
                    u[0].scale(0.5),
                    z.clone(),
                    z.add_scalar(1.0),
                ])
            }),
        )
    }

    #[test]
    fn sphere_is_umbilic() {
        let g = point_geometry(&sphere(), &[0.3, -0.2], 2, 1e-8).unwrap();
        assert_eq!(g.flag_dims(), vec![1, 0]);
        let p = sphere().value(&[0.3, -0.2]).unwrap();
        for a in 0..2 {
            let expect = -&p;
            assert_abs_diff_eq!((g.alpha.get(&[a, a]) - &expect).norm(), 0.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(g.alpha.get(&[0, 1]).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn plane_has_no_curvature() {
        let g = point_geometry(&plane_in_r5(), &[0.1, 0.4], 2, 1e-8).unwrap();
        assert!(g.alpha.values().iter().all(|v| v.amax() == 0.0));
        assert_eq!(g.flag_dims(), vec![0, 0]);
        let (_, nu) = relative_nullity(&g, 1e-8);
        assert_eq!(nu, 2);
    }

    #[test]
    fn cylinder_nullity_is_the_ruling() {
        let g = point_geometry(&cylinder(), &[0.4, 0.1], 2, 1e-8).unwrap();
        let (k, nu) = relative_nullity(&g, 1e-8);
        assert_eq!(nu, 1);
        let ruling = g.to_ambient(&k).vector(0);
        assert_abs_diff_eq!(ruling[2].abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sphere_nullities_and_ricci() {
        let g = point_geometry(&sphere(), &[-0.5, 0.25], 2, 1e-8).unwrap();
        assert_eq!(relative_nullity(&g, 1e-8).1, 0);
        let s1 = s_nullity(&g, 1, 4, 0).unwrap();
        assert_eq!(s1.lower_bound, 0);
        assert!(s_nullity(&g, 2, 4, 0).is_err());
        let x = DVector::from_column_slice(&[0.6, 0.8]);
        let ric = ricci(&g, &x);
        assert!(!ric.normalized);
        assert_abs_diff_eq!(ric.value, 1.0, epsilon = 1e-12);
        let doubled = ricci(&g, &(x * 2.0));
        assert!(doubled.normalized);
        assert_abs_diff_eq!(doubled.value, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sectional(&g, 0, 1), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn residuals_are_small_on_the_sphere() {
        let g = point_geometry(&sphere(), &[0.2, 0.7], 3, 1e-8).unwrap();
        let r = geometry_residuals(&g);
        assert!(r.alpha_tangent < 1e-12);
        assert!(r.alpha_symmetry < 1e-12);
        assert!(r.flag_orthogonality < 1e-10);
        assert!(r.first_normal_angle < 1e-8);
    }

    #[test]
    fn non_immersion_is_rejected() {
        let folded = ImmersionChart::new(
            "fold",
            2,
            3,
            Domain::cube(2, 1.0),
            6,
            chart_map(|u| Ok(vec![u[0].clone(), u[0].clone(), u[0].clone()])),
        );
        assert!(matches!(
            point_geometry(&folded, &[0.0, 0.0], 1, 1e-8),
            Err(GeomError::NotImmersion { rank: 1, dim: 2 })
        ));
    }

    #[test]
    fn frame_transform_matches_direct_contraction() {
        let g = point_geometry(&sphere(), &[0.1, 0.3], 2, 1e-8).unwrap();
        // α(e_0, e_1) computed by hand from coordinate partials
        let e0 = g.gauge.column(0).into_owned();
        let e1 = g.gauge.column(1).into_owned();
        let mut direct = DVector::zeros(3);
        for i in 0..2 {
            for j in 0..2 {
                direct.axpy(e0[i] * e1[j], g.derivs.partial(&[i, j]), 1.0);
            }
        }
        let direct = g.normal.proj(&direct);
        assert_abs_diff_eq!((direct - g.alpha.get(&[0, 1])).norm(), 0.0, epsilon = 1e-13);
    }
}
