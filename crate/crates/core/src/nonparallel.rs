//! The nonparallelism tensor `φ(μ, X) = (∇^⊥_X μ)_{N_1}` for `μ ⊥ N_1`, the
//! subbundle `𝒮` spanned by its values, the ruling distribution
//! `D = 𝒩(α_𝒮)`, and the case split driven by `s = rank 𝒮`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::chart::ImmersionChart;
use crate::error::{GeomError, Result};
use crate::frames::FrameField;
use crate::geometry::{point_geometry, relative_nullity, PointGeometry};
use crate::subspaces::{
    complement_within, kernel_of_scaled, max_angle, numerical_rank,
    span_of_scaled, Subspace,
};

/// `φ` tabulated on an orthonormal basis `μ_a` of `N_1^⊥` and the tangent frame `e_b`.
#[derive(Clone, Debug)]
pub struct PhiMatrix {
    /// Columns `μ_a`, ambient.
    pub mu_basis: DMatrix<f64>,
    /// `values[a][b] = φ(μ_a, e_b)` as ambient vectors in `N_1`.
    pub values: Vec<Vec<DVector<f64>>>,
    /// Relative least-squares residual of the defining linear system; zero for difference quotients.
    pub residual: f64,
    /// Size of the curvature data the values are judged against.
    pub scale: f64,
}

impl PhiMatrix {
    pub fn num_mu(&self) -> usize {
        self.values.len()
    }

    pub fn dim(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn all_values(&self) -> Vec<DVector<f64>> {
        self.values.iter().flatten().cloned().collect()
    }

    /// Matrix of `X ↦ (φ(μ_a, X))_a`, rows indexed by `(a, ambient coordinate)`.
    pub fn flattened(&self) -> DMatrix<f64> {
        let q = self.num_mu();
        let n = self.dim();
        let big_n = self.mu_basis.nrows();
        let mut m = DMatrix::zeros(q * big_n, n);
        for (a, row) in self.values.iter().enumerate() {
            for (b, v) in row.iter().enumerate() {
                m.view_mut((a * big_n, b), (big_n, 1)).copy_from(v);
            }
        }
        m
    }

    /// Largest entrywise distance between two tables on the same bases.
    pub fn distance(&self, other: &PhiMatrix) -> f64 {
        self.values
            .iter()
            .flatten()
            .zip(other.values.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// `φ` from the pointwise identity `⟨φ(μ,X), α(Y,Z)⟩ = −⟨μ, α³(X,Y,Z)⟩`.
///
/// `mu_basis` defaults to the stored basis of `N_1^⊥`.
pub fn phi_pairing(geom: &PointGeometry, mu_basis: Option<&DMatrix<f64>>) -> Result<PhiMatrix> {
    let alpha3 = geom
        .form(3)
        .ok_or_else(|| GeomError::Precondition("third fundamental form not computed".into()))?;
    let n1 = geom.first_normal();
    let n = geom.dim();
    let big_n = geom.ambient_dim();
    let p = n1.dim();
    let mu = match mu_basis {
        Some(m) => m.clone(),
        None => geom.first_normal_complement().basis().clone(),
    };
    let q = mu.ncols();
    let a3_scale = alpha3.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
    let scale = geom.scale.max(a3_scale);
    if q == 0 || p == 0 {
        return Ok(PhiMatrix {
            mu_basis: mu,
            values: vec![vec![DVector::zeros(big_n); n]; q],
            residual: 0.0,
            scale,
        });
    }

    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|b| (b..n).map(move |c| (b, c))).collect();
    let m = DMatrix::from_fn(pairs.len(), p, |r, i| {
        let (b, c) = pairs[r];
        n1.basis().column(i).dot(geom.alpha.get(&[b, c]))
    });
    let svd = crate::linalg::svd(&m)?;
    let sv = &svd.s;
    let rank = numerical_rank(sv, geom.tol, geom.scale);
    if rank < p {
        return Err(GeomError::Regularity {
            k: 1,
            low: rank,
            high: p,
        });
    }
    let mut values = Vec::with_capacity(q);
    let mut residual: f64 = 0.0;
    for a in 0..q {
        let mu_a = mu.column(a).into_owned();
        let mut row = Vec::with_capacity(n);
        for x in 0..n {
            let rhs = DVector::from_fn(pairs.len(), |r, _| {
                let (b, c) = pairs[r];
                -mu_a.dot(alpha3.get(&[x, b, c]))
            });
            let w = crate::linalg::lstsq(&svd, &rhs, f64::EPSILON);
            let err = (&m * &w - &rhs).norm();
            residual = residual.max(err / (rhs.norm() + sv[0] * w.norm() + f64::MIN_POSITIVE));
            row.push(n1.basis() * w);
        }
        values.push(row);
    }
    Ok(PhiMatrix {
        mu_basis: mu,
        values,
        residual,
        scale,
    })
}

fn n1_perp_selector<'a>() -> crate::frames::Selector<'a> {
    Box::new(|g: &PointGeometry| Ok(g.first_normal_complement()))
}

/// `φ` by differencing a projected frame of `N_1^⊥` along the chart.
///
/// Returns the table together with the geometry at `x`; the frame at `x` is
/// the `mu_basis`, so [`phi_pairing`] on the same basis is directly comparable.
pub fn phi_frame_fd(
    chart: &ImmersionChart,
    x: &[f64],
    h: f64,
    tol: f64,
) -> Result<(PhiMatrix, PointGeometry)> {
    let geom = point_geometry(chart, x, 2, tol)?;
    let field = FrameField::new(chart, x, 1, tol, n1_perp_selector())?;
    let mu = field.at(x)?;
    let n = geom.dim();
    let q = mu.ncols();
    let n1 = geom.first_normal();
    let along: Vec<DMatrix<f64>> = (0..n)
        .map(|b| {
            let dir: Vec<f64> = geom.gauge.column(b).iter().copied().collect();
            field.derivative(x, &dir, h, false)
        })
        .collect::<Result<_>>()?;
    let values = (0..q)
        .map(|a| {
            (0..n)
                .map(|b| n1.proj(&along[b].column(a).into_owned()))
                .collect()
        })
        .collect();
    let scale = phi_pairing(&geom, Some(&mu)).map_or(geom.scale, |p| p.scale);
    Ok((
        PhiMatrix {
            mu_basis: mu,
            values,
            residual: 0.0,
            scale,
        },
        geom,
    ))
}

/// Position of a point in the case split.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CaseLabel {
    /// `N_1^⊥ = 0` (or `N_1 = 0`): there is nothing for `φ` to act on.
    #[serde(rename = "absent")]
    Absent,
    /// `φ = 0`.
    #[serde(rename = "parallel")]
    Parallel,
    /// `s = p`.
    #[serde(rename = "case-i")]
    CaseI,
    /// `s = 1 < p`.
    #[serde(rename = "case-ii")]
    CaseII,
    /// `1 < s < p` and `k = p`.
    #[serde(rename = "case-iii-a")]
    CaseIIIA,
    /// `1 < s < p` and `k < p`.
    #[serde(rename = "case-iii-b")]
    CaseIIIB,
    /// `s ≥ n` or `s > 6`.
    #[serde(rename = "out-of-scope")]
    OutOfScope,
}

impl CaseLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseLabel::Absent => "absent",
            CaseLabel::Parallel => "parallel",
            CaseLabel::CaseI => "case-i",
            CaseLabel::CaseII => "case-ii",
            CaseLabel::CaseIIIA => "case-iii-a",
            CaseLabel::CaseIIIB => "case-iii-b",
            CaseLabel::OutOfScope => "out-of-scope",
        }
    }

    pub fn needs_extension_rank(self) -> bool {
        matches!(self, CaseLabel::CaseIIIA | CaseLabel::CaseIIIB)
    }
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `φ`, `𝒮`, `D` and the nullity data at one point.
#[derive(Clone, Debug)]
pub struct NonparallelData {
    pub n: usize,
    pub p: usize,
    /// `dim N_1^⊥`.
    pub q: usize,
    pub phi: PhiMatrix,
    /// `𝒮(x)`, ambient.
    pub s_space: Subspace,
    pub s: usize,
    /// `D = 𝒩(α_𝒮)` in frame coordinates.
    pub d_space: Subspace,
    /// `𝒩(φ)` in frame coordinates.
    pub phi_kernel: Subspace,
    /// Largest principal angle between `𝒩(φ)` and `D` (infinite when dimensions differ).
    pub kernel_angle: f64,
    /// Relative nullity `ν^f`.
    pub nu: usize,
    /// Residual of `𝒮 ⊂ N_1`.
    pub containment: f64,
}

impl NonparallelData {
    pub fn d(&self) -> usize {
        self.d_space.dim()
    }

    /// `dim D ≥ n − s`; meaningful for `s ≤ 6`.
    pub fn ruling_bound_holds(&self) -> bool {
        self.d() + self.s >= self.n
    }

    /// `L = 𝒮^⊥ ∩ N_1`, ambient.
    pub fn default_l(&self, geom: &PointGeometry) -> Result<Subspace> {
        complement_within(&self.s_space, &geom.first_normal())
    }
}

/// Assembles [`NonparallelData`] from a `φ` table.
pub fn nonparallel_data(geom: &PointGeometry, phi: PhiMatrix, tol: f64) -> Result<NonparallelData> {
    let n1 = geom.first_normal();
    let s_space = span_of_scaled(&phi.all_values(), geom.ambient_dim(), tol, phi.scale)?;
    let s = s_space.dim();
    let containment = s_space.containment_residual(&n1);
    let d_space = geom.nullity_of_projection(&s_space, tol);
    let phi_kernel = kernel_of_scaled(&phi.flattened(), tol, phi.scale);
    let kernel_angle = max_angle(&phi_kernel, &d_space);
    let (_, nu) = relative_nullity(geom, tol);
    Ok(NonparallelData {
        n: geom.dim(),
        p: n1.dim(),
        q: phi.num_mu(),
        phi,
        s_space,
        s,
        d_space,
        phi_kernel,
        kernel_angle,
        nu,
        containment,
    })
}

/// Geometry and nonparallel data at `x` with `φ` from the pairing identity.
pub fn nonparallel_at(
    chart: &ImmersionChart,
    x: &[f64],
    tol: f64,
) -> Result<(PointGeometry, NonparallelData)> {
    let geom = point_geometry(chart, x, 2, tol)?;
    let phi = phi_pairing(&geom, None)?;
    let nd = nonparallel_data(&geom, phi, tol)?;
    Ok((geom, nd))
}

/// A consequence of the case split that was checked at a point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckedClaim {
    pub claim: String,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Classification {
    pub label: CaseLabel,
    pub claims: Vec<CheckedClaim>,
}

impl Classification {
    pub fn violations(&self) -> impl Iterator<Item = &CheckedClaim> {
        self.claims.iter().filter(|c| !c.passed)
    }
}

/// Places a point in the case split and checks the consequences that can be
/// decided pointwise. `k = dim Γ` is required in the `1 < s < p` regime.
pub fn classify_case(nd: &NonparallelData, k: Option<usize>) -> Result<Classification> {
    let (n, p, s) = (nd.n, nd.p, nd.s);
    let mut claims = Vec::new();
    let mut claim = |text: String, passed: bool| claims.push(CheckedClaim { claim: text, passed });
    let label = if p == 0 || nd.q == 0 {
        CaseLabel::Absent
    } else if s == 0 {
        CaseLabel::Parallel
    } else if s >= n || s > 6 {
        CaseLabel::OutOfScope
    } else {
        claim(
            format!("dim D = {} >= n - s = {}", nd.d(), n - s),
            nd.ruling_bound_holds(),
        );
        if s == p {
            claim(format!("nu = {} >= n - p = {}", nd.nu, n.saturating_sub(p)), nd.nu + p >= n);
            CaseLabel::CaseI
        } else if s == 1 {
            CaseLabel::CaseII
        } else {
            let k = k.ok_or_else(|| {
                GeomError::Precondition("dim Γ is needed to split the 1 < s < p case".into())
            })?;
            if s == 2 {
                claim(format!("k = {k} is not 5 or 6 when s = 2"), k != 5 && k != 6);
            }
            if k == p {
                CaseLabel::CaseIIIA
            } else {
                CaseLabel::CaseIIIB
            }
        }
    };
    Ok(Classification { label, claims })
}

/// `max ‖A_{∇^⊥_X δ} Y − A_{∇^⊥_Y δ} X‖` over frame vectors and a difference
/// frame `δ` of `N_1^⊥`, with Richardson-extrapolated derivatives.
pub fn codazzi_residual(chart: &ImmersionChart, x: &[f64], h: f64, tol: f64) -> Result<f64> {
    let geom = point_geometry(chart, x, 1, tol)?;
    let field = FrameField::new(chart, x, 1, tol, n1_perp_selector())?;
    let n = geom.dim();
    let along: Vec<DMatrix<f64>> = (0..n)
        .map(|b| {
            let dir: Vec<f64> = geom.gauge.column(b).iter().copied().collect();
            field.derivative(x, &dir, h, true)
        })
        .collect::<Result<_>>()?;
    let shape = |nu: &DVector<f64>, y: usize| -> DVector<f64> {
        DVector::from_fn(n, |c, _| geom.alpha.get(&[y, c]).dot(nu))
    };
    let mut worst: f64 = 0.0;
    for a in 0..field.dim() {
        let conn: Vec<DVector<f64>> = along
            .iter()
            .map(|d| geom.normal.proj(&d.column(a).into_owned()))
            .collect();
        for xb in 0..n {
            for yb in xb + 1..n {
                let r = shape(&conn[xb], yb) - shape(&conn[yb], xb);
                worst = worst.max(r.norm());
            }
        }
    }
    Ok(worst)
}

/// `P = 𝒮 ⊕ N_1^⊥` from the geometry at a point.
pub fn default_p(geom: &PointGeometry, tol: f64) -> Result<Subspace> {
    let phi = phi_pairing(geom, None)?;
    let nd = nonparallel_data(geom, phi, tol)?;
    let l = nd.default_l(geom)?;
    complement_within(&l, &geom.normal)
}

/// Chart directions of the unit frame vectors of a tangent subspace given in frame coordinates.
pub fn chart_directions(geom: &PointGeometry, s: &Subspace) -> Vec<Vec<f64>> {
    s.vectors()
        .iter()
        .map(|c| geom.chart_direction(c).iter().copied().collect())
        .collect()
}

/// Largest `L`-component of `∇^⊥_Y μ` for `Y ∈ D` and `μ` in a difference
/// frame of `P = 𝒮 ⊕ N_1^⊥`, with `L = 𝒮^⊥ ∩ N_1`.
pub fn p_parallel_along_d(chart: &ImmersionChart, x: &[f64], h: f64, tol: f64) -> Result<f64> {
    let (geom, nd) = nonparallel_at(chart, x, tol)?;
    let l = nd.default_l(&geom)?;
    if l.dim() == 0 || nd.d() == 0 {
        return Ok(0.0);
    }
    let field = FrameField::new(chart, x, 2, tol, Box::new(move |g| default_p(g, tol)))?;
    let mut worst: f64 = 0.0;
    for dir in chart_directions(&geom, &nd.d_space) {
        let d = field.derivative(x, &dir, h, false)?;
        for a in 0..d.ncols() {
            worst = worst.max(l.proj(&d.column(a).into_owned()).norm());
        }
    }
    Ok(worst)
}

/// Projector onto `𝒮` at `y`.
pub fn s_projector(chart: &ImmersionChart, y: &[f64], tol: f64) -> Result<(usize, DMatrix<f64>)> {
    let (_, nd) = nonparallel_at(chart, y, tol)?;
    Ok((nd.s, nd.s_space.projector()))
}

/// Largest Frobenius norm of the central difference of the `𝒮`-projector
/// along the given chart directions.
pub fn s_drift(
    chart: &ImmersionChart,
    x: &[f64],
    dirs: &[Vec<f64>],
    h: f64,
    tol: f64,
) -> Result<f64> {
    let (s0, _) = s_projector(chart, x, tol)?;
    let g = |y: &[f64]| -> Result<DMatrix<f64>> {
        let (s, m) = s_projector(chart, y, tol)?;
        if s != s0 {
            return Err(GeomError::NumericalRank(format!(
                "rank of S changes from {s0} to {s} on the stencil"
            )));
        }
        Ok(m)
    };
    let mut worst: f64 = 0.0;
    for dir in dirs {
        worst = worst.max(crate::frames::central_diff(&g, x, dir, h)?.norm());
    }
    Ok(worst)
}
