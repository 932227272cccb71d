//! Ruled extensions. From a normal splitting `N_f M = L ⊕ P` with
//! `D = 𝒩(α_P)` and `TM = D ⊕ E`, the tensor
//! `γ(Y, μ) = −A_μ Y + (∇^⊥_Y μ)_L` spans `Γ ⊂ E ⊕ L`; its complement `Λ`
//! gives the rulings `Δ = D ⊕ Λ` of the extension `F(x, λ) = f(x) + Σ λ_a Λ_a(x)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chart::ImmersionChart;
use crate::error::{GeomError, Result};
use crate::frames::{coordinate, richardson_diff, central_diff, FrameField, PivotedFrame};
use crate::geometry::{point_geometry, PointGeometry};
use crate::nonparallel::{nonparallel_data, phi_pairing, NonparallelData};
use crate::subspaces::{
    complement_within, kernel_of_scaled, max_angle, numerical_rank, orthonormalize_columns,
    principal_angles, singular_values, span_of, span_of_scaled, Subspace,
};

/// Chooses `L` at a point.
pub type LChoice = Arc<dyn Fn(&PointGeometry, &NonparallelData) -> Result<Subspace> + Send + Sync>;

/// How `L ⊂ N_f M` is picked at each point.
#[derive(Clone)]
pub enum LRule {
    /// `L = 𝒮^⊥ ∩ N_1`, so that `P = 𝒮 ⊕ N_1^⊥`.
    Default,
    Custom(LChoice),
}

/// The data needed to split the normal bundle along a chart.
#[derive(Clone)]
pub struct SplittingSpec {
    pub chart: ImmersionChart,
    pub rule: LRule,
    pub tol: f64,
    /// Step for differentiating frames.
    pub h: f64,
}

/// The splitting at one point.
#[derive(Clone, Debug)]
pub struct Splitting {
    pub geom: PointGeometry,
    pub nd: NonparallelData,
    /// Ambient.
    pub l: Subspace,
    /// Ambient.
    pub p: Subspace,
    /// `𝒩(α_P)` in frame coordinates.
    pub d: Subspace,
    /// `D^⊥` in frame coordinates.
    pub e: Subspace,
}

impl Splitting {
    pub fn ell(&self) -> usize {
        self.l.dim()
    }

    /// Largest `|⟨l, p⟩|` and the dimension defect of `L ⊕ P` against the normal space.
    pub fn orthogonality(&self) -> f64 {
        if self.l.dim() == 0 || self.p.dim() == 0 {
            return 0.0;
        }
        (self.l.basis().transpose() * self.p.basis()).amax()
    }
}

impl SplittingSpec {
    pub fn new(chart: ImmersionChart, tol: f64, h: f64) -> Self {
        Self {
            chart,
            rule: LRule::Default,
            tol,
            h,
        }
    }

    pub fn with_rule(mut self, rule: LRule) -> Self {
        self.rule = rule;
        self
    }

    fn choose_l(&self, geom: &PointGeometry, nd: &NonparallelData) -> Result<Subspace> {
        match &self.rule {
            LRule::Default => nd.default_l(geom),
            LRule::Custom(f) => f(geom, nd),
        }
    }

    /// `P = L^⊥` inside the normal space at the given geometry.
    pub fn p_of(&self, geom: &PointGeometry) -> Result<Subspace> {
        let phi = phi_pairing(geom, None)?;
        let nd = nonparallel_data(geom, phi, self.tol)?;
        let l = self.choose_l(geom, &nd)?;
        complement_within(&l, &geom.normal)
    }

    /// Splits the normal space at `x`.
    pub fn at(&self, x: &[f64]) -> Result<Splitting> {
        let geom = point_geometry(&self.chart, x, 2, self.tol)?;
        let phi = phi_pairing(&geom, None)?;
        let nd = nonparallel_data(&geom, phi, self.tol)?;
        let l = self.choose_l(&geom, &nd)?;
        let big_n = geom.ambient_dim();
        let n = geom.dim();
        if l.dim() == 0 || l.dim() >= big_n - n {
            return Err(GeomError::Precondition(format!(
                "L must satisfy 0 < dim L < N - n, got {}",
                l.dim()
            )));
        }
        let p = complement_within(&l, &geom.normal)?;
        let d = geom.nullity_of_projection(&p, self.tol);
        let e = d.orthogonal_complement();
        Ok(Splitting {
            geom,
            nd,
            l,
            p,
            d,
            e,
        })
    }

    fn p_field(&self, x: &[f64]) -> Result<FrameField<'_>> {
        let me = self.clone();
        FrameField::new(&self.chart, x, 2, self.tol, Box::new(move |g| me.p_of(g)))
    }
}

/// `γ` on bases of `E` and `P`, its span `Γ` and `k = dim Γ`.
#[derive(Clone, Debug)]
pub struct GammaData {
    pub split: Splitting,
    /// `values[y][a] = γ(E_y, μ_a)`, ambient.
    pub values: Vec<Vec<DVector<f64>>>,
    pub gamma: Subspace,
    pub k: usize,
    /// Residual of `Γ ⊂ E ⊕ L`.
    pub containment: f64,
}

impl GammaData {
    /// `E ⊕ L`, ambient.
    pub fn e_plus_l(&self) -> Subspace {
        let geom = &self.split.geom;
        let mut cols = geom.to_ambient(&self.split.e).vectors();
        cols.extend(self.split.l.vectors());
        let b = DMatrix::from_fn(geom.ambient_dim(), cols.len(), |r, c| cols[c][r]);
        Subspace::from_orthonormal(orthonormalize_columns(&b), self.split.geom.tol)
            .expect("E and L are orthogonal")
    }

    /// `n − d ≤ k ≤ n − d + ℓ`.
    pub fn band(&self) -> (usize, usize) {
        let n = self.split.geom.dim();
        let d = self.split.d.dim();
        (n - d, n - d + self.split.ell())
    }
}

/// Computes `γ` and `Γ` at `x`; `(∇^⊥_Y μ)_L` comes from Richardson
/// differences of a pivoted frame of `P`.
pub fn gamma_tensor(spec: &SplittingSpec, x: &[f64]) -> Result<GammaData> {
    let split = spec.at(x)?;
    let geom = &split.geom;
    let n = geom.dim();
    let field = spec.p_field(x)?;
    let mu = field.at(x)?;
    let mut values = Vec::new();
    for y in split.e.vectors() {
        let dir: Vec<f64> = geom.chart_direction(&y).iter().copied().collect();
        let dmu = field.derivative(x, &dir, spec.h, true)?;
        let mut row = Vec::with_capacity(mu.ncols());
        for a in 0..mu.ncols() {
            let mu_a = mu.column(a).into_owned();
            let shape = DVector::from_fn(n, |c, _| geom.alpha.eval(&[&y, &unit(n, c)]).dot(&mu_a));
            let tangential = -(&geom.frame * shape);
            row.push(tangential + split.l.proj(&dmu.column(a).into_owned()));
        }
        values.push(row);
    }
    let flat: Vec<DVector<f64>> = values.iter().flatten().cloned().collect();
    let scale = flat.iter().map(|v| v.norm()).fold(geom.scale, f64::max);
    let gamma = span_of_scaled(&flat, geom.ambient_dim(), spec.tol, scale)?;
    let k = gamma.dim();
    let mut data = GammaData {
        split,
        values,
        gamma,
        k,
        containment: 0.0,
    };
    data.containment = data.gamma.containment_residual(&data.e_plus_l());
    let (lo, hi) = data.band();
    if k < lo || k > hi {
        return Err(GeomError::NumericalRank(format!(
            "dim Γ = {k} outside [{lo}, {hi}]"
        )));
    }
    Ok(data)
}

fn unit(n: usize, i: usize) -> DVector<f64> {
    DVector::from_column_slice(&coordinate(n, i))
}

/// `Λ = (E ⊕ L) ⊖ Γ` and `Δ = D ⊕ Λ`.
#[derive(Clone, Debug)]
pub struct LambdaDelta {
    pub lambda: Subspace,
    pub delta: Subspace,
    pub r: usize,
    /// Smallest principal angle between `Λ` and the tangent space (`π/2` when `Λ = 0`).
    pub transversality: f64,
}

pub fn lambda_delta(gd: &GammaData) -> Result<LambdaDelta> {
    let geom = &gd.split.geom;
    let lambda = complement_within(&gd.gamma, &gd.e_plus_l())?;
    let r = lambda.dim();
    let mut cols = geom.to_ambient(&gd.split.d).vectors();
    cols.extend(lambda.vectors());
    let delta = span_of(&cols, geom.ambient_dim(), geom.tol)?;
    let transversality = if r == 0 {
        std::f64::consts::FRAC_PI_2
    } else {
        principal_angles(&lambda, &geom.tangent)?
            .first()
            .copied()
            .unwrap_or(std::f64::consts::FRAC_PI_2)
    };
    Ok(LambdaDelta {
        lambda,
        delta,
        r,
        transversality,
    })
}

/// The immersion `F(x, λ) = f(x) + Σ λ_a Λ_a(x)` on `U × [-ρ, ρ]^r`.
#[derive(Clone)]
pub struct RuledExtension {
    pub spec: SplittingSpec,
    pub r: usize,
    pub k: usize,
    pub ell: usize,
    pub d: usize,
    pub radius: f64,
    pivots: Option<PivotedFrame>,
}

impl std::fmt::Debug for RuledExtension {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RuledExtension")
            .field("chart", &self.spec.chart.name())
            .field("r", &self.r)
            .field("k", &self.k)
            .field("ell", &self.ell)
            .field("d", &self.d)
            .field("radius", &self.radius)
            .finish()
    }
}

impl RuledExtension {
    pub fn is_trivial(&self) -> bool {
        self.r == 0
    }

    pub fn dim(&self) -> usize {
        self.spec.chart.dim() + self.r
    }

    /// Orthonormal frame of `Λ(x)` with the pivots fixed at construction.
    pub fn lambda_frame(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let big_n = self.spec.chart.ambient_dim();
        let Some(piv) = &self.pivots else {
            return Ok(DMatrix::zeros(big_n, 0));
        };
        let gd = gamma_tensor(&self.spec, x)?;
        let ld = lambda_delta(&gd)?;
        piv.at(&ld.lambda)
    }

    fn check_lambda(&self, lambda: &[f64]) -> Result<()> {
        if lambda.len() != self.r {
            return Err(GeomError::Shape(format!(
                "expected {} fiber coordinates, got {}",
                self.r,
                lambda.len()
            )));
        }
        Ok(())
    }

    /// `F(x, λ)`.
    pub fn eval(&self, x: &[f64], lambda: &[f64]) -> Result<DVector<f64>> {
        self.check_lambda(lambda)?;
        let mut v = self.spec.chart.value(x)?;
        if self.r > 0 {
            let frame = self.lambda_frame(x)?;
            v += frame * DVector::from_column_slice(lambda);
        }
        Ok(v)
    }

    /// `∂_i Λ_a` along every chart coordinate, by Richardson differences.
    pub fn lambda_derivatives(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        let n = self.spec.chart.dim();
        let g = |y: &[f64]| self.lambda_frame(y);
        (0..n)
            .map(|i| richardson_diff(&g, x, &coordinate(n, i), self.spec.h))
            .collect()
    }

    /// Jacobian of `F` in the coordinates `(x, λ)`.
    pub fn jacobian(&self, x: &[f64], lambda: &[f64]) -> Result<DMatrix<f64>> {
        self.check_lambda(lambda)?;
        let d = self.spec.chart.eval_jet(x, 1)?;
        let n = self.spec.chart.dim();
        let big_n = self.spec.chart.ambient_dim();
        let mut jac = DMatrix::zeros(big_n, n + self.r);
        for i in 0..n {
            jac.set_column(i, d.partial(&[i]));
        }
        if self.r > 0 {
            let lam = DVector::from_column_slice(lambda);
            let dl = self.lambda_derivatives(x)?;
            for (i, di) in dl.iter().enumerate() {
                let col = jac.column(i) + di * &lam;
                jac.set_column(i, &col);
            }
            let frame = self.lambda_frame(x)?;
            for a in 0..self.r {
                jac.set_column(n + a, &frame.column(a));
            }
        }
        Ok(jac)
    }

    fn rank_ok(&self, x: &[f64], lambda: &[f64]) -> Result<bool> {
        let jac = self.jacobian(x, lambda)?;
        let sv = singular_values(&jac);
        Ok(numerical_rank(&sv, self.spec.tol, 0.0) == self.dim())
    }
}

/// Fiber probe points for a radius: the axis endpoints and the two diagonal corners.
fn fiber_probes(r: usize, radius: f64) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for a in 0..r {
        for sign in [-1.0, 1.0] {
            let mut v = vec![0.0; r];
            v[a] = sign * radius;
            out.push(v);
        }
    }
    if r > 1 {
        for sign in [-1.0, 1.0] {
            out.push(vec![sign * radius / (r as f64).sqrt(); r]);
        }
    }
    out
}

/// Builds the extension seeded at `x0`, halving `radius` until `F` is an
/// immersion at every fiber probe over `probe_points`.
pub fn build_extension(
    spec: &SplittingSpec,
    x0: &[f64],
    probe_points: &[Vec<f64>],
    radius: f64,
) -> Result<RuledExtension> {
    let gd = gamma_tensor(spec, x0)?;
    let ld = lambda_delta(&gd)?;
    let pivots = if ld.r > 0 {
        Some(PivotedFrame::standard(spec.chart.ambient_dim(), &ld.lambda)?)
    } else {
        None
    };
    let mut ext = RuledExtension {
        spec: spec.clone(),
        r: ld.r,
        k: gd.k,
        ell: gd.split.ell(),
        d: gd.split.d.dim(),
        radius: if ld.r == 0 { 0.0 } else { radius },
        pivots,
    };
    if ext.r == 0 {
        return Ok(ext);
    }
    let mut rho = radius;
    loop {
        let mut ok = true;
        'probe: for x in probe_points {
            for lam in fiber_probes(ext.r, rho) {
                if !ext.rank_ok(x, &lam)? {
                    ok = false;
                    break 'probe;
                }
            }
        }
        if ok {
            ext.radius = rho;
            return Ok(ext);
        }
        rho *= 0.5;
        if rho < 1e-6 {
            return Err(GeomError::DegenerateExtension { radius: rho });
        }
    }
}

/// Data of `F` along the zero section at one base point.
#[derive(Clone, Debug)]
pub struct ZeroSection {
    /// Columns `∂_i f` then `Λ_a`.
    pub tangent: DMatrix<f64>,
    /// `second[i][j] = ∂_i ∂_j F` at `λ = 0`.
    pub second: Vec<Vec<DVector<f64>>>,
    pub lambda: Subspace,
    pub p: Subspace,
    pub d_ambient: Subspace,
    pub scale: f64,
}

impl ZeroSection {
    pub fn tangent_space(&self) -> Result<Subspace> {
        span_of(
            &(0..self.tangent.ncols())
                .map(|j| self.tangent.column(j).into_owned())
                .collect::<Vec<_>>(),
            self.tangent.nrows(),
            1e-10,
        )
    }

    /// `𝒩(α^F_U)` for `U` normal to `F`, as an ambient subspace of `T F`.
    pub fn nullity(&self, u: &Subspace, tol: f64) -> Result<Subspace> {
        let m = self.second.len();
        let k = u.dim();
        let mut map = DMatrix::zeros(m * k, m);
        for a in 0..m {
            for (b, v) in self.second[a].iter().enumerate() {
                let c = u.basis().transpose() * v;
                for i in 0..k {
                    map[(b * k + i, a)] = c[i];
                }
            }
        }
        let ker = kernel_of_scaled(&map, tol, self.scale);
        let amb = &self.tangent * ker.basis();
        if amb.ncols() == 0 {
            return Ok(Subspace::zero(self.tangent.nrows()));
        }
        Subspace::from_orthonormal(orthonormalize_columns(&amb), tol)
    }
}

impl RuledExtension {
    /// Tangent data and second derivatives of `F` on the zero section over `x`.
    pub fn zero_section(&self, x: &[f64]) -> Result<ZeroSection> {
        let n = self.spec.chart.dim();
        let split = self.spec.at(x)?;
        let geom = &split.geom;
        let frame = self.lambda_frame(x)?;
        let dl = if self.r > 0 {
            self.lambda_derivatives(x)?
        } else {
            Vec::new()
        };
        let m = n + self.r;
        let big_n = geom.ambient_dim();
        let mut tangent = DMatrix::zeros(big_n, m);
        for i in 0..n {
            tangent.set_column(i, geom.derivs.partial(&[i]));
        }
        for a in 0..self.r {
            tangent.set_column(n + a, &frame.column(a));
        }
        let mut second = vec![vec![DVector::zeros(big_n); m]; m];
        for i in 0..n {
            for j in 0..n {
                second[i][j] = geom.derivs.partial(&[i, j]).clone();
            }
            for a in 0..self.r {
                let v = dl[i].column(a).into_owned();
                second[i][n + a] = v.clone();
                second[n + a][i] = v;
            }
        }
        let scale = second.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
        let lambda = if self.r > 0 {
            Subspace::from_orthonormal(frame, self.spec.tol)?
        } else {
            Subspace::zero(big_n)
        };
        Ok(ZeroSection {
            tangent,
            second,
            lambda,
            p: split.p.clone(),
            d_ambient: geom.to_ambient(&split.d),
            scale,
        })
    }
}

/// Residuals of the advertised properties of an extension at one base point.
#[derive(Clone, Debug, Default, Serialize, PartialEq)]
pub struct ExtensionCheck {
    pub x: Vec<f64>,
    pub k: usize,
    pub r: usize,
    pub ell: usize,
    pub d: usize,
    /// `‖F(x, 0) − f(x)‖`.
    pub roundtrip: f64,
    /// Second difference of `F` along a fiber direction.
    pub fiber_affinity: f64,
    /// Component of `α(D, D)` outside `TM ⊕ Λ`, relative to the curvature scale.
    pub d_straightness: f64,
    /// Tangential component of `P` for `F`.
    pub p_normal: f64,
    /// Largest principal angle between `Δ` and `𝒩(α^F_𝒫)`.
    pub delta_angle: f64,
    pub delta_dim: usize,
    pub nullity_dim: usize,
    /// Component of `[X_a, X_b]` outside `D` for a frame of `D`.
    pub integrability: f64,
    /// Derivative of the `P`-projector along `D`.
    pub p_drift: f64,
    /// Smallest angle between `Λ` and `TM`.
    pub transversality: f64,
    /// `dim N_F ⊖ P`, expected `ℓ − r`.
    pub l_rank: usize,
    /// Relative nullity of `F` on the zero section.
    pub nu_f: usize,
    /// `dim N_1^F` on the zero section.
    pub p_f: usize,
}

/// Checks an extension at `x`.
pub fn verify_extension_at(ext: &RuledExtension, x: &[f64], seed: u64) -> Result<ExtensionCheck> {
    let tol = ext.spec.tol;
    let h = ext.spec.h;
    let chart = &ext.spec.chart;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zs = ext.zero_section(x)?;
    let gd = gamma_tensor(&ext.spec, x)?;
    let ld = lambda_delta(&gd)?;
    let geom = &gd.split.geom;
    let big_n = geom.ambient_dim();

    let roundtrip = (ext.eval(x, &vec![0.0; ext.r])? - chart.value(x)?).norm();

    let fiber_affinity = if ext.r > 0 {
        let dir: Vec<f64> = (0..ext.r).map(|_| rng.random_range(-1.0..1.0)).collect();
        let at = |t: f64| -> Result<DVector<f64>> {
            let lam: Vec<f64> = dir.iter().map(|d| d * t * ext.radius).collect();
            ext.eval(x, &lam)
        };
        let (a, b, c) = (at(-1.0)?, at(0.0)?, at(1.0)?);
        (a - b * 2.0 + c).norm()
    } else {
        0.0
    };

    let tf = zs.tangent_space()?;
    let d_frame = geom.to_ambient(&gd.split.d);
    let d_vecs = gd.split.d.vectors();
    let mut d_straightness: f64 = 0.0;
    for y in &d_vecs {
        for z in &d_vecs {
            let v = geom.alpha.eval(&[y, z]);
            d_straightness = d_straightness.max(tf.reject(&v).norm() / geom.scale.max(1e-300));
        }
    }

    let p_normal = if zs.p.dim() > 0 {
        (tf.basis().transpose() * zs.p.basis()).amax()
    } else {
        0.0
    };

    let nullity = zs.nullity(&zs.p, tol)?;
    let delta_angle = max_angle(&nullity, &ld.delta);

    let normal_f = tf.orthogonal_complement();
    let l_rank = normal_f.dim().saturating_sub(zs.p.dim());
    let nu_f = zs.nullity(&normal_f, tol)?.dim();
    let alpha_f: Vec<DVector<f64>> = zs
        .second
        .iter()
        .flatten()
        .map(|v| normal_f.proj(v))
        .collect();
    let p_f = span_of_scaled(&alpha_f, big_n, tol, zs.scale)?.dim();

    let integrability = d_integrability(ext, x, &d_frame)?;

    let p_drift = {
        let spec = &ext.spec;
        let proj = |y: &[f64]| -> Result<DMatrix<f64>> {
            let g = point_geometry(chart, y, 2, tol)?;
            Ok(spec.p_of(&g)?.projector())
        };
        let mut worst: f64 = 0.0;
        for y in &d_vecs {
            let dir: Vec<f64> = geom.chart_direction(y).iter().copied().collect();
            worst = worst.max(richardson_diff(&proj, x, &dir, h)?.norm());
        }
        worst
    };

    Ok(ExtensionCheck {
        x: x.to_vec(),
        k: gd.k,
        r: ld.r,
        ell: gd.split.ell(),
        d: gd.split.d.dim(),
        roundtrip,
        fiber_affinity,
        d_straightness,
        p_normal,
        delta_angle,
        delta_dim: ld.delta.dim(),
        nullity_dim: nullity.dim(),
        integrability,
        p_drift,
        transversality: ld.transversality,
        l_rank,
        nu_f,
        p_f,
    })
}

/// Largest component of `[X_a, X_b]` outside `D(x)`, for chart vector fields
/// `X_a` whose images form a pivoted frame of `D`.
fn d_integrability(ext: &RuledExtension, x: &[f64], d_at_x: &Subspace) -> Result<f64> {
    let d = d_at_x.dim();
    if d < 2 {
        return Ok(0.0);
    }
    let spec = &ext.spec;
    let chart = &spec.chart;
    let pivots = PivotedFrame::standard(chart.ambient_dim(), d_at_x)?;
    let fields = |y: &[f64]| -> Result<DMatrix<f64>> {
        let split = spec.at(y)?;
        let g = &split.geom;
        let v = pivots.at(&g.to_ambient(&split.d))?;
        Ok(&g.gauge * (g.frame.transpose() * v))
    };
    let w = fields(x)?;
    let jac = point_geometry(chart, x, 1, spec.tol)?.jacobian;
    let derivs: Vec<DMatrix<f64>> = (0..d)
        .map(|a| {
            let dir: Vec<f64> = w.column(a).iter().copied().collect();
            richardson_diff(&fields, x, &dir, spec.h)
        })
        .collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for a in 0..d {
        for b in a + 1..d {
            let bracket = derivs[a].column(b) - derivs[b].column(a);
            let amb = &jac * bracket;
            worst = worst.max(d_at_x.reject(&amb).norm());
        }
    }
    Ok(worst)
}

/// Plain central-difference derivative of the `P`-projector along `dir`, for drift studies.
pub fn p_projector_difference(spec: &SplittingSpec, x: &[f64], dir: &[f64], h: f64) -> Result<f64> {
    let proj = |y: &[f64]| -> Result<DMatrix<f64>> {
        let g = point_geometry(&spec.chart, y, 2, spec.tol)?;
        Ok(spec.p_of(&g)?.projector())
    };
    Ok(central_diff(&proj, x, dir, h)?.norm())
}
