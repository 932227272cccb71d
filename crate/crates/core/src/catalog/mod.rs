//! Exactly constructed example submanifolds with declared invariants.
//!
//! Every entry carries a chart, a sampler for its regular region and the
//! values the verification pipeline is expected to reproduce.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chart::ImmersionChart;
use crate::error::{GeomError, Result};
use crate::nonparallel::CaseLabel;

mod calibration;
mod curve;
mod helix;
mod holomorphic;
mod section;

pub use calibration::{flat, sphere, torus};
pub use curve::{curve_parallel, CurveData};
pub use helix::helix_product;
pub use holomorphic::{holomorphic_curve, holomorphic_map};
pub use section::section4_ruled;

/// Where a declared value comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Basis {
    /// Null-hypothesis chart whose invariants are elementary.
    Calibration,
    /// Hand computation from the closed form of the chart.
    ClosedForm,
    /// Consequence of the structure theorem for the construction.
    Theorem,
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::Calibration => "calibration",
            Basis::ClosedForm => "closed form",
            Basis::Theorem => "theorem",
        })
    }
}

/// Which tangent directions an entry is ruled along, if any.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rulings {
    None,
    /// The distribution `D = 𝒩(α_𝒮)` carries the rulings.
    D,
    /// The relative nullity carries the rulings.
    Nullity,
}

/// Data expected of the ruled extension built at regular points.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtensionExpect {
    pub m: usize,
    pub p_f: usize,
    pub nu_f_min: usize,
}

/// Invariants declared for an entry. `None` means "not asserted".
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Expected {
    pub n: usize,
    pub ambient: usize,
    pub p: Option<usize>,
    pub s: Option<usize>,
    pub d: Option<usize>,
    pub nu: Option<usize>,
    pub ell: Option<usize>,
    pub k: Option<usize>,
    pub r: Option<usize>,
    pub case: CaseLabel,
    /// `dim N_1, dim N_2, ...` up to the order listed.
    pub flag_dims: Option<Vec<usize>>,
    pub flat: bool,
    pub ricci: Option<f64>,
    pub rulings: Rulings,
    pub extension: Option<ExtensionExpect>,
    pub basis: Basis,
}

impl Expected {
    pub fn new(n: usize, ambient: usize, case: CaseLabel, basis: Basis) -> Self {
        Self {
            n,
            ambient,
            p: None,
            s: None,
            d: None,
            nu: None,
            ell: None,
            k: None,
            r: None,
            case,
            flag_dims: None,
            flat: false,
            ricci: None,
            rulings: Rulings::None,
            extension: None,
            basis,
        }
    }

    /// Normal flag orders the pipeline must compute to check these values.
    pub fn normal_order(&self) -> usize {
        self.flag_dims.as_ref().map_or(2, |f| f.len().max(2))
    }

    /// Human-readable `name = value` lines.
    pub fn claims(&self) -> Vec<String> {
        let mut out = vec![format!("n = {}", self.n), format!("N = {}", self.ambient)];
        let opt = |out: &mut Vec<String>, name: &str, v: Option<usize>| {
            if let Some(v) = v {
                out.push(format!("{name} = {v}"));
            }
        };
        opt(&mut out, "p", self.p);
        opt(&mut out, "s", self.s);
        opt(&mut out, "dim D", self.d);
        opt(&mut out, "nu", self.nu);
        opt(&mut out, "ell", self.ell);
        opt(&mut out, "k", self.k);
        opt(&mut out, "r", self.r);
        out.push(format!("case = {}", self.case));
        if let Some(f) = &self.flag_dims {
            out.push(format!("normal flag = {f:?}"));
        }
        if self.flat {
            out.push("flat metric".into());
        }
        if let Some(r) = self.ricci {
            out.push(format!("Ric = {r}"));
        }
        match self.rulings {
            Rulings::None => {}
            Rulings::D => out.push("ruled along D, rulings outside the relative nullity".into()),
            Rulings::Nullity => out.push("ruled along the relative nullity".into()),
        }
        if let Some(e) = &self.extension {
            out.push(format!(
                "extension: m = {}, rank N_1 = {}, nu >= {}",
                e.m, e.p_f, e.nu_f_min
            ));
        }
        out
    }
}

/// Numerical settings an entry-specific check may need.
#[derive(Clone, Copy, Debug)]
pub struct CheckParams {
    pub tol: f64,
    pub h: f64,
}

pub type PointCheck = Arc<dyn Fn(&[f64], &CheckParams) -> Result<f64> + Send + Sync>;
pub type OnceCheck = Arc<dyn Fn(&CheckParams) -> Result<f64> + Send + Sync>;

/// How an entry-specific check is evaluated.
#[derive(Clone)]
pub enum CheckKind {
    /// Evaluated at every accepted sample point; the worst value is judged.
    PerPoint(PointCheck),
    /// Evaluated once per run.
    Once(OnceCheck),
}

/// A residual that must stay at or below `tolerance`.
#[derive(Clone)]
pub struct EntryCheck {
    pub invariant: String,
    pub tolerance: f64,
    pub kind: CheckKind,
}

impl fmt::Debug for EntryCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EntryCheck")
            .field("invariant", &self.invariant)
            .field("tolerance", &self.tolerance)
            .finish()
    }
}

pub type Sampler = Arc<dyn Fn(&mut ChaCha8Rng) -> Vec<f64> + Send + Sync>;

/// A catalog chart with its declared invariants.
#[derive(Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub params: BTreeMap<String, String>,
    pub chart: ImmersionChart,
    pub expected: Expected,
    pub anchor: &'static str,
    pub sampler: Sampler,
    pub checks: Vec<EntryCheck>,
}

impl fmt::Debug for CatalogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CatalogEntry")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("chart", &self.chart)
            .field("expected", &self.expected)
            .field("checks", &self.checks)
            .finish()
    }
}

impl CatalogEntry {
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (self.sampler)(rng)
    }
}

/// Uniform sampler on the chart box shrunk by `margin`.
pub fn box_sampler(chart: &ImmersionChart, margin: f64) -> Sampler {
    let domain = chart.domain().clone();
    Arc::new(move |rng| domain.sample(margin, rng))
}

/// A parameter of an entry with its default.
#[derive(Clone, Debug, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

/// Listing information for an entry family.
#[derive(Clone, Debug, Serialize)]
pub struct EntrySchema {
    pub name: &'static str,
    pub signature: &'static str,
    pub anchor: &'static str,
    pub params: Vec<ParamSpec>,
}

const fn param(name: &'static str, default: &'static str, help: &'static str) -> ParamSpec {
    ParamSpec { name, default, help }
}

/// Every entry family in listing order.
pub fn schemas() -> Vec<EntrySchema> {
    vec![
        EntrySchema {
            name: "sphere",
            signature: "sphere(n)",
            anchor: calibration::SPHERE_ANCHOR,
            params: vec![param("n", "3", "dimension of the round sphere")],
        },
        EntrySchema {
            name: "flat",
            signature: "flat(n,N)",
            anchor: calibration::FLAT_ANCHOR,
            params: vec![
                param("n", "2", "dimension"),
                param("N", "4", "ambient dimension"),
            ],
        },
        EntrySchema {
            name: "torus",
            signature: "torus()",
            anchor: calibration::TORUS_ANCHOR,
            params: vec![],
        },
        EntrySchema {
            name: "helix-product",
            signature: "helix-product(helices,flat,parabolas)",
            anchor: helix::ANCHOR,
            params: vec![
                param("helices", "2", "number of circular helix factors"),
                param("flat", "1", "number of straight line factors"),
                param("parabolas", "1", "number of planar parabola factors"),
            ],
        },
        EntrySchema {
            name: "holomorphic-curve",
            signature: "holomorphic-curve(m)",
            anchor: holomorphic::ANCHOR,
            params: vec![param("m", "2", "the curve lives in C^(m+3)")],
        },
        EntrySchema {
            name: "section4-ruled",
            signature: "section4-ruled(m)",
            anchor: section::ANCHOR,
            params: vec![
                param("m", "2", "base curve in C^(m+3); n = 2m"),
                param("t_radius", "0.3", "fiber half-width, shrunk until immersive"),
                param("shear", "0", "reparametrize u = a + shear * t1^3"),
            ],
        },
        EntrySchema {
            name: "curve-parallel",
            signature: "curve-parallel(n,N)",
            anchor: curve::ANCHOR,
            params: vec![
                param("n", "3", "dimension"),
                param("N", "8", "ambient dimension"),
                param("seed", "1", "seed of the curve coefficients"),
            ],
        },
    ]
}

/// Typed access to `key=value` parameters with unknown-key rejection.
pub struct Params<'a> {
    raw: &'a BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
}

impl<'a> Params<'a> {
    pub fn new(schema: &EntrySchema, raw: &'a BTreeMap<String, String>) -> Result<Self> {
        for key in raw.keys() {
            if !schema.params.iter().any(|p| p.name == key) {
                return Err(GeomError::Config(format!(
                    "entry `{}` has no parameter `{key}`",
                    schema.name
                )));
            }
        }
        let resolved = schema
            .params
            .iter()
            .map(|p| {
                let v = raw.get(p.name).cloned().unwrap_or_else(|| p.default.to_string());
                (p.name.to_string(), v)
            })
            .collect();
        Ok(Self { raw, resolved })
    }

    fn text(&self, key: &str) -> &str {
        self.resolved
            .get(key)
            .map(String::as_str)
            .expect("parameter declared in schema")
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        self.text(key).parse().map_err(|_| {
            GeomError::Config(format!("parameter `{key}`: expected an integer, got `{}`", self.text(key)))
        })
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        self.text(key).parse().map_err(|_| {
            GeomError::Config(format!("parameter `{key}`: expected an integer, got `{}`", self.text(key)))
        })
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let v: f64 = self.text(key).parse().map_err(|_| {
            GeomError::Config(format!("parameter `{key}`: expected a number, got `{}`", self.text(key)))
        })?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(GeomError::Config(format!("parameter `{key}` must be finite")))
        }
    }

    pub fn was_given(&self, key: &str) -> bool {
        self.raw.contains_key(key)
    }

    /// Resolved parameters, defaults included.
    pub fn resolved(&self) -> BTreeMap<String, String> {
        self.resolved.clone()
    }
}

/// Builds the entry `name` from `key=value` parameters.
pub fn build(name: &str, params: &BTreeMap<String, String>) -> Result<CatalogEntry> {
    let schema = schemas()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| GeomError::UnknownEntry(name.to_string()))?;
    let p = Params::new(&schema, params)?;
    let mut entry = match name {
        "sphere" => sphere(p.usize("n")?)?,
        "flat" => flat(p.usize("n")?, p.usize("N")?)?,
        "torus" => torus(),
        "helix-product" => helix_product(p.usize("helices")?, p.usize("flat")?, p.usize("parabolas")?)?,
        "holomorphic-curve" => holomorphic_curve(p.usize("m")?)?,
        "section4-ruled" => section4_ruled(p.usize("m")?, p.f64("t_radius")?, p.f64("shear")?)?,
        "curve-parallel" => curve_parallel(p.usize("n")?, p.usize("N")?, p.u64("seed")?)?,
        _ => unreachable!("schema lookup succeeded"),
    };
    entry.params = p.resolved();
    Ok(entry)
}

/// Every entry family at its default parameters.
pub fn defaults() -> Result<Vec<CatalogEntry>> {
    schemas()
        .iter()
        .map(|s| build(s.name, &BTreeMap::new()))
        .collect()
}

/// Parses `key=value`.
pub fn parse_param(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| GeomError::Config(format!("parameter `{s}` is not of the form key=value")))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(GeomError::Config(format!("parameter `{s}` has an empty key")));
    }
    Ok((k.to_string(), v.trim().to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_names_and_keys_are_rejected() {
        assert!(matches!(build("nope", &BTreeMap::new()), Err(GeomError::UnknownEntry(_))));
        let mut p = BTreeMap::new();
        p.insert("q".to_string(), "1".to_string());
        assert!(matches!(build("sphere", &p), Err(GeomError::Config(_))));
        p.clear();
        p.insert("n".to_string(), "two".to_string());
        assert!(matches!(build("sphere", &p), Err(GeomError::Config(_))));
    }

    #[test]
    fn defaults_are_recorded() {
        let e = build("section4-ruled", &BTreeMap::new()).unwrap();
        assert_eq!(e.params["m"], "2");
        assert_eq!(e.params["shear"], "0");
    }

    #[test]
    fn param_parsing() {
        assert_eq!(parse_param("m=2").unwrap(), ("m".into(), "2".into()));
        assert!(parse_param("m2").is_err());
        assert!(parse_param("=2").is_err());
    }
}
