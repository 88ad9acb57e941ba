//! Run configuration: TOML with `[section]` headers, unknown keys rejected,
//! semantic violations collected into one list.

use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::expr::Expr;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub geometry: Geometry,
    #[serde(default)]
    pub root_system: RootSystemSpec,
    #[serde(default)]
    pub series: Series,
    #[serde(default)]
    pub quadrature: Quadrature,
    #[serde(default)]
    pub dirichlet: DirichletBlock,
    #[serde(default)]
    pub green: GreenBlock,
    #[serde(default)]
    pub potential: PotentialBlock,
    #[serde(default)]
    pub semilinear: SemilinearBlock,
    #[serde(default)]
    pub verify: VerifyBlock,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub dim: usize,
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    #[default]
    Trivial,
    SignGroup,
}

/// `multiplicities[j]` is the multiplicity of the reflection in `x_j = 0`;
/// zero entries contribute no root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RootSystemSpec {
    #[serde(default)]
    pub kind: Kind,
    #[serde(default)]
    pub multiplicities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Series {
    pub max_degree: usize,
    pub tol: f64,
}

impl Default for Series {
    fn default() -> Self {
        Self { max_degree: 2000, tol: 1e-12 }
    }
}

/// `boundary_order = 0` keeps the library default sphere rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Quadrature {
    pub boundary_order: usize,
    pub annulus_radial: usize,
    pub annulus_sphere: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self { boundary_order: 0, annulus_radial: 32, annulus_sphere: 24 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DirichletBlock {
    pub outer: String,
    pub inner: String,
    /// Known solution; when set, the run fails if `max |u - exact| >= tol`.
    pub exact: Option<String>,
    pub tol: f64,
    pub samples: usize,
}

impl Default for DirichletBlock {
    fn default() -> Self {
        Self { outer: "1".into(), inner: "1".into(), exact: None, tol: 1e-7, samples: 20 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Series,
    Definition,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GreenBlock {
    /// Every pair is evaluated by each route; with more than one route the
    /// largest disagreement is checked against `tol`.
    pub routes: Vec<Route>,
    pub pairs: usize,
    /// Points are drawn with `rho + margin <= |x| <= 1 - margin`.
    pub margin: f64,
    /// Least orbit distance between the two points of a pair.
    pub separation: f64,
    pub tol: f64,
}

impl Default for GreenBlock {
    fn default() -> Self {
        Self { routes: vec![Route::Series], pairs: 10, margin: 0.1, separation: 0.05, tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialBlock {
    pub f: String,
    pub points: usize,
}

impl Default for PotentialBlock {
    fn default() -> Self {
        Self { f: "1".into(), points: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phi2Kind {
    Linear,
    Power,
    Saturating,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SemilinearBlock {
    pub outer: String,
    pub inner: String,
    pub phi1: String,
    pub phi2: Phi2Kind,
    /// Slope for `linear`, exponent for `power`; unused for `saturating`.
    pub phi2_param: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub theta: f64,
    pub radial: usize,
    pub sphere: usize,
}

impl Default for SemilinearBlock {
    fn default() -> Self {
        Self {
            outer: "1".into(),
            inner: "1".into(),
            phi1: "1".into(),
            phi2: Phi2Kind::Linear,
            phi2_param: 1.0,
            tol: 1e-8,
            max_iter: 200,
            theta: 1.0,
            radial: 12,
            sphere: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyBlock {
    pub samples: usize,
}

impl Default for VerifyBlock {
    fn default() -> Self {
        Self { samples: 10 }
    }
}

/// Parses and validates; all semantic violations are reported together.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Syntax(e.to_string().trim_end().to_string()))?;
    let violations = cfg.violations();
    if violations.is_empty() {
        Ok(cfg)
    } else {
        Err(CliError::Invalid(violations))
    }
}

impl RunConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn gamma(&self) -> f64 {
        match self.root_system.kind {
            Kind::Trivial => 0.0,
            Kind::SignGroup => self.root_system.multiplicities.iter().sum(),
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let d = self.geometry.dim;
        if d < 2 {
            v.push(format!("dim must be at least 2 (got {d})"));
        }
        let rho = self.geometry.rho;
        if !(rho > 0.0 && rho < 1.0) {
            v.push(format!("rho must lie in (0,1) (got {rho})"));
        }
        let ks = &self.root_system.multiplicities;
        match self.root_system.kind {
            Kind::Trivial => {
                if ks.iter().any(|k| *k != 0.0) {
                    v.push("trivial root system takes no multiplicities".into());
                }
            }
            Kind::SignGroup => {
                if ks.len() != d {
                    v.push(format!("multiplicities must have one entry per axis ({d}, got {})", ks.len()));
                }
                if ks.iter().any(|k| !(*k >= 0.0 && k.is_finite())) {
                    v.push("multiplicities must be nonnegative".into());
                }
            }
        }
        let lambda = d as f64 / 2.0 + self.gamma() - 1.0;
        if !(lambda > 0.0) {
            v.push(format!("lambda_k must be positive (got {lambda})"));
        }
        if self.series.max_degree < 1 {
            v.push("series.max_degree must be at least 1".into());
        }
        if !(self.series.tol > 0.0) {
            v.push(format!("series.tol must be positive (got {})", self.series.tol));
        }
        let q = &self.quadrature;
        if q.annulus_radial == 0 || q.annulus_sphere == 0 {
            v.push("quadrature orders must be positive".into());
        }

        let mut expr = |field: &str, text: &str| {
            if let Err(e) = Expr::parse(text, d.max(1)) {
                v.push(format!("{field}: {e}"));
            }
        };
        expr("dirichlet.outer", &self.dirichlet.outer);
        expr("dirichlet.inner", &self.dirichlet.inner);
        if let Some(e) = &self.dirichlet.exact {
            expr("dirichlet.exact", e);
        }
        expr("potential.f", &self.potential.f);
        expr("semilinear.outer", &self.semilinear.outer);
        expr("semilinear.inner", &self.semilinear.inner);
        expr("semilinear.phi1", &self.semilinear.phi1);

        let positive = |v: &mut Vec<String>, name: &str, x: f64| {
            if !(x > 0.0) {
                v.push(format!("{name} must be positive (got {x})"));
            }
        };
        positive(&mut v, "dirichlet.tol", self.dirichlet.tol);
        positive(&mut v, "green.tol", self.green.tol);
        positive(&mut v, "semilinear.tol", self.semilinear.tol);
        for (name, n) in [
            ("dirichlet.samples", self.dirichlet.samples),
            ("green.pairs", self.green.pairs),
            ("potential.points", self.potential.points),
            ("semilinear.max_iter", self.semilinear.max_iter),
            ("semilinear.radial", self.semilinear.radial),
            ("semilinear.sphere", self.semilinear.sphere),
            ("verify.samples", self.verify.samples),
        ] {
            if n == 0 {
                v.push(format!("{name} must be at least 1"));
            }
        }
        let g = &self.green;
        if g.routes.is_empty() {
            v.push("green.routes must not be empty".into());
        }
        if rho > 0.0 && rho < 1.0 && !(g.margin > 0.0 && rho + g.margin < 1.0 - g.margin) {
            v.push(format!("green.margin must be positive and leave a band inside the annulus (got {})", g.margin));
        }
        if !(g.separation > 0.0) {
            v.push(format!("green.separation must be positive (got {})", g.separation));
        }
        let s = &self.semilinear;
        if !(s.theta > 0.0 && s.theta <= 1.0) {
            v.push(format!("semilinear.theta must lie in (0,1] (got {})", s.theta));
        }
        match s.phi2 {
            Phi2Kind::Linear if !(s.phi2_param >= 0.0) => v.push(format!("linear phi2 needs a nonnegative slope (got {})", s.phi2_param)),
            Phi2Kind::Power if !(s.phi2_param > 0.0) => v.push(format!("power phi2 needs a positive exponent (got {})", s.phi2_param)),
            _ => {}
        }
        v
    }
}
