//! Coefficients `a_{k,n}`, `b_{k,n}`, the ball Poisson kernel, the annulus
//! kernels `P_{k,1}`, `P_{k,2}` and the Dirichlet solver.

use crate::error::{Error, Result};
use crate::field::{norm, ScalarField};
use crate::harmonics::{check_unit, MU_EPS};
use crate::quadrature::{sphere_rule, QuadratureRule};
use crate::roots::DunklConstants;
use crate::special::{tail_bound, truncation_degree, TailModel};
use crate::system::{DunklSystem, MAX_SERIES_DEGREE};

/// Relative slack when deciding that a point lies on a boundary sphere.
pub(crate) const BOUNDARY_SLACK: f64 = 1e-13;

/// Inner radius and constants of `A = { rho < |x| < 1 }`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusGeometry {
    rho: f64,
    constants: DunklConstants,
}

impl AnnulusGeometry {
    pub fn new(rho: f64, constants: DunklConstants) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::InvalidRadius { rho });
        }
        if !(constants.lambda > 0.0) {
            return Err(Error::NonPositiveLambda { lambda: constants.lambda });
        }
        Ok(Self { rho, constants })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn constants(&self) -> &DunklConstants {
        &self.constants
    }

    /// Distance from `x` to the boundary of `A` (negative outside).
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        let r = norm(x);
        (r - self.rho).min(1.0 - r)
    }
}

/// Truncation policy for zonal series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesConfig {
    pub max_degree: usize,
    /// Target for the rigorous tail bound, relative to the data scale.
    pub tol: f64,
    /// The tail bound times this factor must stay below `tol`.
    pub safety: f64,
    /// Fixed Gauss–Jacobi order for `mu` integrals; adaptive when `None`.
    pub mu_order: Option<usize>,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self { max_degree: 2000, tol: 1e-12, safety: 1.0, mu_order: None }
    }
}

impl SeriesConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_degree < 1 || self.max_degree > MAX_SERIES_DEGREE - 2 {
            return Err(Error::OutOfRange(format!(
                "max_degree must lie in [1, {}] (got {})",
                MAX_SERIES_DEGREE - 2,
                self.max_degree
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::OutOfRange(format!("series tolerance must be positive (got {})", self.tol)));
        }
        if !(self.safety >= 1.0) {
            return Err(Error::OutOfRange(format!("safety factor must be at least 1 (got {})", self.safety)));
        }
        Ok(())
    }
}

/// Dirichlet data on the outer sphere and on `S(0, rho)`.
#[derive(Clone, Copy)]
pub struct BoundaryData<'a> {
    pub outer: &'a dyn ScalarField,
    pub inner: &'a dyn ScalarField,
}

/// A kernel value with the truncation degree and the rigorous tail bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub value: f64,
    pub tail_bound: f64,
    pub degree: usize,
}

/// A pointwise value with its truncation record.
pub type Evaluation = KernelValue;

/// Everything needed to evaluate kernels on one annulus.
#[derive(Debug, Clone)]
pub struct Annulus {
    system: DunklSystem,
    geometry: AnnulusGeometry,
    series: SeriesConfig,
    boundary_rule: QuadratureRule,
    /// Truncation of the accelerated Green remainder valid for all radius pairs.
    pub(crate) uniform_remainder: Option<(usize, f64)>,
}

/// Default sphere rule for boundary integrals.
pub fn default_boundary_rule(d: usize) -> Result<QuadratureRule> {
    match d {
        2 => sphere_rule(2, 160),
        3 => sphere_rule(3, 56),
        _ => Err(Error::UnsupportedDimension(d)),
    }
}

impl Annulus {
    pub fn new(system: DunklSystem, rho: f64, series: SeriesConfig) -> Result<Self> {
        series.validate()?;
        let geometry = AnnulusGeometry::new(rho, *system.constants())?;
        let boundary_rule = default_boundary_rule(system.dim())?;
        let mut a = Self { system, geometry, series, boundary_rule, uniform_remainder: None };
        a.uniform_remainder = a.uniform_remainder_degree();
        Ok(a)
    }

    /// Replaces the sphere rule used for boundary integrals.
    pub fn with_boundary_rule(mut self, rule: QuadratureRule) -> Result<Self> {
        if rule.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: rule.dim() });
        }
        self.boundary_rule = rule;
        Ok(self)
    }

    pub fn system(&self) -> &DunklSystem {
        &self.system
    }

    pub fn geometry(&self) -> &AnnulusGeometry {
        &self.geometry
    }

    pub fn series(&self) -> &SeriesConfig {
        &self.series
    }

    pub fn boundary_rule(&self) -> &QuadratureRule {
        &self.boundary_rule
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    pub fn rho(&self) -> f64 {
        self.geometry.rho
    }

    pub fn lambda(&self) -> f64 {
        self.system.lambda()
    }

    fn closed_norm(&self, x: &[f64]) -> Result<f64> {
        self.system.check_dim(x)?;
        let r = norm(x);
        if r < self.rho() * (1.0 - BOUNDARY_SLACK) || r > 1.0 + BOUNDARY_SLACK {
            return Err(Error::OutsideDomain { norm: r, region: "closed annulus" });
        }
        Ok(r.clamp(self.rho(), 1.0))
    }

    pub(crate) fn open_norm(&self, x: &[f64]) -> Result<f64> {
        self.system.check_dim(x)?;
        let r = norm(x);
        if !(r > self.rho() && r < 1.0) {
            return Err(Error::OutsideDomain { norm: r, region: "open annulus" });
        }
        Ok(r)
    }

    /// `(rho/r)^{2lambda+2n}` and `rho^{2lambda+2n}`.
    fn powers(&self, n: usize, r: f64) -> (f64, f64) {
        let s = 2.0 * self.lambda() + 2.0 * n as f64;
        let rho = self.rho();
        ((s * (rho / r).ln()).exp(), (s * rho.ln()).exp())
    }

    /// `a_{k,n}(x) = (1 - (|x|/rho)^{-2lambda-2n}) / (1 - rho^{2lambda+2n})`.
    pub fn coeff_a(&self, n: usize, x: &[f64]) -> Result<f64> {
        let r = self.closed_norm(x)?;
        Ok(self.coeff_a_radius(n, r))
    }

    pub(crate) fn coeff_a_radius(&self, n: usize, r: f64) -> f64 {
        let (q, p) = self.powers(n, r);
        ((1.0 - q) / (1.0 - p)).clamp(0.0, 1.0)
    }

    /// `1 - a_{k,n}` computed without cancellation.
    pub(crate) fn coeff_one_minus_a_radius(&self, n: usize, r: f64) -> f64 {
        let (q, p) = self.powers(n, r);
        ((q - p) / (1.0 - p)).clamp(0.0, 1.0)
    }

    /// `b_{k,n}(x) = rho^{-n}(1 - a_{k,n}(x))`, evaluated as
    /// `rho^{2lambda+n}(|x|^{-2lambda-2n} - 1)/(1 - rho^{2lambda+2n})`.
    pub fn coeff_b(&self, n: usize, x: &[f64]) -> Result<f64> {
        let r = self.closed_norm(x)?;
        let lam = self.lambda();
        let rho = self.rho();
        let nf = n as f64;
        let s = 2.0 * lam + 2.0 * nf;
        let lead = (2.0 * lam + nf) * rho.ln();
        let num = (lead - s * r.ln()).exp() - lead.exp();
        Ok(num / (1.0 - (s * rho.ln()).exp()))
    }

    /// `P_k(x, xi) = int (1-|x|^2)/(1-2<x,z>+|x|^2)^{d/2+gamma} dmu_xi(z)`.
    pub fn poisson_ball(&self, x: &[f64], xi: &[f64]) -> Result<f64> {
        self.system.poisson_ball(x, xi)
    }

    /// Tail models for `sum a_n |x|^n Z_n` (outer data) and `sum b_n |x|^n Z_n` (inner data).
    fn pk_models(&self, r: f64, scale1: f64, scale2: f64) -> [TailModel; 2] {
        let rho = self.rho();
        let lam = self.lambda();
        let c2 = (rho / r).powf(2.0 * lam) / (1.0 - rho.powf(2.0 * lam));
        [TailModel { scale: scale1, rate: r }, TailModel { scale: scale2 * c2, rate: rho / r }]
    }

    fn degree_for(&self, models: &[TailModel], scale: f64) -> Result<(usize, f64)> {
        let c = self.system.constants();
        let target = self.series.tol * scale.max(f64::MIN_POSITIVE) / self.series.safety;
        truncation_degree(self.dim(), c.gamma, models, target, self.series.max_degree)
            .map_err(|e| match e {
                Error::Truncation { bound, max_degree, .. } => Error::Truncation { bound, tol: self.series.tol, max_degree },
                other => other,
            })
    }

    /// Coefficients `a_n(x)|x|^n` and `b_n(x)|x|^n` of the two Dirichlet kernels.
    pub(crate) fn dirichlet_coefficients(&self, r: f64, len: usize) -> (Vec<f64>, Vec<f64>) {
        let lam = self.lambda();
        let rho = self.rho();
        let mut c1 = Vec::with_capacity(len);
        let mut c2 = Vec::with_capacity(len);
        for n in 0..len {
            let nf = n as f64;
            let s = 2.0 * lam + 2.0 * nf;
            c1.push(self.coeff_a_radius(n, r) * (nf * r.ln()).exp());
            // b_n r^n = ((rho/r)^{2l+n} - rho^{2l+n} r^n) / (1 - rho^s)
            let e = 2.0 * lam + nf;
            let v = ((e * (rho / r).ln()).exp() - (e * rho.ln() + nf * r.ln()).exp()) / (1.0 - (s * rho.ln()).exp());
            c2.push(v.max(0.0));
        }
        (c1, c2)
    }

    /// `P_{k,1}(x, xi) = sum a_{k,n}(x) Z_{k,n}(x, xi)`.
    pub fn pk1(&self, x: &[f64], xi: &[f64]) -> Result<KernelValue> {
        let (r, xhat) = self.kernel_args(x, xi)?;
        let (n, bound) = self.degree_for(&[TailModel { scale: 1.0, rate: r }], 1.0)?;
        let (c, _) = self.dirichlet_coefficients(r, n + 1);
        let value = self.system.zonal_series(&xhat, xi, &c, r);
        Ok(KernelValue { value, tail_bound: bound, degree: n })
    }

    /// `P_{k,2}(x, xi) = sum b_{k,n}(x) Z_{k,n}(x, xi)` for unit `xi`: the
    /// kernel that carries data on `S(0, rho)` into `A`.
    pub fn pk2(&self, x: &[f64], xi: &[f64]) -> Result<KernelValue> {
        let (r, xhat) = self.kernel_args(x, xi)?;
        let models = self.pk_models(r, 0.0, 1.0);
        let (n, bound) = self.degree_for(&models[1..], 1.0)?;
        let (_, c) = self.dirichlet_coefficients(r, n + 1);
        let value = self.system.zonal_series(&xhat, xi, &c, self.rho() / r);
        Ok(KernelValue { value, tail_bound: bound, degree: n })
    }

    /// `P_{k,2}(x, rho xi) = sum (1 - a_{k,n}(x)) Z_{k,n}(x, xi) = P_k(x, xi) - P_{k,1}(x, xi)`.
    pub fn pk2_inner(&self, x: &[f64], xi: &[f64]) -> Result<KernelValue> {
        let (r, xhat) = self.kernel_args(x, xi)?;
        let rho = self.rho();
        let lam = self.lambda();
        let c = (rho / r).powf(2.0 * lam) / (1.0 - rho.powf(2.0 * lam));
        let (n, bound) = self.degree_for(&[TailModel { scale: c, rate: rho * rho / r }], 1.0)?;
        let coeffs: Vec<f64> = (0..=n).map(|m| self.coeff_one_minus_a_radius(m, r) * (m as f64 * r.ln()).exp()).collect();
        let value = self.system.zonal_series(&xhat, xi, &coeffs, rho * rho / r);
        Ok(KernelValue { value, tail_bound: bound, degree: n })
    }

    fn kernel_args(&self, x: &[f64], xi: &[f64]) -> Result<(f64, Vec<f64>)> {
        let r = self.open_norm(x)?;
        self.system.check_dim(xi)?;
        check_unit(xi)?;
        Ok((r, x.iter().map(|v| v / r).collect()))
    }

    /// Solves the Dirichlet problem by integrating the kernels against the data.
    pub fn dirichlet_solve<'a>(&'a self, data: BoundaryData<'a>, sphere_rule: &QuadratureRule) -> Result<DirichletSolution<'a>> {
        if sphere_rule.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: sphere_rule.dim() });
        }
        let d_k = self.system.d_k();
        let rho = self.rho();
        let mut dirs = Vec::with_capacity(sphere_rule.len() * self.dim());
        let mut w_out = Vec::with_capacity(sphere_rule.len());
        let mut w_in = Vec::with_capacity(sphere_rule.len());
        for (xi, w) in sphere_rule.iter() {
            let base = w * self.system.weight(xi) / d_k;
            let fo = data.outer.eval(xi);
            let inner_pt: Vec<f64> = xi.iter().map(|v| rho * v).collect();
            let fi = data.inner.eval(&inner_pt);
            if !(fo.is_finite() && fi.is_finite()) {
                return Err(Error::InvalidInput(format!("boundary data not finite at node {xi:?}")));
            }
            dirs.extend_from_slice(xi);
            w_out.push(base * fo);
            w_in.push(base * fi);
        }
        let scale_out = w_out.iter().map(|v| v.abs()).sum();
        let scale_in = w_in.iter().map(|v| v.abs()).sum();
        Ok(DirichletSolution {
            annulus: self,
            data,
            dim: self.dim(),
            dirs,
            w_out,
            w_in,
            scale_out,
            scale_in,
            resolvable: resolvable_degree(sphere_rule),
        })
    }
}

/// Smallest tensor sphere rule exact for polynomials of degree `n`.
pub(crate) fn rule_with_exactness(d: usize, n: usize) -> Result<QuadratureRule> {
    match d {
        2 => sphere_rule(2, n + 1),
        3 => sphere_rule(3, n / 2 + 1),
        _ => Err(Error::UnsupportedDimension(d)),
    }
}

/// Polynomial exactness of the tensor sphere rules.
pub(crate) fn polynomial_exactness(rule: &QuadratureRule) -> usize {
    match rule.dim() {
        2 => rule.len() - 1,
        _ => 2 * ((rule.len() / 2) as f64).sqrt().round() as usize - 1,
    }
}

pub(crate) fn resolvable_degree(rule: &QuadratureRule) -> usize {
    // Half the polynomial exactness of the tensor sphere rules.
    match rule.dim() {
        2 => rule.len() / 2,
        _ => ((rule.len() / 2) as f64).sqrt().round() as usize,
    }
}

impl DunklSystem {
    /// Poisson kernel of the unit ball by `mu_xi` quadrature.
    pub fn poisson_ball(&self, x: &[f64], xi: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        self.check_dim(xi)?;
        check_unit(xi)?;
        let r2: f64 = x.iter().map(|v| v * v).sum();
        if !(r2 < 1.0) {
            return Err(Error::OutsideDomain { norm: r2.sqrt(), region: "open unit ball" });
        }
        let p = self.lambda() + 1.0;
        let gap = 0.5 * self.roots().orbit_distance(x, xi).powi(2);
        let t = self.intertwiner().template_for(xi, x, gap, MU_EPS);
        let mut acc = 0.0;
        t.for_each_dot(xi, x, |s, w| acc += w * crate::system::inv_pow(1.0 - 2.0 * s + r2, p));
        Ok((1.0 - r2) * acc)
    }
}

/// Solution of the Dirichlet problem; evaluate with [`DirichletSolution::evaluate`].
pub struct DirichletSolution<'a> {
    annulus: &'a Annulus,
    data: BoundaryData<'a>,
    dim: usize,
    dirs: Vec<f64>,
    w_out: Vec<f64>,
    w_in: Vec<f64>,
    scale_out: f64,
    scale_in: f64,
    resolvable: usize,
}

impl<'a> DirichletSolution<'a> {
    pub fn annulus(&self) -> &'a Annulus {
        self.annulus
    }

    /// Boundary value when `x` lies on a boundary sphere.
    fn boundary_value(&self, x: &[f64], r: f64) -> Option<f64> {
        if r >= 1.0 - BOUNDARY_SLACK {
            let y: Vec<f64> = x.iter().map(|v| v / r).collect();
            Some(self.data.outer.eval(&y))
        } else if r <= self.annulus.rho() * (1.0 + BOUNDARY_SLACK) {
            let s = self.annulus.rho() / r;
            let y: Vec<f64> = x.iter().map(|v| v * s).collect();
            Some(self.data.inner.eval(&y))
        } else {
            None
        }
    }

    fn models(&self, r: f64) -> [TailModel; 2] {
        self.annulus.pk_models(r, self.scale_out, self.scale_in)
    }

    fn scale(&self) -> f64 {
        self.scale_out + self.scale_in
    }

    /// Value at `x` in the closed annulus; boundary points return the data.
    /// The sum stops at the smaller of `max_degree` and the resolvable degree
    /// of the boundary rule. When the tail bound cannot reach the configured
    /// tolerance before that, the value is still returned together with the
    /// bound actually achieved, which callers should inspect near `∂A`.
    pub fn evaluate(&self, x: &[f64]) -> Result<Evaluation> {
        let r = self.annulus.closed_norm(x)?;
        if let Some(v) = self.boundary_value(x, r) {
            return Ok(Evaluation { value: v, tail_bound: 0.0, degree: 0 });
        }
        if self.scale() == 0.0 {
            return Ok(Evaluation { value: 0.0, tail_bound: 0.0, degree: 0 });
        }
        let cap = self.resolvable.min(self.annulus.series.max_degree);
        let s = &self.annulus.series;
        let target = s.tol * self.scale() / s.safety;
        let c = self.annulus.system.constants();
        match truncation_degree(self.dim, c.gamma, &self.models(r), target, cap) {
            Ok((n, bound)) => Ok(self.sum_at(x, r, n, bound, false)),
            Err(Error::Truncation { .. }) => self.evaluate_truncated(x, cap),
            Err(e) => Err(e),
        }
    }

    /// Highest degree the boundary rule integrates reliably; [`DirichletSolution::evaluate`]
    /// never sums past it, since higher projections are aliasing.
    pub fn resolvable_degree(&self) -> usize {
        self.resolvable
    }

    /// Value at `x` truncated after `degree`, with the tail bound actually achieved.
    pub fn evaluate_truncated(&self, x: &[f64], degree: usize) -> Result<Evaluation> {
        let r = self.annulus.closed_norm(x)?;
        if let Some(v) = self.boundary_value(x, r) {
            return Ok(Evaluation { value: v, tail_bound: 0.0, degree: 0 });
        }
        let c = self.annulus.system.constants();
        let bound = tail_bound(self.dim, c.gamma, &self.models(r), degree);
        Ok(self.sum_at(x, r, degree, bound, true))
    }

    fn sum_at(&self, x: &[f64], r: f64, n: usize, bound: f64, cut: bool) -> Evaluation {
        let sys = &self.annulus.system;
        let (c1, c2) = self.annulus.dirichlet_coefficients(r, n + 1);
        let f = sys.factors(n + 1);
        let c1: Vec<f64> = c1.iter().zip(&f).map(|(a, b)| a * b).collect();
        let c2: Vec<f64> = c2.iter().zip(&f).map(|(a, b)| a * b).collect();
        let xhat: Vec<f64> = x.iter().map(|v| v / r).collect();
        let mut value = 0.0;
        for (i, xi) in self.dirs.chunks_exact(self.dim).enumerate() {
            let (wo, wi) = (self.w_out[i], self.w_in[i]);
            if wo == 0.0 && wi == 0.0 {
                continue;
            }
            let rate = r.max(self.annulus.rho() / r);
            let t = sys.series_template(&xhat, xi, rate, cut.then_some(n), self.annulus.series.mu_order);
            let (s1, s2) = sys.gegenbauer_integral2(t, &xhat, xi, &c1, &c2);
            value += wo * s1 + wi * s2;
        }
        Evaluation { value, tail_bound: bound, degree: n }
    }

    /// Values on the tensor grid `radii x directions` (directions are unit vectors).
    ///
    /// The data is projected onto each degree once per direction, so the cost is
    /// independent of the number of radii. Each radius is truncated at the
    /// smaller of the rigorous degree and the degree the boundary rule resolves;
    /// the reported tail bound is the one actually achieved.
    pub fn evaluate_grid(&self, radii: &[f64], directions: &[f64]) -> Result<Vec<Evaluation>> {
        let sys = &self.annulus.system;
        let d = self.dim;
        let rho = self.annulus.rho();
        let c = sys.constants();
        let mut plan = Vec::with_capacity(radii.len());
        let mut top = 0;
        for &r in radii {
            if !(r >= rho && r <= 1.0) {
                return Err(Error::OutsideDomain { norm: r, region: "closed annulus" });
            }
            let models = self.models(r.clamp(rho * (1.0 + 1e-12), 1.0 - 1e-12));
            let target = self.annulus.series.tol * self.scale().max(f64::MIN_POSITIVE);
            let n = match truncation_degree(d, c.gamma, &models, target, self.resolvable) {
                Ok((n, _)) => n,
                Err(_) => self.resolvable,
            };
            top = top.max(n);
            plan.push((n, tail_bound(d, c.gamma, &models, n)));
        }
        let len = top + 1;
        let order = len / 2 + 2;
        let mut out = Vec::with_capacity(radii.len() * directions.len() / d);
        let mut proj_out = vec![0.0; len];
        let mut proj_in = vec![0.0; len];
        let dirs: Vec<&[f64]> = directions.chunks_exact(d).collect();
        let mut per_dir: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(dirs.len());
        for s in &dirs {
            proj_out.iter_mut().for_each(|v| *v = 0.0);
            proj_in.iter_mut().for_each(|v| *v = 0.0);
            for (i, xi) in self.dirs.chunks_exact(d).enumerate() {
                let (wo, wi) = (self.w_out[i], self.w_in[i]);
                if wo == 0.0 && wi == 0.0 {
                    continue;
                }
                let z = sys.zonal_table(s, xi, len, order);
                for n in 0..len {
                    proj_out[n] += wo * z[n];
                    proj_in[n] += wi * z[n];
                }
            }
            per_dir.push((proj_out.clone(), proj_in.clone()));
        }
        for (ri, &r) in radii.iter().enumerate() {
            let (n, bound) = plan[ri];
            let (c1, c2) = self.annulus.dirichlet_coefficients(r.clamp(rho, 1.0), n + 1);
            for (di, s) in dirs.iter().enumerate() {
                let x: Vec<f64> = s.iter().map(|v| v * r).collect();
                if let Some(v) = self.boundary_value(&x, r) {
                    out.push(Evaluation { value: v, tail_bound: 0.0, degree: 0 });
                    continue;
                }
                let (po, pi) = &per_dir[di];
                let value: f64 = (0..=n).map(|m| c1[m] * po[m] + c2[m] * pi[m]).sum();
                out.push(Evaluation { value, tail_bound: bound, degree: n });
            }
        }
        Ok(out)
    }
}

impl ScalarField for DirichletSolution<'_> {
    /// NaN outside the closed annulus.
    fn eval(&self, x: &[f64]) -> f64 {
        self.evaluate(x).map(|e| e.value).unwrap_or(f64::NAN)
    }
}
