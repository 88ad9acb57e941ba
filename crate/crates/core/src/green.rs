//! Newton kernel, Kelvin transform, the annulus Green function by two routes,
//! Green potentials and the local quantity `eta_{x,r}`.

use num_traits::Num;

use crate::error::{Error, Result};
use crate::field::{dist, norm, ScalarField};
use crate::harmonics::MU_EPS;
use crate::kernels::{Annulus, BoundaryData};
use crate::quadrature::{ball_rule, QuadratureRule};
use crate::special::TailModel;
use crate::system::{inv_pow, DunklSystem};

/// Relative orbit distance below which two points are treated as colliding.
pub const COLLISION_RADIUS: f64 = 1e-9;

/// Largest data degree of the definition route (d = 2, d = 3).
const DEFINITION_DATA_CAP: (usize, usize) = (4000, 1000);

/// Largest truncation degree the cached `mu` templates integrate exactly.
const EXACT_TEMPLATE_DEGREE: usize = 254;

/// How `G_{k,A}` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreenRoute {
    /// `N(x,y) - P_{k,A}[N(x,.)](y)` through the Dirichlet solver.
    Definition,
    /// Zonal series, with the slowly converging parts summed in closed form
    /// as two image Newton kernels.
    Series,
    /// Closed single series, valid for `|y| < |x|`.
    Closed,
}

impl GreenRoute {
    pub fn name(&self) -> &'static str {
        match self {
            GreenRoute::Definition => "definition",
            GreenRoute::Series => "series",
            GreenRoute::Closed => "closed",
        }
    }
}

/// A Green function value with its truncation record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenValue {
    pub value: f64,
    pub tail_bound: f64,
    pub degree: usize,
    pub route: GreenRoute,
}

impl DunklSystem {
    /// `N_k(x,y) = 1/(2 d_k lambda) int (|x|^2+|y|^2-2<x,z>)^{-lambda} dmu_y(z)`,
    /// with a `mu` order adapted to the distance between `x` and `W y`.
    pub fn newton(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let (gap, x2, y2) = self.newton_setup(x, y)?;
        let t = self.intertwiner().template_for(y, x, gap, MU_EPS);
        Ok(self.newton_sum(t, x, y, x2 + y2))
    }

    /// Same as [`DunklSystem::newton`] with a fixed Gauss–Jacobi order.
    pub fn newton_with_order(&self, x: &[f64], y: &[f64], order: usize) -> Result<f64> {
        let (_, x2, y2) = self.newton_setup(x, y)?;
        let t = self.intertwiner().template(order);
        Ok(self.newton_sum(t, x, y, x2 + y2))
    }

    fn newton_setup(&self, x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        let x2: f64 = x.iter().map(|v| v * v).sum();
        let y2: f64 = y.iter().map(|v| v * v).sum();
        let od = self.roots().orbit_distance(x, y);
        if od <= COLLISION_RADIUS * x2.sqrt().max(y2.sqrt()) || (x2 == 0.0 && y2 == 0.0) {
            return Err(Error::Pole { distance: od });
        }
        Ok((0.5 * od * od, x2, y2))
    }

    fn newton_sum(&self, t: &crate::quadrature::MuTemplate, x: &[f64], y: &[f64], c: f64) -> f64 {
        let lam = self.lambda();
        let mut acc = 0.0;
        t.for_each_dot(y, x, |s, w| acc += w * inv_pow((c - 2.0 * s).max(f64::MIN_POSITIVE), lam));
        acc / (2.0 * self.d_k() * lam)
    }

    /// `N_k(x, 0) = |x|^{-2 lambda} / (2 d_k lambda)`.
    pub fn newton_at_origin(&self, x: &[f64]) -> f64 {
        inv_pow(x.iter().map(|v| v * v).sum(), self.lambda()) / (2.0 * self.d_k() * self.lambda())
    }

    /// Kelvin transform `x -> |x|^{-2 lambda} f(x/|x|^2)`.
    pub fn kelvin<F: ScalarField>(&self, f: F) -> Kelvin<'_, F> {
        Kelvin { system: self, f }
    }
}

/// The Kelvin transform of a field.
pub struct Kelvin<'s, F> {
    system: &'s DunklSystem,
    f: F,
}

impl<F: ScalarField> Kelvin<'_, F> {
    pub fn try_eval(&self, x: &[f64]) -> Result<f64> {
        self.system.check_dim(x)?;
        let r2: f64 = x.iter().map(|v| v * v).sum();
        if r2 == 0.0 {
            return Err(Error::OutsideDomain { norm: 0.0, region: "punctured space" });
        }
        let y: Vec<f64> = x.iter().map(|v| v / r2).collect();
        Ok(inv_pow(r2, self.system.lambda()) * self.f.eval(&y))
    }
}

impl<F: ScalarField> ScalarField for Kelvin<'_, F> {
    /// NaN at the origin.
    fn eval(&self, x: &[f64]) -> f64 {
        self.try_eval(x).unwrap_or(f64::NAN)
    }
}

/// Coefficient of `Z_n(xhat,yhat) / (d_k (2 lambda + 2n))` in the closed
/// single series for `|y| = r_small < |x| = r_large`, for integer `two_lambda`:
/// `(R^s - rho^s)(1 - X^s) / ((1 - rho^s)(XR)^{2 lambda + n})`, `s = 2 lambda + 2n`.
pub fn closed_form_coefficient<T: Num + Clone>(n: usize, two_lambda: usize, rho: T, r_small: T, r_large: T) -> T {
    let s = two_lambda + 2 * n;
    let pw = |v: &T, e: usize| num_traits::pow(v.clone(), e);
    let num = (pw(&r_small, s) - pw(&rho, s)) * (T::one() - pw(&r_large, s));
    let den = (T::one() - pw(&rho, s)) * pw(&(r_large * r_small), two_lambda + n);
    num / den
}

/// Same coefficient obtained from the zonal series: the Newton series
/// coefficient `X^{-2lambda-n} R^n` minus `[a_n(y) X^n + (1-a_n(y)) X^{-n-2lambda}] R^n`.
pub fn zonal_coefficient<T: Num + Clone>(n: usize, two_lambda: usize, rho: T, r_small: T, r_large: T) -> T {
    let s = two_lambda + 2 * n;
    let pw = |v: &T, e: usize| num_traits::pow(v.clone(), e);
    // a_n(y) = (1 - (rho/R)^s)/(1 - rho^s) = (R^s - rho^s)/(R^s (1 - rho^s)).
    let a = (pw(&r_small, s) - pw(&rho, s)) / (pw(&r_small, s) * (T::one() - pw(&rho, s)));
    let one_minus_a = T::one() - a.clone();
    let newton = pw(&r_small, n) / pw(&r_large, two_lambda + n);
    let sub = (a * pw(&r_large, n) + one_minus_a / pw(&r_large, n + two_lambda)) * pw(&r_small, n);
    newton - sub
}

/// Options for [`Annulus::green_potential`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialConfig {
    /// Radius of the orbit balls around `W x` treated by local polar rules.
    pub cutoff: f64,
    pub local_radial: usize,
    pub local_sphere: usize,
    /// Drop the orbit balls instead of integrating them; the excluded part is
    /// then only bracketed by `eta * sup|f|`.
    pub drop_local: bool,
    /// Maximal admissible bracket when `drop_local` is set.
    pub bracket_tol: Option<f64>,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self { cutoff: 0.15, local_radial: 8, local_sphere: 8, drop_local: false, bracket_tol: None }
    }
}

/// Green potential with the contribution of the orbit balls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialEstimate {
    pub value: f64,
    /// Part of `value` coming from the orbit balls (zero when dropped).
    pub local: f64,
    /// `eta(x, r) * sup |f|`, bounding the orbit-ball contribution.
    pub bracket: f64,
    /// Radius actually used for the orbit balls.
    pub radius: f64,
}

/// `psi(t) = 1 - S(t)` with `S` the smooth step from 0 at `t <= 0` to 1 at `t >= 1`.
pub fn bump_profile(t: f64) -> f64 {
    1.0 - smooth_step(t)
}

pub(crate) fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

impl Annulus {
    /// `N_k` series for `|y| < |x|`.
    pub fn newton_series(&self, x: &[f64], y: &[f64]) -> Result<GreenValue> {
        let sys = self.system();
        sys.check_dim(x)?;
        sys.check_dim(y)?;
        let xr = norm(x);
        let yr = norm(y);
        if !(yr < xr) {
            return Err(Error::OutOfRange(format!("newton_series needs |y| < |x| (got {yr} >= {xr})")));
        }
        let lam = sys.lambda();
        let lead = inv_pow(xr * xr, lam) / sys.d_k();
        if yr == 0.0 {
            return Ok(GreenValue { value: lead / (2.0 * lam), tail_bound: 0.0, degree: 0, route: GreenRoute::Series });
        }
        let rate = yr / xr;
        let models = [TailModel { scale: lead / (2.0 * lam), rate }];
        let (n, bound) = self.series_degree(&models, lead)?;
        let coeffs: Vec<f64> = (0..=n).map(|m| lead * rate.powi(m as i32) / (2.0 * lam + 2.0 * m as f64)).collect();
        let xhat: Vec<f64> = x.iter().map(|v| v / xr).collect();
        let yhat: Vec<f64> = y.iter().map(|v| v / yr).collect();
        let value = sys.zonal_series(&xhat, &yhat, &coeffs, rate);
        Ok(GreenValue { value, tail_bound: bound, degree: n, route: GreenRoute::Series })
    }

    fn series_degree(&self, models: &[TailModel], scale: f64) -> Result<(usize, f64)> {
        let c = self.system().constants();
        let s = self.series();
        let target = s.tol * scale.abs().max(1.0) / s.safety;
        crate::special::truncation_degree(self.dim(), c.gamma, models, target, s.max_degree)
    }

    /// `G_{k,A}(x, y)` by the chosen route.
    pub fn green(&self, x: &[f64], y: &[f64], route: GreenRoute) -> Result<GreenValue> {
        let xr = self.open_norm(x)?;
        let yr = self.open_norm(y)?;
        match route {
            GreenRoute::Definition => self.green_definition(x, y),
            GreenRoute::Series => self.green_series(x, y, xr, yr),
            GreenRoute::Closed => self.green_closed(x, y, xr, yr),
        }
    }

    fn green_definition(&self, x: &[f64], y: &[f64]) -> Result<GreenValue> {
        let sys = self.system();
        let n0 = sys.newton(x, y)?;
        let nx = |p: &[f64]| sys.newton(x, p).unwrap_or(f64::NAN);
        let (n, data, bound) = self.definition_degrees(norm(x), norm(y))?;
        // The rule integrates a degree-n zonal against data resolved to degree `data`.
        let exact = n + data + 4;
        let fine;
        let rule = if crate::kernels::polynomial_exactness(self.boundary_rule()) >= exact {
            self.boundary_rule()
        } else {
            fine = crate::kernels::rule_with_exactness(self.dim(), exact)?;
            &fine
        };
        let sol = self.dirichlet_solve(BoundaryData { outer: &nx, inner: &nx }, rule)?;
        let e = sol.evaluate_truncated(y, n)?;
        Ok(GreenValue { value: n0 - e.value, tail_bound: bound, degree: n, route: GreenRoute::Definition })
    }

    /// Truncation degree of `P_{k,A}[N(x,.)](y)`, the degree to which the
    /// boundary data must be resolved, and the tail bound. The terms decay like
    /// `(|x||y|)^n` and `(rho^2/(|x||y|))^n`; the data like `|x|^n` and `(rho/|x|)^n`.
    fn definition_degrees(&self, xr: f64, yr: f64) -> Result<(usize, usize, f64)> {
        let sys = self.system();
        let lam = sys.lambda();
        let rho = self.rho();
        let base = 1.0 / (sys.d_k() * 2.0 * lam * (1.0 - rho.powf(2.0 * lam)));
        let models = |a: f64, b: f64| {
            [TailModel { scale: base, rate: a }, TailModel { scale: base * (rho / b).powf(2.0 * lam), rate: rho * rho / b }]
        };
        let s = self.series();
        let target = s.tol * base / s.safety;
        let cap_data = if self.dim() == 2 { DEFINITION_DATA_CAP.0 } else { DEFINITION_DATA_CAP.1 };
        let cap_n = if sys.intertwiner().is_dirac() { s.max_degree } else { EXACT_TEMPLATE_DEGREE.min(s.max_degree) };
        let gamma = sys.constants().gamma;
        let report = |e: Error| match e {
            Error::Truncation { bound, max_degree, .. } => Error::Truncation { bound, tol: s.tol, max_degree },
            other => other,
        };
        let (n, bound) = crate::special::truncation_degree(self.dim(), gamma, &models(xr * yr, xr * yr), target, cap_n)
            .map_err(report)?;
        let (data, _) = crate::special::truncation_degree(self.dim(), gamma, &models(xr, xr * rho), target, cap_data).map_err(report)?;
        Ok((n, data, bound))
    }

    /// Accelerated series: `N(x,y) - X^{-2l} N(x/X^2, y) - (rho/R)^{2l} N(x, rho^2 y/R^2) - sum e_n R^n Z_n / (d_k s_n)`.
    fn green_series(&self, x: &[f64], y: &[f64], xr: f64, yr: f64) -> Result<GreenValue> {
        let images = self.green_images(x, y, xr, yr)?;
        let (coeffs, bound, rate) = self.remainder_coefficients(xr, yr)?;
        let xhat: Vec<f64> = x.iter().map(|v| v / xr).collect();
        let yhat: Vec<f64> = y.iter().map(|v| v / yr).collect();
        let rest = self.system().zonal_series(&xhat, &yhat, &coeffs, rate);
        Ok(GreenValue { value: images - rest, tail_bound: bound, degree: coeffs.len() - 1, route: GreenRoute::Series })
    }

    /// `N(x,y) - X^{-2l} N(x/X^2, y) - (rho/R)^{2l} N(x, rho^2 y/R^2)`.
    pub(crate) fn green_images(&self, x: &[f64], y: &[f64], xr: f64, yr: f64) -> Result<f64> {
        let sys = self.system();
        let lam = sys.lambda();
        let rho = self.rho();
        let d = x.len();
        let n0 = sys.newton(x, y)?;
        let (mut x_img, mut y_img) = ([0.0; 3], [0.0; 3]);
        for j in 0..d {
            x_img[j] = x[j] / (xr * xr);
            y_img[j] = y[j] * rho * rho / (yr * yr);
        }
        let n1 = inv_pow(xr * xr, lam) * sys.newton(&x_img[..d], y)?;
        let n2 = (rho / yr).powf(2.0 * lam) * sys.newton(x, &y_img[..d])?;
        Ok(n0 - n1 - n2)
    }

    /// Remainder coefficients of the accelerated series, its tail bound and decay rate.
    pub(crate) fn remainder_coefficients(&self, xr: f64, yr: f64) -> Result<(Vec<f64>, f64, f64)> {
        let (models, rate) = self.remainder_models(xr, yr);
        let (n, bound) = match self.uniform_remainder {
            Some(nb) => nb,
            None => self.series_degree(&models, 1.0)?,
        };
        Ok((self.remainder_coefficients_to(xr, yr, n), bound, rate))
    }

    /// Both remainder models are dominated by scale `1/((1-rho^{2l}) d_k 2l)`
    /// and rate `rho` on the annulus, so one degree serves every radius pair.
    pub(crate) fn uniform_remainder_degree(&self) -> Option<(usize, f64)> {
        let sys = self.system();
        let lam = sys.lambda();
        let rho = self.rho();
        let base = 1.0 / ((1.0 - rho.powf(2.0 * lam)) * sys.d_k() * 2.0 * lam);
        let m = TailModel { scale: base, rate: rho };
        self.series_degree(&[m, m], 1.0).ok()
    }

    pub(crate) fn remainder_models(&self, xr: f64, yr: f64) -> ([TailModel; 2], f64) {
        let sys = self.system();
        let lam = sys.lambda();
        let rho = self.rho();
        let base = 1.0 / ((1.0 - rho.powf(2.0 * lam)) * sys.d_k() * 2.0 * lam);
        let m1 = TailModel { scale: (rho / yr).powf(2.0 * lam) * base, rate: rho * rho * xr / yr };
        let m2 = TailModel { scale: (rho / xr).powf(2.0 * lam) * base, rate: rho * rho * yr / xr };
        ([m1, m2], m1.rate.max(m2.rate))
    }

    pub(crate) fn remainder_coefficients_to(&self, xr: f64, yr: f64, n: usize) -> Vec<f64> {
        let sys = self.system();
        let lam = sys.lambda();
        let rho = self.rho();
        let d_k = sys.d_k();
        (0..=n)
            .map(|m| {
                let nf = m as f64;
                let s = 2.0 * lam + 2.0 * nf;
                let p = (s * rho.ln()).exp();
                let q = (s * (rho / yr).ln()).exp();
                let t1 = (p - q) * (nf * (xr * yr).ln()).exp();
                let t2 = p * (q - 1.0) * ((nf * yr.ln()) - (nf + 2.0 * lam) * xr.ln()).exp();
                (t1 + t2) / ((1.0 - p) * d_k * s)
            })
            .collect()
    }

    fn green_closed(&self, x: &[f64], y: &[f64], xr: f64, yr: f64) -> Result<GreenValue> {
        if !(yr < xr) {
            return Err(Error::OutOfRange(format!("the closed series needs |y| < |x| (got {yr} >= {xr})")));
        }
        let sys = self.system();
        if sys.roots().orbit_distance(x, y) <= COLLISION_RADIUS * xr {
            return Err(Error::Pole { distance: sys.roots().orbit_distance(x, y) });
        }
        let lam = sys.lambda();
        let rho = self.rho();
        let lead = inv_pow(xr * xr, lam) / sys.d_k();
        let rate = yr / xr;
        let models = [TailModel { scale: lead / (2.0 * lam * (1.0 - rho.powf(2.0 * lam))), rate }];
        let (n, bound) = self.series_degree(&models, lead)?;
        let coeffs: Vec<f64> = (0..=n)
            .map(|m| {
                let s = 2.0 * lam + 2.0 * m as f64;
                let p = (s * rho.ln()).exp();
                let q = (s * (rho / yr).ln()).exp();
                let xs = (s * xr.ln()).exp();
                lead * rate.powi(m as i32) * (1.0 - q) * (1.0 - xs) / ((1.0 - p) * s)
            })
            .collect();
        let xhat: Vec<f64> = x.iter().map(|v| v / xr).collect();
        let yhat: Vec<f64> = y.iter().map(|v| v / yr).collect();
        let value = sys.zonal_series(&xhat, &yhat, &coeffs, rate);
        Ok(GreenValue { value, tail_bound: bound, degree: n, route: GreenRoute::Closed })
    }

    /// Zonal series without image acceleration; converges slowly near the boundary.
    pub fn green_series_unaccelerated(&self, x: &[f64], y: &[f64]) -> Result<GreenValue> {
        let xr = self.open_norm(x)?;
        let yr = self.open_norm(y)?;
        let sys = self.system();
        let lam = sys.lambda();
        let rho = self.rho();
        let n0 = sys.newton(x, y)?;
        let base = 1.0 / (sys.d_k() * 2.0 * lam);
        let m1 = TailModel { scale: base, rate: xr * yr };
        let m2 = TailModel {
            scale: base * (rho / yr).powf(2.0 * lam) * inv_pow(xr * xr, lam) / (1.0 - rho.powf(2.0 * lam)),
            rate: rho * rho / (xr * yr),
        };
        let (n, bound) = self.series_degree(&[m1, m2], n0)?;
        let coeffs: Vec<f64> = (0..=n)
            .map(|m| {
                let nf = m as f64;
                let s = 2.0 * lam + 2.0 * nf;
                let a = self.coeff_a_radius(m, yr);
                let oma = self.coeff_one_minus_a_radius(m, yr);
                (a * (nf * (xr * yr).ln()).exp() + oma * (nf * yr.ln() - (nf + 2.0 * lam) * xr.ln()).exp()) / (sys.d_k() * s)
            })
            .collect();
        let xhat: Vec<f64> = x.iter().map(|v| v / xr).collect();
        let yhat: Vec<f64> = y.iter().map(|v| v / yr).collect();
        let value = n0 - sys.zonal_series(&xhat, &yhat, &coeffs, m1.rate.max(m2.rate));
        Ok(GreenValue { value, tail_bound: bound, degree: n, route: GreenRoute::Series })
    }

    /// Radius of the orbit balls actually used around `x`. The balls may
    /// cross the boundary spheres; nodes outside `A` carry no mass.
    pub fn local_radius(&self, x: &[f64], cutoff: f64) -> f64 {
        let orbit = self.system().roots().orbit(x);
        let mut sep = f64::INFINITY;
        for (i, p) in orbit.iter().enumerate() {
            for q in &orbit[i + 1..] {
                sep = sep.min(dist(p, q));
            }
        }
        cutoff.min(0.45 * sep)
    }

    /// `G_{k,A}[f](x) = int_A G(x,y) f(y) omega_k(y) dy`.
    ///
    /// The integrand is split with a smooth partition of unity: the part away
    /// from `W x` uses `rule`, the orbit balls use local polar rules (or are
    /// dropped and only bracketed, see [`PotentialConfig::drop_local`]).
    pub fn green_potential(&self, f: &dyn ScalarField, x: &[f64], rule: &QuadratureRule, cfg: &PotentialConfig) -> Result<PotentialEstimate> {
        self.open_norm(x)?;
        if rule.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: rule.dim() });
        }
        let sys = self.system();
        let r = self.local_radius(x, cfg.cutoff);
        let orbit = sys.roots().orbit(x);
        let near = |y: &[f64]| orbit.iter().map(|p| dist(p, y)).fold(f64::INFINITY, f64::min);
        let mut outer = 0.0;
        let mut sup_f: f64 = 0.0;
        for (y, w) in rule.iter() {
            let dy = near(y);
            let keep = if cfg.drop_local { if dy >= r { 1.0 } else { 0.0 } } else { smooth_step(dy / r) };
            let fy = f.eval(y);
            sup_f = sup_f.max(fy.abs());
            if keep == 0.0 || fy == 0.0 {
                continue;
            }
            let om = sys.weight(y);
            if om == 0.0 {
                continue;
            }
            let g = self.green(x, y, GreenRoute::Series)?.value;
            outer += w * om * fy * g * keep;
        }
        let mut local = 0.0;
        if !cfg.drop_local {
            for p in &orbit {
                let ball = ball_rule(p, r, cfg.local_radial, cfg.local_sphere)?;
                for (y, w) in ball.iter() {
                    let ry = norm(y);
                    if !(ry > self.rho() && ry < 1.0) {
                        continue;
                    }
                    let fy = f.eval(y);
                    sup_f = sup_f.max(fy.abs());
                    let om = sys.weight(y);
                    if fy == 0.0 || om == 0.0 {
                        continue;
                    }
                    let g = self.green(x, y, GreenRoute::Series)?.value;
                    local += w * om * fy * g * bump_profile(dist(p, y) / r);
                }
            }
        }
        let bracket = self.eta(x, r, cfg.local_radial, cfg.local_sphere)? * sup_f;
        if cfg.drop_local {
            if let Some(tol) = cfg.bracket_tol {
                if bracket > tol {
                    return Err(Error::BracketTooWide { bracket, tol });
                }
            }
        }
        Ok(PotentialEstimate { value: outer + local, local, bracket, radius: r })
    }

    /// `eta_{x,r} = int_{B^W(x,r)} N_k(x,y) omega_k(y) dy` by polar rules
    /// around the orbit points (each node assigned to its nearest orbit point).
    pub fn eta(&self, x: &[f64], r: f64, radial_order: usize, sphere_order: usize) -> Result<f64> {
        self.open_norm(x)?;
        if !(r > 0.0 && r < self.rho()) {
            return Err(Error::OutOfRange(format!("eta needs 0 < r < rho (got {r})")));
        }
        let sys = self.system();
        let orbit = sys.roots().orbit(x);
        let mut acc = 0.0;
        for (i, p) in orbit.iter().enumerate() {
            let ball = ball_rule(p, r, radial_order, sphere_order)?;
            for (y, w) in ball.iter() {
                let dp = dist(p, y);
                if orbit.iter().enumerate().any(|(j, q)| j != i && dist(q, y) < dp) {
                    continue;
                }
                let om = sys.weight(y);
                if om == 0.0 {
                    continue;
                }
                acc += w * om * sys.newton(x, y)?;
            }
        }
        Ok(acc)
    }

    /// Upper bound `N(x,0) d_k/(d+2 gamma) [(|x|+r)^{d+2gamma} - (|x|-r)^{d+2gamma}]`.
    pub fn eta_shell_bound(&self, x: &[f64], r: f64) -> f64 {
        let sys = self.system();
        let c = sys.constants();
        let e = self.dim() as f64 + 2.0 * c.gamma;
        let xr = norm(x);
        sys.newton_at_origin(x) * c.d_k / e * ((xr + r).powf(e) - (xr - r).max(0.0).powf(e))
    }
}
