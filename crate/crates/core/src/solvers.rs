//! Semilinear Dirichlet problem `Delta_k(u omega_k) = phi1 phi2(u) omega_k`,
//! `u = f` on the boundary, solved as the fixed point
//! `u = P_{k,A}[f] - G_{k,A}[phi1 phi2(u)]` by damped Picard iteration on a
//! tensor grid; the comparison-principle harness and the Poisson–Jensen check.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::dunkl::{LaplacianStencil, TestBump};
use crate::error::{Error, Result};
use crate::field::{dist, norm, ScalarField};
use crate::green::{bump_profile, smooth_step, GreenRoute, PotentialConfig};
use crate::kernels::{Annulus, BoundaryData};
use crate::quadrature::{ball_rule, gauss_legendre, sphere_rule, QuadratureRule};
use crate::special::truncation_degree;

/// Nondecreasing `phi2` with `phi2(0) = 0`, applied to `max(t, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Phi2 {
    Zero,
    /// `c t`, `c >= 0`.
    Linear(f64),
    /// `t^p`, `p > 0`.
    Power(f64),
    /// `t / (1 + t)`.
    Saturating,
}

impl Phi2 {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Phi2::Linear(c) if !(c >= 0.0 && c.is_finite()) => {
                Err(Error::InvalidInput(format!("linear phi2 needs a nonnegative slope (got {c})")))
            }
            Phi2::Power(p) if !(p > 0.0 && p.is_finite()) => {
                Err(Error::InvalidInput(format!("power phi2 needs a positive exponent (got {p})")))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match *self {
            Phi2::Zero => 0.0,
            Phi2::Linear(c) => c * t,
            Phi2::Power(p) => t.powf(p),
            Phi2::Saturating => t / (1.0 + t),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Phi2::Zero => "zero",
            Phi2::Linear(_) => "linear",
            Phi2::Power(_) => "power",
            Phi2::Saturating => "saturating",
        }
    }
}

/// Data of the semilinear problem.
#[derive(Clone, Copy)]
pub struct SemilinearProblem<'a> {
    pub annulus: &'a Annulus,
    /// Boundary data on `S(0,1)`.
    pub outer: &'a dyn ScalarField,
    /// Boundary data on `S(0,rho)`.
    pub inner: &'a dyn ScalarField,
    pub phi1: &'a dyn ScalarField,
    pub phi2: Phi2,
}

/// Discretisation of the semilinear solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SemilinearConfig {
    pub radial: usize,
    /// Sphere rule order (see [`sphere_rule`]).
    pub sphere: usize,
    /// Radius of the local balls around `W x`; defaults to 1.5 angular grid steps.
    pub local_radius: Option<f64>,
    pub local_radial: usize,
    pub local_sphere: usize,
    /// Damping `theta` in `u <- (1 - theta) u + theta T(u)`.
    pub theta: f64,
}

impl SemilinearConfig {
    pub fn for_dim(d: usize) -> Self {
        let (sphere, local_sphere) = if d == 2 { (64, 24) } else { (8, 6) };
        Self { radial: 32, sphere, local_radius: None, local_radial: 8, local_sphere, theta: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.radial == 0 || self.sphere == 0 || self.local_radial == 0 || self.local_sphere == 0 {
            return Err(Error::InvalidInput("grid orders must be positive".into()));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::InvalidInput(format!("damping must lie in (0, 1] (got {})", self.theta)));
        }
        if let Some(r) = self.local_radius {
            if !(r > 0.0) {
                return Err(Error::InvalidInput(format!("local radius must be positive (got {r})")));
            }
        }
        Ok(())
    }
}

/// Tensor grid: Gauss–Legendre radii in `(rho, 1)` times a sphere rule,
/// radius-major. Fields on it are interpolated multilinearly in
/// `(r, angle)`, with the boundary spheres as extra radial layers.
#[derive(Debug, Clone)]
pub struct AnnulusGrid {
    dim: usize,
    rho: f64,
    sphere_order: usize,
    radii: Vec<f64>,
    sphere: QuadratureRule,
    weights: Vec<f64>,
    /// `[rho, radii.., 1]`.
    knots: Vec<f64>,
    /// Sorted `cos(theta)` rings (d = 3).
    rings: Vec<f64>,
}

/// Interpolation weights on the layered values `[inner, grid.., outer]`.
#[derive(Debug, Clone, Copy)]
struct Stencil {
    idx: [usize; 8],
    w: [f64; 8],
    len: usize,
}

impl Stencil {
    fn push(&mut self, i: usize, w: f64) {
        if w != 0.0 {
            self.idx[self.len] = i;
            self.w[self.len] = w;
            self.len += 1;
        }
    }

    fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.idx[..self.len].iter().copied().zip(self.w[..self.len].iter().copied())
    }
}

impl AnnulusGrid {
    pub fn new(d: usize, rho: f64, radial: usize, sphere_order: usize) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::InvalidRadius { rho });
        }
        let (t, w) = gauss_legendre(radial)?;
        let h = 0.5 * (1.0 - rho);
        let radii: Vec<f64> = t.iter().map(|v| rho + h * (v + 1.0)).collect();
        let wr: Vec<f64> = w.iter().zip(&radii).map(|(v, r)| v * h * r.powi(d as i32 - 1)).collect();
        let sphere = sphere_rule(d, sphere_order)?;
        let mut weights = Vec::with_capacity(radial * sphere.len());
        for a in &wr {
            weights.extend(sphere.weights().iter().map(|s| a * s));
        }
        let mut knots = vec![rho];
        knots.extend_from_slice(&radii);
        knots.push(1.0);
        let rings = if d == 3 { gauss_legendre(sphere_order)?.0 } else { Vec::new() };
        Ok(Self { dim: d, rho, sphere_order, radii, sphere, weights, knots, rings })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn directions(&self) -> &QuadratureRule {
        &self.sphere
    }

    pub fn n_dirs(&self) -> usize {
        self.sphere.len()
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        let ns = self.n_dirs();
        let r = self.radii[i / ns];
        self.sphere.node(i % ns).iter().map(|v| r * v).collect()
    }

    /// Quadrature weight of node `i` for `int_A . dx`.
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// Largest angular step of the direction set.
    pub fn angular_step(&self) -> f64 {
        match self.dim {
            2 => 2.0 * PI / self.sphere_order as f64,
            _ => PI / self.sphere_order as f64,
        }
    }

    /// Multilinear interpolation stencil; `None` outside the closed annulus.
    fn stencil(&self, x: &[f64]) -> Option<Stencil> {
        let r = norm(x);
        if !(r >= self.rho * (1.0 - 1e-12) && r <= 1.0 + 1e-12) {
            return None;
        }
        let r = r.clamp(self.rho, 1.0);
        let k = match self.knots.partition_point(|v| *v <= r) {
            0 => 0,
            p => (p - 1).min(self.knots.len() - 2),
        };
        let t = ((r - self.knots[k]) / (self.knots[k + 1] - self.knots[k])).clamp(0.0, 1.0);
        let ns = self.n_dirs();
        let mut ang = [(0usize, 0.0f64); 4];
        let mut na = 0;
        let mut push = |i: usize, w: f64| {
            ang[na] = (i, w);
            na += 1;
        };
        let phi = x[1].atan2(x[0]).rem_euclid(2.0 * PI);
        match self.dim {
            2 => {
                let (j0, j1, s) = periodic(phi, ns);
                push(j0, 1.0 - s);
                push(j1, s);
            }
            _ => {
                let nphi = 2 * self.sphere_order;
                let (j0, j1, s) = periodic(phi, nphi);
                let c = x[2] / r;
                let m = self.rings.len();
                let p = self.rings.partition_point(|v| *v <= c);
                let (m0, m1, u) = if p == 0 {
                    (0, 0, 0.0)
                } else if p >= m {
                    (m - 1, m - 1, 0.0)
                } else {
                    (p - 1, p, (c - self.rings[p - 1]) / (self.rings[p] - self.rings[p - 1]))
                };
                push(m0 * nphi + j0, (1.0 - u) * (1.0 - s));
                push(m0 * nphi + j1, (1.0 - u) * s);
                if m1 != m0 {
                    push(m1 * nphi + j0, u * (1.0 - s));
                    push(m1 * nphi + j1, u * s);
                }
            }
        }
        let mut st = Stencil { idx: [0; 8], w: [0.0; 8], len: 0 };
        for (layer, lw) in [(k, 1.0 - t), (k + 1, t)] {
            for &(i, w) in &ang[..na] {
                st.push(layer * ns + i, lw * w);
            }
        }
        Some(st)
    }
}

/// Neighbouring indices and fraction for equispaced angles `2 pi (j + 1/2) / n`.
fn periodic(phi: f64, n: usize) -> (usize, usize, f64) {
    let s = phi * n as f64 / (2.0 * PI) - 0.5;
    let f = s.floor();
    let j0 = (f as i64).rem_euclid(n as i64) as usize;
    (j0, (j0 + 1) % n, s - f)
}

/// A field on the grid, extended by its boundary values.
#[derive(Debug, Clone)]
pub struct GridField {
    grid: Arc<AnnulusGrid>,
    /// Layers `[inner, radii.., outer]`, each `n_dirs` long.
    layered: Vec<f64>,
}

impl GridField {
    pub fn grid(&self) -> &AnnulusGrid {
        &self.grid
    }

    /// Values at the interior grid nodes.
    pub fn values(&self) -> &[f64] {
        let ns = self.grid.n_dirs();
        &self.layered[ns..self.layered.len() - ns]
    }
}

impl ScalarField for GridField {
    /// NaN outside the closed annulus.
    fn eval(&self, x: &[f64]) -> f64 {
        match self.grid.stencil(x) {
            Some(st) => st.iter().map(|(i, w)| w * self.layered[i]).sum(),
            None => f64::NAN,
        }
    }
}

/// How the Picard iteration starts.
#[derive(Debug, Clone, PartialEq)]
pub enum Initial {
    /// `u_0 = P_{k,A}[f]`.
    Poisson,
    Constant(f64),
    Values(Vec<f64>),
}

/// Residual and range of one iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterateRecord {
    pub residual: f64,
    pub min: f64,
    pub max: f64,
}

/// Converged solution on the grid.
#[derive(Debug, Clone)]
pub struct SemilinearSolution {
    pub field: GridField,
    /// `sup |u - T(u)|` on the grid.
    pub residual: f64,
    pub iterations: usize,
    pub history: Vec<IterateRecord>,
    pub bracket: (f64, f64),
}

impl ScalarField for SemilinearSolution {
    fn eval(&self, x: &[f64]) -> f64 {
        self.field.eval(x)
    }
}

/// The discrete fixed-point map `T(u) = P[f] - K phi2(u) - K_b phi2(f)`.
pub struct SemilinearOperator {
    grid: Arc<AnnulusGrid>,
    phi2: Phi2,
    poisson: Vec<f64>,
    /// Dense interior matrix, row-major.
    k: Vec<f64>,
    /// Contribution of the boundary layers per node.
    kb_values: Vec<f64>,
    /// Row sums of the boundary coefficients.
    kb_mass: Vec<f64>,
    boundary: (Vec<f64>, Vec<f64>),
    c1: f64,
    c2: f64,
}

impl SemilinearOperator {
    pub fn new(problem: &SemilinearProblem<'_>, cfg: &SemilinearConfig) -> Result<Self> {
        cfg.validate()?;
        problem.phi2.validate()?;
        let an = problem.annulus;
        let sys = an.system();
        let d = an.dim();
        let grid = Arc::new(AnnulusGrid::new(d, an.rho(), cfg.radial, cfg.sphere)?);
        let n = grid.len();
        let ns = grid.n_dirs();
        let nr = grid.radii().len();

        // Boundary data on the grid directions; must be nonnegative.
        let mut inner = Vec::with_capacity(ns);
        let mut outer = Vec::with_capacity(ns);
        for (xi, _) in grid.directions().iter() {
            let p: Vec<f64> = xi.iter().map(|v| v * an.rho()).collect();
            let (fi, fo) = (problem.inner.eval(&p), problem.outer.eval(xi));
            if !(fi >= 0.0 && fo >= 0.0 && fi.is_finite() && fo.is_finite()) {
                return Err(Error::InvalidInput(format!("boundary data must be finite and nonnegative (direction {xi:?})")));
            }
            inner.push(fi);
            outer.push(fo);
        }
        for (xi, _) in an.boundary_rule().iter() {
            let p: Vec<f64> = xi.iter().map(|v| v * an.rho()).collect();
            if !(problem.inner.eval(&p) >= 0.0 && problem.outer.eval(xi) >= 0.0) {
                return Err(Error::InvalidInput("boundary data must be nonnegative".into()));
            }
        }

        let sol = an.dirichlet_solve(BoundaryData { outer: problem.outer, inner: problem.inner }, an.boundary_rule())?;
        let dirs: Vec<f64> = grid.directions().iter().flat_map(|(x, _)| x.to_vec()).collect();
        let poisson: Vec<f64> = sol.evaluate_grid(grid.radii(), &dirs)?.iter().map(|e| e.value).collect();

        let mut colw = Vec::with_capacity(n);
        for j in 0..n {
            let y = grid.point(j);
            let p1 = problem.phi1.eval(&y);
            if !(p1 >= 0.0 && p1.is_finite()) {
                return Err(Error::InvalidInput(format!("phi1 must be finite and nonnegative (at {y:?})")));
            }
            colw.push(grid.weight(j) * sys.weight(&y) * p1);
        }

        // Remainder series of the accelerated Green function per radius pair.
        let c = sys.constants();
        let tol = an.series().tol;
        let mut rem = Vec::with_capacity(nr * nr);
        let mut len = 1;
        for &ra in grid.radii() {
            for &rb in grid.radii() {
                let (models, _) = an.remainder_models(ra, rb);
                let (m, _) = truncation_degree(d, c.gamma, &models, tol, an.series().max_degree)?;
                len = len.max(m + 1);
                rem.push(an.remainder_coefficients_to(ra, rb, m));
            }
        }
        let order = len / 2 + 2;
        let mut z = Vec::with_capacity(ns * ns * len);
        for (xi, _) in grid.directions().iter() {
            for (eta, _) in grid.directions().iter() {
                z.extend(sys.zonal_table(xi, eta, len, order));
            }
        }

        let base_radius = cfg.local_radius.unwrap_or(1.5 * grid.angular_step());
        let unit_ball = ball_rule(&vec![0.0; d], 1.0, cfg.local_radial, cfg.local_sphere)?;
        let mut k = vec![0.0; n * n];
        let mut kb_values = vec![0.0; n];
        let mut kb_mass = vec![0.0; n];
        let mut y = vec![0.0; d];
        for i in 0..n {
            let x = grid.point(i);
            let (a, di) = (i / ns, i % ns);
            let xr = grid.radii()[a];
            let orbit = sys.roots().orbit(&x);
            let r_loc = local_radius(&orbit, base_radius);
            let row = &mut k[i * n..(i + 1) * n];
            for j in 0..n {
                if colw[j] == 0.0 {
                    continue;
                }
                let yj = grid.point(j);
                let near = orbit.iter().map(|p| dist(p, &yj)).fold(f64::INFINITY, f64::min);
                let keep = smooth_step(near / r_loc);
                if keep == 0.0 {
                    continue;
                }
                let (b, dj) = (j / ns, j % ns);
                let yr = grid.radii()[b];
                let coeffs = &rem[a * nr + b];
                let zt = &z[(di * ns + dj) * len..(di * ns + dj + 1) * len];
                let rest: f64 = coeffs.iter().zip(zt).map(|(p, q)| p * q).sum();
                let g = (an.green_images(&x, &yj, xr, yr)? - rest).max(0.0);
                row[j] += keep * g * colw[j];
            }
            for p in &orbit {
                for (u, w) in unit_ball.iter() {
                    for m in 0..d {
                        y[m] = p[m] + r_loc * u[m];
                    }
                    let ry = norm(&y);
                    if !(ry > an.rho() && ry < 1.0) {
                        continue;
                    }
                    let psi = bump_profile(dist(p, &y) / r_loc);
                    let om = sys.weight(&y);
                    let p1 = problem.phi1.eval(&y);
                    if psi == 0.0 || om == 0.0 || p1 == 0.0 {
                        continue;
                    }
                    if !(p1 >= 0.0 && p1.is_finite()) {
                        return Err(Error::InvalidInput(format!("phi1 must be finite and nonnegative (at {y:?})")));
                    }
                    let g = an.green(&x, &y, GreenRoute::Series)?.value.max(0.0);
                    let coef = w * r_loc.powi(d as i32) * psi * g * om * p1;
                    let st = grid.stencil(&y).expect("point inside the annulus");
                    for (idx, wt) in st.iter() {
                        let layer = idx / ns;
                        if layer == 0 {
                            kb_values[i] += coef * wt * problem.phi2.eval(inner[idx % ns]);
                            kb_mass[i] += coef * wt;
                        } else if layer == nr + 1 {
                            kb_values[i] += coef * wt * problem.phi2.eval(outer[idx % ns]);
                            kb_mass[i] += coef * wt;
                        } else {
                            row[idx - ns] += coef * wt;
                        }
                    }
                }
            }
        }

        let c2 = poisson
            .iter()
            .chain(&inner)
            .chain(&outer)
            .fold(f64::NEG_INFINITY, |m, v| m.max(*v));
        let p2 = problem.phi2.eval(c2);
        let c1 = (0..n)
            .map(|i| poisson[i] - p2 * (k[i * n..(i + 1) * n].iter().sum::<f64>() + kb_mass[i]))
            .fold(f64::INFINITY, f64::min);
        Ok(Self { grid, phi2: problem.phi2, poisson, k, kb_values, kb_mass, boundary: (inner, outer), c1, c2 })
    }

    pub fn grid(&self) -> &AnnulusGrid {
        &self.grid
    }

    /// `P_{k,A}[f]` at the grid nodes.
    pub fn poisson(&self) -> &[f64] {
        &self.poisson
    }

    /// `(c1, c2)` with `c2 = max P[f]` and `c1 = min (P[f] - phi2(c2) G[phi1])`.
    pub fn bracket(&self) -> (f64, f64) {
        (self.c1, self.c2)
    }

    /// `G_{k,A}[phi1]` at the grid nodes.
    pub fn potential_of_phi1(&self) -> Vec<f64> {
        let n = self.grid.len();
        (0..n).map(|i| self.k[i * n..(i + 1) * n].iter().sum::<f64>() + self.kb_mass[i]).collect()
    }

    /// `T(u)` at the grid nodes.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = self.grid.len();
        assert_eq!(u.len(), n, "grid field has the wrong length");
        let v: Vec<f64> = u.iter().map(|t| self.phi2.eval(*t)).collect();
        (0..n)
            .map(|i| {
                let row = &self.k[i * n..(i + 1) * n];
                let s: f64 = row.iter().zip(&v).map(|(a, b)| a * b).sum();
                self.poisson[i] - s - self.kb_values[i]
            })
            .collect()
    }

    /// Grid field with the boundary data as outer layers.
    pub fn field(&self, values: Vec<f64>) -> GridField {
        let mut layered = self.boundary.0.clone();
        layered.extend(values);
        layered.extend_from_slice(&self.boundary.1);
        GridField { grid: self.grid.clone(), layered }
    }

    /// Damped Picard iteration until `sup |u - T(u)| < tol`.
    pub fn solve(&self, init: &Initial, theta: f64, tol: f64, max_iter: usize) -> Result<SemilinearSolution> {
        if !(tol > 0.0) {
            return Err(Error::InvalidInput(format!("tolerance must be positive (got {tol})")));
        }
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::InvalidInput(format!("damping must lie in (0, 1] (got {theta})")));
        }
        let n = self.grid.len();
        let mut u = match init {
            Initial::Poisson => self.poisson.clone(),
            Initial::Constant(c) => vec![*c; n],
            Initial::Values(v) => {
                if v.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: v.len() });
                }
                v.clone()
            }
        };
        let slack = 1e-12 * self.c1.abs().max(self.c2.abs()).max(1.0);
        let mut history = Vec::new();
        for it in 0..=max_iter {
            let (lo, hi) = u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
            if lo < self.c1 - slack || hi > self.c2 + slack {
                let value = if lo < self.c1 - slack { lo } else { hi };
                return Err(Error::BracketViolation { lower: self.c1, upper: self.c2, value, iteration: it });
            }
            let t = self.apply(&u);
            let residual = u.iter().zip(&t).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            history.push(IterateRecord { residual, min: lo, max: hi });
            if residual < tol {
                return Ok(SemilinearSolution {
                    field: self.field(u),
                    residual,
                    iterations: it,
                    history,
                    bracket: (self.c1, self.c2),
                });
            }
            if it == max_iter {
                return Err(Error::NoConvergence { iterations: max_iter, residual });
            }
            for (a, b) in u.iter_mut().zip(&t) {
                *a = (1.0 - theta) * *a + theta * b;
            }
        }
        unreachable!("loop returns")
    }
}

fn local_radius(orbit: &[Vec<f64>], base: f64) -> f64 {
    let mut sep = f64::INFINITY;
    for (i, p) in orbit.iter().enumerate() {
        for q in &orbit[i + 1..] {
            sep = sep.min(dist(p, q));
        }
    }
    base.min(0.45 * sep)
}

/// Builds the operator and iterates from `P_{k,A}[f]`.
pub fn semilinear_solve(problem: &SemilinearProblem<'_>, cfg: &SemilinearConfig, tol: f64, max_iter: usize) -> Result<SemilinearSolution> {
    SemilinearOperator::new(problem, cfg)?.solve(&Initial::Poisson, cfg.theta, tol, max_iter)
}

/// Outcome of [`comparison_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Hypotheses certified and `v <= u + tol` at all samples.
    Ordered,
    /// Hypotheses certified but `v > u + tol` somewhere.
    Violated,
    /// Hypotheses could not be certified.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub verdict: Verdict,
    /// `min_phi <Delta_k((v-u) omega), phi> - int (phi(.,v) - phi(.,u)) phi omega`.
    pub distributional_min: f64,
    /// `max (v - u)` on the boundary samples.
    pub boundary_max: f64,
    /// `max (v - u)` over the interior samples.
    pub max_excess: f64,
}

/// Test functions, quadrature and tolerances of [`comparison_check`].
#[derive(Debug, Clone)]
pub struct ComparisonConfig {
    pub bumps: Vec<TestBump>,
    pub unit_ball: QuadratureRule,
    pub stencil: LaplacianStencil,
    /// Admissible negative part of the distributional inequality and of the boundary excess.
    pub certify_tol: f64,
    /// Admissible `v - u` at the samples.
    pub tol: f64,
    pub boundary_order: usize,
}

impl ComparisonConfig {
    pub fn new(annulus: &Annulus, count: usize) -> Result<Self> {
        let d = annulus.dim();
        Ok(Self {
            bumps: test_bumps(annulus, count, 0.1)?,
            unit_ball: ball_rule(&vec![0.0; d], 1.0, 24, if d == 2 { 64 } else { 12 })?,
            stencil: LaplacianStencil::default(),
            certify_tol: 1e-6,
            tol: 1e-5,
            boundary_order: if d == 2 { 64 } else { 12 },
        })
    }
}

/// Deterministic bumps of radius `r` centred on the middle sphere, clear of
/// the reflecting hyperplanes and of the boundary.
pub fn test_bumps(annulus: &Annulus, count: usize, r: f64) -> Result<Vec<TestBump>> {
    let d = annulus.dim();
    let mid = 0.5 * (1.0 + annulus.rho());
    if !(r > 0.0 && mid - r > annulus.rho() && mid + r < 1.0) {
        return Err(Error::InvalidInput(format!("bump radius {r} does not fit in the annulus")));
    }
    let guard = LaplacianStencil::default().guard();
    let roots = annulus.system().roots().roots();
    let golden = PI * (3.0 - 5f64.sqrt());
    let mut out = Vec::with_capacity(count);
    let mut m = 0usize;
    while out.len() < count && m < 100 * count + 100 {
        let dir: Vec<f64> = match d {
            2 => {
                let t = 0.3 + golden * m as f64;
                vec![t.cos(), t.sin()]
            }
            _ => {
                let z = 1.0 - (m as f64 + 0.5) * 2.0 / (count as f64 + 7.0);
                let z = z.clamp(-0.95, 0.95);
                let s = (1.0 - z * z).sqrt();
                let t = 0.3 + golden * m as f64;
                vec![s * t.cos(), s * t.sin(), z]
            }
        };
        m += 1;
        let c: Vec<f64> = dir.iter().map(|v| v * mid).collect();
        if roots.iter().any(|q| q.multiplicity > 0.0 && c[q.axis].abs() - r < guard) {
            continue;
        }
        out.push(TestBump::new(c, r)?);
    }
    if out.len() < count {
        return Err(Error::InvalidInput("could not place enough test bumps".into()));
    }
    Ok(out)
}

/// Checks the comparison principle on `u`, `v`: certifies
/// `Delta_k(u omega) - phi(.,u) omega <= Delta_k(v omega) - phi(.,v) omega`
/// against the test bumps and `v <= u` on the boundary, then tests `v <= u`
/// at `samples` (flat, `d` coordinates each).
pub fn comparison_check(
    annulus: &Annulus,
    u: &dyn ScalarField,
    v: &dyn ScalarField,
    phi1: &dyn ScalarField,
    phi2: Phi2,
    samples: &[f64],
    cfg: &ComparisonConfig,
) -> Result<ComparisonReport> {
    let sys = annulus.system();
    let d = annulus.dim();
    let diff = |y: &[f64]| v.eval(y) - u.eval(y);
    let reaction = |y: &[f64]| phi1.eval(y) * (phi2.eval(v.eval(y)) - phi2.eval(u.eval(y)));
    let mut dist_min = f64::INFINITY;
    for b in &cfg.bumps {
        let lap = sys.pair_with_laplacian(&diff, b, &cfg.unit_ball, &cfg.stencil)?;
        let re = sys.pair_with_bump(&reaction, b, &cfg.unit_ball)?;
        let mass = sys.pair_with_bump(&|_: &[f64]| 1.0, b, &cfg.unit_ball)?;
        dist_min = dist_min.min((lap - re) / mass);
    }
    let sphere = sphere_rule(d, cfg.boundary_order)?;
    let mut boundary_max = f64::NEG_INFINITY;
    for (xi, _) in sphere.iter() {
        let p: Vec<f64> = xi.iter().map(|t| t * annulus.rho()).collect();
        boundary_max = boundary_max.max(diff(xi)).max(diff(&p));
    }
    let max_excess = samples.chunks_exact(d).map(diff).fold(f64::NEG_INFINITY, f64::max);
    let certified = dist_min >= -cfg.certify_tol && boundary_max <= cfg.certify_tol;
    let verdict = if !certified {
        Verdict::Inconclusive
    } else if max_excess <= cfg.tol {
        Verdict::Ordered
    } else {
        Verdict::Violated
    };
    Ok(ComparisonReport { verdict, distributional_min: dist_min, boundary_max, max_excess })
}

/// The Riesz measure `Delta_k(u omega_k)` of a subharmonic function.
pub enum RieszMeasure<'a> {
    Zero,
    /// Points and nonnegative masses.
    Atoms(Vec<(Vec<f64>, f64)>),
    /// Nonnegative density against `omega_k dx`.
    Density(&'a dyn ScalarField),
}

#[derive(Debug, Clone)]
pub struct PoissonJensenConfig {
    /// Annulus rule for density potentials.
    pub rule: QuadratureRule,
    pub potential: PotentialConfig,
}

impl PoissonJensenConfig {
    pub fn new(annulus: &Annulus) -> Result<Self> {
        let d = annulus.dim();
        let (nr, ns) = if d == 2 { (48, 160) } else { (64, 48) };
        Ok(Self { rule: crate::quadrature::annulus_rule(d, annulus.rho(), nr, ns)?, potential: PotentialConfig::default() })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonJensenReport {
    pub defects: Vec<f64>,
    pub max_defect: f64,
}

/// Defect of `u(x) = P_{k,A}[u](x) - int G_{k,A}(x,y) dnu(y)` at the samples.
pub fn poisson_jensen_check(
    annulus: &Annulus,
    u: &dyn ScalarField,
    nu: &RieszMeasure<'_>,
    samples: &[f64],
    cfg: &PoissonJensenConfig,
) -> Result<PoissonJensenReport> {
    let d = annulus.dim();
    if let RieszMeasure::Atoms(atoms) = nu {
        for (p, m) in atoms {
            annulus.open_norm(p)?;
            if !(*m >= 0.0 && m.is_finite()) {
                return Err(Error::InvalidInput(format!("atom mass must be nonnegative (got {m})")));
            }
        }
    }
    if let RieszMeasure::Density(g) = nu {
        for (y, _) in cfg.rule.iter() {
            let v = g.eval(y);
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("Riesz density must be nonnegative (got {v} at {y:?})")));
            }
        }
    }
    let sol = annulus.dirichlet_solve(BoundaryData { outer: u, inner: u }, annulus.boundary_rule())?;
    let mut defects = Vec::with_capacity(samples.len() / d);
    for x in samples.chunks_exact(d) {
        let pu = sol.evaluate(x)?.value;
        let pot = match nu {
            RieszMeasure::Zero => 0.0,
            RieszMeasure::Atoms(atoms) => {
                let mut s = 0.0;
                for (p, m) in atoms {
                    s += m * annulus.green(x, p, GreenRoute::Series)?.value;
                }
                s
            }
            RieszMeasure::Density(g) => annulus.green_potential(*g, x, &cfg.rule, &cfg.potential)?.value,
        };
        defects.push((u.eval(x) - pu + pot).abs());
    }
    let max_defect = defects.iter().copied().fold(0.0, f64::max);
    Ok(PoissonJensenReport { defects, max_defect })
}
