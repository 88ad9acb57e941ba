//! Deterministic quadrature rules: Gauss–Jacobi on intervals, tensor rules on
//! spheres, annuli and balls, and the intertwining measures `mu_y`.

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::roots::RootSystem;

/// What a rule integrates over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Sphere,
    Interval,
    Annulus,
    Ball,
    Mu,
}

/// Nodes (stored flat, `dim` coordinates each) and positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    dim: usize,
    domain: Domain,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn new(dim: usize, domain: Domain, nodes: Vec<f64>, weights: Vec<f64>) -> Self {
        assert_eq!(nodes.len(), dim * weights.len(), "node/weight count mismatch");
        Self { dim, domain, nodes, weights }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.nodes.chunks_exact(self.dim.max(1)).zip(self.weights.iter().copied())
    }

    /// Compensated (Neumaier) sum of `w_i f(x_i)`.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        let mut sum = 0.0;
        let mut comp = 0.0;
        for (x, w) in self.iter() {
            let v = w * f(x);
            let t = sum + v;
            comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
            sum = t;
        }
        sum + comp
    }
}

/// Gauss–Jacobi nodes and weights for `(1-t)^alpha (1+t)^beta` on `[-1,1]`:
/// Golub–Welsch eigenvalues refined by Newton steps. Weights sum to the weight's mass.
pub fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::OutOfRange("quadrature order must be at least 1".into()));
    }
    if !(alpha > -1.0 && beta > -1.0) {
        return Err(Error::OutOfRange(format!("Jacobi exponents must exceed -1 (got {alpha}, {beta})")));
    }
    let ab = alpha + beta;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let fi = i as f64;
        m[(i, i)] = if i == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * fi + ab) * (2.0 * fi + ab + 2.0))
        };
    }
    for i in 1..n {
        let fi = i as f64;
        let b = if i == 1 {
            2.0 / (2.0 + ab) * ((1.0 + alpha) * (1.0 + beta) / (3.0 + ab)).sqrt()
        } else {
            let s = 2.0 * fi + ab;
            2.0 / s * (fi * (fi + alpha) * (fi + beta) * (fi + ab) / ((s - 1.0) * (s + 1.0))).sqrt()
        };
        m[(i - 1, i)] = b;
        m[(i, i - 1)] = b;
    }
    let mass = ((ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(alpha + 1.0) + ln_gamma(beta + 1.0) - ln_gamma(ab + 2.0)).exp();
    let eig = SymmetricEigen::new(m);
    let mut x: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    x.sort_by(|a, b| a.total_cmp(b));
    // Newton polish of the eigenvalues; weights from the derivative formula.
    let mut w = Vec::with_capacity(n);
    for t in x.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = jacobi_with_derivative(n, alpha, beta, *t);
            let step = p / dp;
            if step.is_finite() && step.abs() < 1e-6 {
                *t -= step;
            }
        }
        let (_, dp) = jacobi_with_derivative(n, alpha, beta, *t);
        w.push(1.0 / ((1.0 - *t * *t) * dp * dp));
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v *= mass / total);
    Ok((x, w))
}

/// `P_n^{(alpha,beta)}(x)` and its derivative.
fn jacobi_with_derivative(n: usize, alpha: f64, beta: f64, x: f64) -> (f64, f64) {
    let ab = alpha + beta;
    let mut p0 = 1.0;
    let mut p1 = (alpha + 1.0) + 0.5 * (ab + 2.0) * (x - 1.0);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let s = 2.0 * k + ab;
        let a1 = 2.0 * k * (k + ab) * (s - 2.0);
        let a2 = (s - 1.0) * (s * (s - 2.0) * x + alpha * alpha - beta * beta);
        let a3 = 2.0 * (k + alpha - 1.0) * (k + beta - 1.0) * s;
        let p2 = (a2 * p1 - a3 * p0) / a1;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let s = 2.0 * nf + ab;
    let dp = (nf * ((alpha - beta) - s * x) * p1 + 2.0 * (nf + alpha) * (nf + beta) * p0) / (s * (1.0 - x * x));
    (p1, dp)
}

/// Gauss–Legendre nodes and weights on `[-1,1]`.
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let (x, w) = gauss_jacobi(n, 0.0, 0.0)?;
    // Symmetrise to remove eigen-solver asymmetry.
    let xs: Vec<f64> = (0..n).map(|i| 0.5 * (x[i] - x[n - 1 - i])).collect();
    let ws: Vec<f64> = (0..n).map(|i| 0.5 * (w[i] + w[n - 1 - i])).collect();
    Ok((xs, ws))
}

/// Gauss–Legendre rule on `[a, b]`.
pub fn interval_rule(a: f64, b: f64, n: usize) -> Result<QuadratureRule> {
    if !(b > a) {
        return Err(Error::OutOfRange(format!("empty interval [{a}, {b}]")));
    }
    let (x, w) = gauss_legendre(n)?;
    let h = 0.5 * (b - a);
    let nodes = x.iter().map(|t| a + h * (t + 1.0)).collect();
    let weights = w.iter().map(|v| v * h).collect();
    Ok(QuadratureRule::new(1, Domain::Interval, nodes, weights))
}

/// Tensor rule on the unit sphere `S^{d-1}`.
///
/// `d = 2`: `order` equispaced angles offset by half a step. `d = 3`:
/// `order` Gauss–Legendre nodes in `cos(theta)` times `2*order` equispaced
/// longitudes (offset by half a step).
pub fn sphere_rule(d: usize, order: usize) -> Result<QuadratureRule> {
    use std::f64::consts::PI;
    if order == 0 {
        return Err(Error::OutOfRange("sphere rule order must be at least 1".into()));
    }
    match d {
        2 => {
            let h = 2.0 * PI / order as f64;
            let mut nodes = Vec::with_capacity(2 * order);
            for j in 0..order {
                let th = h * (j as f64 + 0.5);
                nodes.extend([th.cos(), th.sin()]);
            }
            Ok(QuadratureRule::new(2, Domain::Sphere, nodes, vec![h; order]))
        }
        3 => {
            let (c, w) = gauss_legendre(order)?;
            let nphi = 2 * order;
            let h = 2.0 * PI / nphi as f64;
            let mut nodes = Vec::with_capacity(3 * order * nphi);
            let mut weights = Vec::with_capacity(order * nphi);
            for (ci, wi) in c.iter().zip(&w) {
                let s = (1.0 - ci * ci).max(0.0).sqrt();
                for j in 0..nphi {
                    let ph = h * (j as f64 + 0.5);
                    nodes.extend([s * ph.cos(), s * ph.sin(), *ci]);
                    weights.push(wi * h);
                }
            }
            Ok(QuadratureRule::new(3, Domain::Sphere, nodes, weights))
        }
        _ => Err(Error::UnsupportedDimension(d)),
    }
}

/// Number of directions produced by [`sphere_rule`].
pub fn sphere_rule_len(d: usize, order: usize) -> usize {
    if d == 3 {
        2 * order * order
    } else {
        order
    }
}

/// Gauss–Legendre in the radius on `[rho, 1]` (Jacobian `r^{d-1}`) tensored
/// with [`sphere_rule`]. Nodes are ordered radius-major.
pub fn annulus_rule(d: usize, rho: f64, radial_order: usize, sphere_order: usize) -> Result<QuadratureRule> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidRadius { rho });
    }
    shell_rule(d, &vec![0.0; d], rho, 1.0, radial_order, sphere_order, Domain::Annulus)
}

/// Polar rule on the ball `B(center, radius)`; radial Gauss–Legendre on
/// `[0, radius]` with Jacobian `s^{d-1}`.
pub fn ball_rule(center: &[f64], radius: f64, radial_order: usize, sphere_order: usize) -> Result<QuadratureRule> {
    if !(radius > 0.0) {
        return Err(Error::OutOfRange(format!("ball radius must be positive (got {radius})")));
    }
    shell_rule(center.len(), center, 0.0, radius, radial_order, sphere_order, Domain::Ball)
}

fn shell_rule(
    d: usize,
    center: &[f64],
    r0: f64,
    r1: f64,
    radial_order: usize,
    sphere_order: usize,
    domain: Domain,
) -> Result<QuadratureRule> {
    let radial = interval_rule(r0, r1, radial_order)?;
    let sphere = sphere_rule(d, sphere_order)?;
    let mut nodes = Vec::with_capacity(d * radial.len() * sphere.len());
    let mut weights = Vec::with_capacity(radial.len() * sphere.len());
    for (r, wr) in radial.iter() {
        let r = r[0];
        let jac = wr * r.powi(d as i32 - 1);
        for (xi, ws) in sphere.iter() {
            nodes.extend(xi.iter().zip(center).map(|(a, c)| c + r * a));
            weights.push(jac * ws);
        }
    }
    Ok(QuadratureRule::new(d, domain, nodes, weights))
}

/// Ratio between successive panel widths of graded `mu` rules.
pub(crate) const GRADING: f64 = 0.3;

/// Flat tensor template for `mu_y`: coordinate `coords[m]` of `y` is scaled by
/// `t[node*M + m]`. Weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct MuTemplate {
    coords: Vec<usize>,
    t: Vec<f64>,
    w: Vec<f64>,
}

fn normalised(mut w: Vec<f64>) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// One-dimensional rule for the density `(1-t)^{k-1}(1+t)^k`, weights summing to one.
fn mu_1d(k: f64, order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let (t, w) = gauss_jacobi(order, k - 1.0, k)?;
    Ok((t, normalised(w)))
}

/// Nodes and weights for the normalised density of [`mu_1d`] restricted to
/// `[a, b]`, with Jacobi factors at whichever endpoint is `-1` or `1`.
pub(crate) fn mu_piece(k: f64, a: f64, b: f64, order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mass = (2.0 * k * std::f64::consts::LN_2 + statrs::function::beta::ln_beta(k, k + 1.0)).exp();
    let h = 0.5 * (b - a);
    let (ja, jb) = (if b >= 1.0 { k - 1.0 } else { 0.0 }, if a <= -1.0 { k } else { 0.0 });
    let (u, wu) = gauss_jacobi(order, ja, jb)?;
    let mut t = Vec::with_capacity(order);
    let mut w = Vec::with_capacity(order);
    for (ui, wi) in u.iter().zip(&wu) {
        let x = a + h * (ui + 1.0);
        // Factors absorbed by the Jacobi weight are rescaled, the rest evaluated.
        let right = if ja != 0.0 { h.powf(ja) } else { (1.0 - x).powf(k - 1.0) };
        let left = if jb != 0.0 { h.powf(jb) } else { (1.0 + x).powf(k) };
        t.push(x);
        w.push(wi * h * right * left / mass);
    }
    Ok((t, w))
}

/// Composite rule for the same density, geometrically graded towards both
/// endpoints. End panels use Jacobi weights for the endpoint factor.
fn mu_1d_graded(k: f64, levels: usize, q: usize, ratio: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let deltas: Vec<f64> = (0..levels).map(|j| 0.5 * ratio.powi(j as i32)).collect();
    let mut brk = vec![-1.0];
    brk.extend(deltas.iter().rev().map(|d| -1.0 + d));
    brk.extend(deltas.iter().map(|d| 1.0 - d));
    brk.push(1.0);
    let density = |t: f64| (1.0 - t).powf(k - 1.0) * (1.0 + t).powf(k);
    let (gl_x, gl_w) = gauss_legendre(q)?;
    let (left_x, left_w) = gauss_jacobi(q, 0.0, k)?;
    let (right_x, right_w) = gauss_jacobi(q, k - 1.0, 0.0)?;
    let npan = brk.len() - 1;
    let mut t = Vec::new();
    let mut w = Vec::new();
    for p in 0..npan {
        let (a, b) = (brk[p], brk[p + 1]);
        let h = 0.5 * (b - a);
        if p == 0 {
            for (u, wu) in left_x.iter().zip(&left_w) {
                let x = a + h * (u + 1.0);
                t.push(x);
                w.push(wu * h * h.powf(k) * (1.0 - x).powf(k - 1.0));
            }
        } else if p == npan - 1 {
            for (u, wu) in right_x.iter().zip(&right_w) {
                let x = a + h * (u + 1.0);
                t.push(x);
                w.push(wu * h * h.powf(k - 1.0) * (1.0 + x).powf(k));
            }
        } else {
            for (u, wu) in gl_x.iter().zip(&gl_w) {
                let x = a + h * (u + 1.0);
                t.push(x);
                w.push(wu * h * density(x));
            }
        }
    }
    Ok((t, normalised(w)))
}

impl MuTemplate {
    /// Gauss–Jacobi tensor rule with `order` nodes per flipped coordinate.
    pub fn new(roots: &RootSystem, order: usize) -> Result<Self> {
        let parts = roots
            .roots()
            .iter()
            .filter(|r| r.multiplicity > 0.0)
            .map(|r| Ok((r.axis, mu_1d(r.multiplicity, order)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::tensor(parts))
    }

    /// Composite rule graded towards `t = +-1` with `levels` geometric panels
    /// at each end and `q` nodes per panel.
    pub fn graded(roots: &RootSystem, levels: usize, q: usize) -> Result<Self> {
        let parts = roots
            .roots()
            .iter()
            .filter(|r| r.multiplicity > 0.0)
            .map(|r| Ok((r.axis, mu_1d_graded(r.multiplicity, levels, q, GRADING)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::tensor(parts))
    }

    fn tensor(parts: Vec<(usize, (Vec<f64>, Vec<f64>))>) -> Self {
        let coords: Vec<usize> = parts.iter().map(|p| p.0).collect();
        let mut t: Vec<f64> = Vec::new();
        let mut w = vec![1.0];
        let mut m = 0;
        for (_, (pt, pw)) in &parts {
            let mut nt = Vec::with_capacity((m + 1) * w.len() * pt.len());
            let mut nw = Vec::with_capacity(w.len() * pt.len());
            for (i, wi) in w.iter().enumerate() {
                for (tj, wj) in pt.iter().zip(pw) {
                    nt.extend_from_slice(&t[i * m..(i + 1) * m]);
                    nt.push(*tj);
                    nw.push(wi * wj);
                }
            }
            t = nt;
            w = nw;
            m += 1;
        }
        Self { coords, t, w }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// Flipped coordinates.
    pub fn coords(&self) -> &[usize] {
        &self.coords
    }

    /// Calls `f(<z, v>, weight)` for every node `z` of `mu_y`.
    #[inline]
    pub fn for_each_dot(&self, y: &[f64], v: &[f64], mut f: impl FnMut(f64, f64)) {
        let m = self.coords.len();
        let mut p0: f64 = y.iter().zip(v).map(|(a, b)| a * b).sum();
        match m {
            0 => f(p0, 1.0),
            1 => {
                let c = self.coords[0];
                let p = y[c] * v[c];
                p0 -= p;
                for (t, w) in self.t.iter().zip(&self.w) {
                    f(p0 + t * p, *w);
                }
            }
            2 => {
                let (c1, c2) = (self.coords[0], self.coords[1]);
                let (q1, q2) = (y[c1] * v[c1], y[c2] * v[c2]);
                p0 -= q1 + q2;
                for (t, w) in self.t.chunks_exact(2).zip(&self.w) {
                    f(p0 + t[0] * q1 + t[1] * q2, *w);
                }
            }
            _ => {
                let p: Vec<f64> = self.coords.iter().map(|&c| y[c] * v[c]).collect();
                p0 -= p.iter().sum::<f64>();
                for (t, w) in self.t.chunks_exact(m).zip(&self.w) {
                    f(p0 + t.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>(), *w);
                }
            }
        }
    }

    /// Calls `f(z, weight)` for every node `z` of `mu_y`.
    pub fn for_each_point(&self, y: &[f64], mut f: impl FnMut(&[f64], f64)) {
        let m = self.coords.len();
        let mut z = y.to_vec();
        if m == 0 {
            f(&z, 1.0);
            return;
        }
        for (t, w) in self.t.chunks_exact(m).zip(&self.w) {
            for (c, tc) in self.coords.iter().zip(t) {
                z[*c] = y[*c] * tc;
            }
            f(&z, *w);
        }
    }

    /// Materialised rule for the base point `y`.
    pub fn rule(&self, y: &[f64]) -> QuadratureRule {
        let mut nodes = Vec::with_capacity(y.len() * self.len());
        let mut weights = Vec::with_capacity(self.len());
        self.for_each_point(y, |z, w| {
            nodes.extend_from_slice(z);
            weights.push(w);
        });
        QuadratureRule::new(y.len(), Domain::Mu, nodes, weights)
    }
}

/// Quadrature rule for `mu_y` with `order` Gauss–Jacobi nodes per flipped coordinate.
pub fn mu_rule(roots: &RootSystem, y: &[f64], order: usize) -> Result<QuadratureRule> {
    if y.len() != roots.dim() {
        return Err(Error::DimensionMismatch { expected: roots.dim(), found: y.len() });
    }
    Ok(MuTemplate::new(roots, order)?.rule(y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn jacobi_moment(p: i32, alpha: f64, beta: f64) -> f64 {
        // Reference by a fine composite midpoint rule after substitution removing endpoint singularities.
        let n = 400_000;
        let mut s = 0.0;
        for i in 0..n {
            let t = -1.0 + 2.0 * (i as f64 + 0.5) / n as f64;
            s += t.powi(p) * (1.0 - t).powf(alpha) * (1.0 + t).powf(beta);
        }
        s * 2.0 / n as f64
    }

    #[test]
    fn jacobi_exact_on_polynomials_odd_and_even() {
        for &n in &[7usize, 8, 15, 16, 33] {
            let (x, w) = gauss_jacobi(n, 0.0, 1.0).unwrap();
            for p in 0..(2 * n as i32 - 1).min(12) {
                let q: f64 = x.iter().zip(&w).map(|(t, v)| v * t.powi(p)).sum();
                let exact = jacobi_moment(p, 0.0, 1.0);
                assert!((q - exact).abs() < 1e-8, "n={n} p={p}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn jacobi_mass() {
        let (_, w) = gauss_jacobi(10, 0.5, 1.5).unwrap();
        // B(1.5, 2.5) * 2^3 = Gamma(1.5)Gamma(2.5)/Gamma(4) * 8
        let exact = 0.886_226_925_452_758 * 1.329_340_388_179_137 / 6.0 * 8.0;
        assert!((w.iter().sum::<f64>() - exact).abs() < 1e-13);
    }

    #[test]
    fn legendre_integrates_high_degree() {
        let (x, w) = gauss_legendre(20).unwrap();
        let q: f64 = x.iter().zip(&w).map(|(t, v)| v * t.powi(38)).sum();
        assert!((q - 2.0 / 39.0).abs() < 1e-14);
    }

    #[test]
    fn sphere_rule_examples() {
        let c = sphere_rule(2, 64).unwrap();
        assert!((c.weights().iter().sum::<f64>() - 2.0 * PI).abs() < 1e-12);
        let s = sphere_rule(3, 32).unwrap();
        assert!((s.integrate(|_| 1.0) - 4.0 * PI).abs() < 1e-11);
        assert!((s.integrate(|x| x[0] * x[0]) - 4.0 * PI / 3.0).abs() < 1e-11);
        assert!(sphere_rule(4, 3).is_err());
        assert_eq!(sphere_rule_len(3, 32), s.len());
    }

    #[test]
    fn annulus_volume() {
        let r = annulus_rule(3, 0.5, 8, 8).unwrap();
        assert!((r.integrate(|_| 1.0) - 4.0 * PI / 3.0 * 0.875).abs() < 1e-12);
        assert_eq!(r.integrate(|_| 0.0), 0.0);
        assert!(annulus_rule(3, 1.0, 4, 4).is_err());
        for (x, _) in r.iter() {
            let n = crate::field::norm(x);
            assert!(n > 0.5 && n < 1.0);
        }
    }

    #[test]
    fn ball_volume() {
        let b = ball_rule(&[0.2, 0.1, -0.3], 0.25, 6, 6).unwrap();
        assert!((b.integrate(|_| 1.0) - 4.0 * PI / 3.0 * 0.25f64.powi(3)).abs() < 1e-13);
    }

    #[test]
    fn mu_rule_trivial_is_dirac() {
        let r = mu_rule(&RootSystem::trivial(3).unwrap(), &[0.1, 0.2, 0.3], 10).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r.node(0), &[0.1, 0.2, 0.3]);
        assert_eq!(r.weight(0), 1.0);
    }

    #[test]
    fn graded_rule_matches_gauss_on_smooth_integrand() {
        let roots = RootSystem::sign_group(1, &[(0, 0.7)]).unwrap();
        let a = MuTemplate::new(&roots, 40).unwrap();
        let b = MuTemplate::graded(&roots, 6, 16).unwrap();
        let f = |s: f64| (0.3 * s).exp() / (2.0 - s);
        let (mut qa, mut qb) = (0.0, 0.0);
        a.for_each_dot(&[1.0], &[1.0], |s, w| qa += w * f(s));
        b.for_each_dot(&[1.0], &[1.0], |s, w| qb += w * f(s));
        assert!((qa - qb).abs() < 1e-12, "{qa} vs {qb}");
    }
}
