//! Finite-difference Dunkl Laplacian, the harmonic kernel `h_k` and volume means.

use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::field::{dist, ScalarField};
use crate::kernels::Annulus;
use crate::quadrature::{gauss_jacobi, mu_piece, Domain, QuadratureRule};
use crate::system::DunklSystem;

/// Central-difference stencil for `Delta_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplacianStencil {
    pub h: f64,
    /// Combine steps `h` and `h/2` to cancel the `h^2` error term.
    pub richardson: bool,
}

impl Default for LaplacianStencil {
    fn default() -> Self {
        Self { h: 1e-3, richardson: false }
    }
}

impl LaplacianStencil {
    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidInput(format!("stencil step must be positive (got {h})")));
        }
        Ok(Self { h, richardson: false })
    }

    pub fn with_richardson(mut self) -> Self {
        self.richardson = true;
        self
    }

    /// Minimal distance to a reflecting hyperplane.
    pub fn guard(&self) -> f64 {
        10.0 * self.h
    }
}

impl DunklSystem {
    /// `Delta f + sum_alpha k(alpha) (2<grad f, alpha>/<alpha,x> - |alpha|^2 (f(x) - f(sigma_alpha x))/<alpha,x>^2)`
    /// with central differences for `Delta` and `grad` and exact reflections.
    pub fn dunkl_laplacian(&self, f: &dyn ScalarField, x: &[f64], stencil: &LaplacianStencil) -> Result<f64> {
        self.check_dim(x)?;
        if !(stencil.h > 0.0) {
            return Err(Error::InvalidInput(format!("stencil step must be positive (got {})", stencil.h)));
        }
        for (i, r) in self.roots().roots().iter().enumerate() {
            let dist = x[r.axis].abs();
            if r.multiplicity > 0.0 && dist < stencil.guard() {
                return Err(Error::HyperplaneProximity { root: i, distance: dist });
            }
        }
        let coarse = self.laplacian_step(f, x, stencil.h)?;
        if !stencil.richardson {
            return Ok(coarse);
        }
        let fine = self.laplacian_step(f, x, 0.5 * stencil.h)?;
        Ok((4.0 * fine - coarse) / 3.0)
    }

    fn laplacian_step(&self, f: &dyn ScalarField, x: &[f64], h: f64) -> Result<f64> {
        let eval = |p: &[f64]| {
            let v = f.eval(p);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::InvalidInput(format!("field is not finite at {p:?}")))
            }
        };
        let f0 = eval(x)?;
        let mut p = x.to_vec();
        let mut lap = 0.0;
        let mut grad = vec![0.0; x.len()];
        for j in 0..x.len() {
            p[j] = x[j] + h;
            let fp = eval(&p)?;
            p[j] = x[j] - h;
            let fm = eval(&p)?;
            p[j] = x[j];
            lap += (fp - 2.0 * f0 + fm) / (h * h);
            grad[j] = (fp - fm) / (2.0 * h);
        }
        for (i, r) in self.roots().roots().iter().enumerate() {
            if r.multiplicity == 0.0 {
                continue;
            }
            let xa = x[r.axis];
            let fs = eval(&self.roots().reflect(i, x))?;
            lap += r.multiplicity * (2.0 * grad[r.axis] / xa - (f0 - fs) / (xa * xa));
        }
        Ok(lap)
    }

    /// `h_k(r, x, y) = mu_y{ z : |x|^2 + |y|^2 - 2<x,z> <= r^2 }`.
    ///
    /// The coordinate with the largest `|x_c y_c|` is integrated exactly through
    /// the Beta distribution function; the next one by Gauss–Jacobi pieces split
    /// where the inner probability saturates; any further ones by a tensor rule
    /// of the given order.
    pub fn harmonic_kernel(&self, r: f64, x: &[f64], y: &[f64], order: usize) -> Result<f64> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        if !(r > 0.0) {
            return Err(Error::InvalidInput(format!("radius must be positive (got {r})")));
        }
        if order == 0 {
            return Err(Error::OutOfRange("quadrature order must be at least 1".into()));
        }
        let x2: f64 = x.iter().map(|v| v * v).sum();
        let y2: f64 = y.iter().map(|v| v * v).sum();
        let c = 0.5 * (x2 + y2 - r * r);
        let flipped: Vec<(f64, f64)> = self
            .roots()
            .roots()
            .iter()
            .filter(|q| q.multiplicity > 0.0)
            .map(|q| (q.multiplicity, x[q.axis] * y[q.axis]))
            .collect();
        let fixed: f64 = {
            let mut m = vec![true; x.len()];
            for q in self.roots().roots().iter().filter(|q| q.multiplicity > 0.0) {
                m[q.axis] = false;
            }
            (0..x.len()).filter(|&j| m[j]).map(|j| x[j] * y[j]).sum()
        };
        // Probability that sum a_c T_c >= s.
        let mut terms = flipped;
        terms.sort_by(|a, b| a.1.abs().total_cmp(&b.1.abs()));
        let v = prob_at_least(&terms, c - fixed, order)?;
        Ok(v.clamp(0.0, 1.0))
    }

    /// `m_k[B(0,r)] = d_k r^{d+2 gamma} / (d + 2 gamma)`.
    pub fn ball_mass(&self, r: f64) -> f64 {
        let e = self.dim() as f64 + 2.0 * self.constants().gamma;
        self.d_k() * r.powf(e) / e
    }

    /// Volume mean `(1/m_k[B(0,r)]) int u(y) h_k(r,x,y) omega_k(y) dy`.
    ///
    /// `unit_ball` is a rule on the unit ball (see [`crate::quadrature::ball_rule`]);
    /// it is scaled onto each ball `B(gx, r)`, `g` in `W`, which together carry
    /// the support of `h_k(r,x,.)`. Points covered by several balls are shared.
    pub fn volume_mean(&self, u: &dyn ScalarField, x: &[f64], r: f64, unit_ball: &QuadratureRule, mu_order: usize) -> Result<f64> {
        self.check_dim(x)?;
        if unit_ball.domain() != Domain::Ball || unit_ball.dim() != self.dim() {
            return Err(Error::InvalidInput("volume mean needs a unit-ball rule of matching dimension".into()));
        }
        if !(r > 0.0) {
            return Err(Error::InvalidInput(format!("radius must be positive (got {r})")));
        }
        let orbit = self.roots().orbit(x);
        let mut acc = 0.0;
        let mut y = vec![0.0; x.len()];
        for centre in &orbit {
            for (p, w) in unit_ball.iter() {
                for j in 0..y.len() {
                    y[j] = centre[j] + r * p[j];
                }
                let cover = orbit.iter().filter(|o| dist(o, &y) < r).count().max(1);
                let h = self.harmonic_kernel(r, x, &y, mu_order)?;
                if h == 0.0 {
                    continue;
                }
                let uv = u.eval(&y);
                if !uv.is_finite() {
                    return Err(Error::InvalidInput(format!("field is not finite at {y:?}")));
                }
                acc += w * uv * h * self.weight(&y) / cover as f64;
            }
        }
        let jac = r.powi(self.dim() as i32);
        Ok(acc * jac / self.ball_mass(r))
    }
}

impl Annulus {
    /// [`DunklSystem::volume_mean`] for fields living on the annulus; the
    /// closed ball `B(x, r)` must lie inside `A`.
    pub fn volume_mean(&self, u: &dyn ScalarField, x: &[f64], r: f64, unit_ball: &QuadratureRule, mu_order: usize) -> Result<f64> {
        let n = self.open_norm(x)?;
        if !(n - r > self.rho() && n + r < 1.0) {
            return Err(Error::OutsideDomain { norm: n, region: "annulus at distance r from the boundary" });
        }
        self.system().volume_mean(u, x, r, unit_ball, mu_order)
    }
}

/// Smooth test function `phi(y) = psi(|y - c| / r)` supported in `B(c, r)`,
/// with `psi` from [`crate::green::bump_profile`].
#[derive(Debug, Clone, PartialEq)]
pub struct TestBump {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl TestBump {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!("bump radius must be positive (got {radius})")));
        }
        Ok(Self { center, radius })
    }
}

impl ScalarField for TestBump {
    fn eval(&self, x: &[f64]) -> f64 {
        crate::green::bump_profile(dist(x, &self.center) / self.radius)
    }
}

impl DunklSystem {
    /// `int w(y) phi(y) omega_k(y) dy` over the support of the bump.
    pub fn pair_with_bump(&self, w: &dyn ScalarField, bump: &TestBump, unit_ball: &QuadratureRule) -> Result<f64> {
        self.check_dim(&bump.center)?;
        let r = bump.radius;
        let mut acc = 0.0;
        let mut y = vec![0.0; self.dim()];
        for (p, wt) in unit_ball.iter() {
            for j in 0..y.len() {
                y[j] = bump.center[j] + r * p[j];
            }
            let v = bump.eval(&y);
            if v == 0.0 {
                continue;
            }
            acc += wt * v * w.eval(&y) * self.weight(&y);
        }
        Ok(acc * r.powi(self.dim() as i32))
    }

    /// `<Delta_k(w omega_k), phi> = int w(y) (Delta_k phi)(y) omega_k(y) dy`.
    ///
    /// `Delta_k phi` lives on the orbit balls `B(g c, r)`; each is integrated
    /// with `unit_ball` and the finite-difference Laplacian. The balls must stay
    /// clear of the reflecting hyperplanes by the stencil guard.
    pub fn pair_with_laplacian(&self, w: &dyn ScalarField, bump: &TestBump, unit_ball: &QuadratureRule, stencil: &LaplacianStencil) -> Result<f64> {
        self.check_dim(&bump.center)?;
        let r = bump.radius;
        for (i, q) in self.roots().roots().iter().enumerate() {
            let clear = bump.center[q.axis].abs() - r;
            if q.multiplicity > 0.0 && clear < stencil.guard() {
                return Err(Error::HyperplaneProximity { root: i, distance: clear.max(0.0) });
            }
        }
        let orbit = self.roots().orbit(&bump.center);
        let mut acc = 0.0;
        let mut y = vec![0.0; self.dim()];
        for c in &orbit {
            for (p, wt) in unit_ball.iter() {
                for j in 0..y.len() {
                    y[j] = c[j] + r * p[j];
                }
                let lap = self.dunkl_laplacian(bump, &y, stencil)?;
                if lap == 0.0 {
                    continue;
                }
                acc += wt * lap * w.eval(&y) * self.weight(&y);
            }
        }
        Ok(acc * r.powi(self.dim() as i32))
    }
}

/// `P(T >= tau)` for `T` with density proportional to `(1-t)^{k-1}(1+t)^k` on `[-1,1]`.
fn upper_tail(k: f64, tau: f64) -> f64 {
    if tau <= -1.0 {
        1.0
    } else if tau >= 1.0 {
        0.0
    } else {
        1.0 - beta_reg(k + 1.0, k, 0.5 * (1.0 + tau))
    }
}

/// `P(a T >= s)`.
fn single(k: f64, a: f64, s: f64) -> f64 {
    if a > 0.0 {
        upper_tail(k, s / a)
    } else if a < 0.0 {
        1.0 - upper_tail(k, s / a)
    } else if s <= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// `P(sum a_c T_c >= s)`; `terms` sorted by increasing `|a_c|`.
fn prob_at_least(terms: &[(f64, f64)], s: f64, order: usize) -> Result<f64> {
    match terms.len() {
        0 => Ok(if s <= 0.0 { 1.0 } else { 0.0 }),
        1 => Ok(single(terms[0].0, terms[0].1, s)),
        2 => {
            let (k1, a1) = terms[0];
            let (k2, a2) = terms[1];
            if a1 == 0.0 {
                return Ok(single(k2, a2, s));
            }
            // Breakpoints where (s - a1 t)/a2 = +-1.
            let mut brk = vec![-1.0, 1.0];
            for e in [-1.0, 1.0] {
                let t = (s - e * a2) / a1;
                if t > -1.0 && t < 1.0 {
                    brk.push(t);
                }
            }
            brk.sort_by(|a, b| a.total_cmp(b));
            let mut acc = 0.0;
            for p in brk.windows(2) {
                if p[1] - p[0] <= 0.0 {
                    continue;
                }
                let (t, w) = mu_piece(k1, p[0], p[1], order)?;
                acc += t.iter().zip(&w).map(|(ti, wi)| wi * single(k2, a2, s - a1 * ti)).sum::<f64>();
            }
            Ok(acc)
        }
        _ => {
            let (k0, a0) = terms[0];
            let (t, w) = gauss_jacobi(order, k0 - 1.0, k0)?;
            let total: f64 = w.iter().sum();
            let mut acc = 0.0;
            for (ti, wi) in t.iter().zip(&w) {
                acc += wi / total * prob_at_least(&terms[1..], s - a0 * ti, order)?;
            }
            Ok(acc)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::ball_rule;
    use crate::roots::RootSystem;

    fn z2() -> DunklSystem {
        DunklSystem::new(RootSystem::sign_group(2, &[(0, 1.0), (1, 1.0)]).unwrap()).unwrap()
    }

    #[test]
    fn laplacian_of_norm_squared() {
        let s = z2();
        let f = |x: &[f64]| x[0] * x[0] + x[1] * x[1];
        let v = s.dunkl_laplacian(&f, &[0.3, -0.5], &LaplacianStencil::default()).unwrap();
        // 2(d + 2 gamma) = 12
        assert!((v - 12.0).abs() < 1e-6, "{v}");
        assert!(s.dunkl_laplacian(&f, &[0.3, 0.005], &LaplacianStencil::default()).is_err());
    }

    #[test]
    fn classical_kernel_is_indicator() {
        let s = DunklSystem::new(RootSystem::trivial(3).unwrap()).unwrap();
        assert_eq!(s.harmonic_kernel(0.2, &[0.5, 0.0, 0.0], &[0.6, 0.1, 0.0], 8).unwrap(), 1.0);
        assert_eq!(s.harmonic_kernel(0.1, &[0.5, 0.0, 0.0], &[0.6, 0.1, 0.0], 8).unwrap(), 0.0);
    }

    #[test]
    fn weak_laplacian_of_norm_squared() {
        // <Delta_k |y|^2 omega, phi> = 12 <omega, phi> for the Z_2^2 weight.
        let s = z2();
        let bump = TestBump::new(vec![0.5, 0.45], 0.2).unwrap();
        let rule = ball_rule(&[0.0, 0.0], 1.0, 40, 128).unwrap();
        let sq = |y: &[f64]| y[0] * y[0] + y[1] * y[1];
        let lhs = s.pair_with_laplacian(&sq, &bump, &rule, &LaplacianStencil::default()).unwrap();
        let rhs = 12.0 * s.pair_with_bump(&|_: &[f64]| 1.0, &bump, &rule).unwrap();
        assert!((lhs - rhs).abs() < 1e-5 * rhs, "{lhs} {rhs}");
    }

    #[test]
    fn kernel_mass_is_ball_mass() {
        let s = z2();
        let x = [0.4, 0.5];
        let r = 0.15;
        let rule = ball_rule(&[0.0, 0.0], 1.0, 24, 64).unwrap();
        let m = s.volume_mean(&|_: &[f64]| 1.0, &x, r, &rule, 32).unwrap();
        assert!((m - 1.0).abs() < 1e-6, "{m}");
    }
}
