//! Reproducing kernels `Z_{k,n}` of the Dunkl spherical harmonics.
//!
//! For unit `x`, `Z_{k,n}(x, xi) = (n+lambda)(2 lambda)_n / (lambda n!) V_k[P_n^lambda(<., xi>)](x)`;
//! off the sphere each slot is extended homogeneously.

use crate::error::{Error, Result};
use crate::field::norm;
use crate::quadrature::MuTemplate;
use crate::system::{DunklSystem, MAX_SERIES_DEGREE};

pub(crate) const UNIT_TOL: f64 = 1e-10;
/// Target accuracy for adaptive `mu` orders.
pub(crate) const MU_EPS: f64 = 1e-15;

pub(crate) fn check_unit(xi: &[f64]) -> Result<()> {
    let n = norm(xi);
    if (n - 1.0).abs() > UNIT_TOL {
        return Err(Error::NotUnit { norm: n });
    }
    Ok(())
}

/// `(n+lambda)(2 lambda)_n / (lambda n!)` for `n <= len`.
pub(crate) fn zonal_factors(lambda: f64, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut c = 1.0;
    for n in 0..len {
        if n > 0 {
            c *= (2.0 * lambda + n as f64 - 1.0) / n as f64;
        }
        out.push((n as f64 + lambda) / lambda * c);
    }
    out
}

impl DunklSystem {
    /// `Z_{k,n}(x, xi)` with the default `mu` order `max(2n+4, 16)`.
    pub fn zonal(&self, n: usize, x: &[f64], xi: &[f64]) -> Result<f64> {
        self.zonal_with_order(n, x, xi, (2 * n + 4).max(16))
    }

    pub fn zonal_with_order(&self, n: usize, x: &[f64], xi: &[f64], order: usize) -> Result<f64> {
        self.check_dim(x)?;
        self.check_dim(xi)?;
        check_unit(xi)?;
        if n > MAX_SERIES_DEGREE {
            return Err(Error::OutOfRange(format!("degree {n} exceeds {MAX_SERIES_DEGREE}")));
        }
        let r = norm(x);
        if r == 0.0 {
            return Ok(if n == 0 { 1.0 } else { 0.0 });
        }
        let xhat: Vec<f64> = x.iter().map(|v| v / r).collect();
        let mut coeffs = vec![0.0; n + 1];
        coeffs[n] = zonal_factors(self.lambda(), n + 1)[n];
        let t = if self.intertwiner().is_dirac() {
            self.intertwiner().template(1)
        } else {
            self.intertwiner().template(order)
        };
        Ok(r.powi(n as i32) * self.gegenbauer_integral(t, &xhat, xi, &coeffs))
    }

    /// `int sum_n c_n P_n^lambda(<z, xi>) dmu_y(z)`.
    pub(crate) fn gegenbauer_integral(&self, t: &MuTemplate, y: &[f64], xi: &[f64], c: &[f64]) -> f64 {
        let rec = self.recurrence();
        let mut acc = 0.0;
        t.for_each_dot(y, xi, |s, w| acc += w * rec.sum(s.clamp(-1.0, 1.0), c));
        acc
    }

    pub(crate) fn gegenbauer_integral2(&self, t: &MuTemplate, y: &[f64], xi: &[f64], c1: &[f64], c2: &[f64]) -> (f64, f64) {
        let rec = self.recurrence();
        let (mut a1, mut a2) = (0.0, 0.0);
        t.for_each_dot(y, xi, |s, w| {
            let (s1, s2) = rec.sum2(s.clamp(-1.0, 1.0), c1, c2);
            a1 += w * s1;
            a2 += w * s2;
        });
        (a1, a2)
    }

    /// Template for a zonal series whose coefficients decay like `rate^n`.
    /// A series cut at `exact_degree` before its tail is small is integrated
    /// exactly as a polynomial.
    pub(crate) fn series_template(&self, xhat: &[f64], xi: &[f64], rate: f64, exact_degree: Option<usize>, order: Option<usize>) -> &MuTemplate {
        let tw = self.intertwiner();
        if let Some(q) = order {
            return tw.template(q);
        }
        if tw.is_dirac() {
            return tw.template(1);
        }
        let r = rate.clamp(1e-300, 1.0 - 1e-15);
        let s_star = 0.5 * (1.0 + r * r) / r;
        let smax: f64 = xhat.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>()
            + self
                .roots()
                .roots()
                .iter()
                .filter(|q| q.multiplicity > 0.0)
                .map(|q| (xhat[q.axis] * xi[q.axis]).abs() - xhat[q.axis] * xi[q.axis])
                .sum::<f64>();
        tw.template_for_degree(xhat, xi, (s_star - smax).max(0.0), MU_EPS, exact_degree)
    }

    /// `sum_n c_n Z_{k,n}(xhat, xi)` for unit arguments; `rate` is the decay of `c_n`.
    pub fn zonal_series(&self, xhat: &[f64], xi: &[f64], coeffs: &[f64], rate: f64) -> f64 {
        let factors = self.factors(coeffs.len());
        let c: Vec<f64> = coeffs.iter().zip(&factors).map(|(a, b)| a * b).collect();
        let t = self.series_template(xhat, xi, rate, None, None);
        self.gegenbauer_integral(t, xhat, xi, &c)
    }

    /// Two zonal series sharing their arguments, in one pass.
    pub fn zonal_series2(&self, xhat: &[f64], xi: &[f64], c1: &[f64], c2: &[f64], rate: f64) -> (f64, f64) {
        let factors = self.factors(c1.len().max(c2.len()));
        let a: Vec<f64> = c1.iter().zip(&factors).map(|(a, b)| a * b).collect();
        let b: Vec<f64> = c2.iter().zip(&factors).map(|(a, b)| a * b).collect();
        let t = self.series_template(xhat, xi, rate, None, None);
        self.gegenbauer_integral2(t, xhat, xi, &a, &b)
    }

    /// `Z_{k,n}(xhat, xi)` for all `n < len`, integrated with `order` nodes.
    pub fn zonal_table(&self, xhat: &[f64], xi: &[f64], len: usize, order: usize) -> Vec<f64> {
        let tw = self.intertwiner();
        let t = if tw.is_dirac() { tw.template(1) } else { tw.template(order) };
        let rec = self.recurrence();
        let mut out = vec![0.0; len];
        t.for_each_dot(xhat, xi, |s, w| rec.accumulate(s.clamp(-1.0, 1.0), w, &mut out));
        for (o, f) in out.iter_mut().zip(self.factors(len)) {
            *o *= f;
        }
        out
    }

    pub(crate) fn factors(&self, len: usize) -> Vec<f64> {
        zonal_factors(self.lambda(), len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roots::RootSystem;

    #[test]
    fn classical_zonal_at_coincidence() {
        let s = DunklSystem::new(RootSystem::trivial(3).unwrap()).unwrap();
        let xi = [0.0, 0.6, 0.8];
        assert!((s.zonal(2, &xi, &xi).unwrap() - 5.0).abs() < 1e-13);
        assert!((s.zonal(0, &[0.3, 0.1, 0.0], &xi).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(s.zonal(3, &[0.0; 3], &xi).unwrap(), 0.0);
        assert!(s.zonal(1, &xi, &[1.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn table_matches_single_degrees() {
        let s = DunklSystem::new(RootSystem::sign_group(2, &[(0, 1.0), (1, 0.5)]).unwrap()).unwrap();
        let x = [0.6, 0.8];
        let xi = [-0.28, 0.96];
        let table = s.zonal_table(&x, &xi, 8, 32);
        for n in 0..8 {
            assert!((table[n] - s.zonal_with_order(n, &x, &xi, 32).unwrap()).abs() < 1e-11);
        }
    }
}
