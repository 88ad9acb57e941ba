//! Pochhammer symbols, normalised Gegenbauer polynomials, harmonic dimensions
//! and the explicit zonal bound used to truncate series.

use crate::error::{Error, Result};

/// Rising factorial `x(x+1)...(x+n-1)`.
pub fn pochhammer(x: f64, n: usize) -> f64 {
    (0..n).fold(1.0, |acc, i| acc * (x + i as f64))
}

/// Degree and parameter of a normalised Gegenbauer polynomial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GegenbauerParam {
    mu: f64,
    n: usize,
}

impl GegenbauerParam {
    pub fn new(mu: f64, n: usize) -> Result<Self> {
        if !(mu > -0.5) || !mu.is_finite() {
            return Err(Error::OutOfRange(format!("Gegenbauer parameter must exceed -1/2 (got {mu})")));
        }
        Ok(Self { mu, n })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn degree(&self) -> usize {
        self.n
    }
}

const T_SLACK: f64 = 1e-12;

/// `P_n^mu(t)` normalised so that `P_n^mu(1) = 1`.
pub fn gegenbauer(param: GegenbauerParam, t: f64) -> Result<f64> {
    if !(t.abs() <= 1.0 + T_SLACK) {
        return Err(Error::OutOfRange(format!("Gegenbauer argument {t} outside [-1,1]")));
    }
    let t = t.clamp(-1.0, 1.0);
    let mut p = vec![0.0; param.n + 1];
    gegenbauer_table(param.mu, t, &mut p);
    Ok(p[param.n])
}

/// Fills `out[n] = P_n^mu(t)` for every `n < out.len()`.
///
/// Three-term recurrence obtained from the generating function
/// `(1-2tr+r^2)^(-mu) = sum (2mu)_n/n! P_n^mu(t) r^n`:
/// `(n+2mu-1) P_n = 2(n+mu-1) t P_{n-1} - (n-1) P_{n-2}`.
pub fn gegenbauer_table(mu: f64, t: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = t;
    }
    for n in 2..out.len() {
        let nf = n as f64;
        out[n] = (2.0 * (nf + mu - 1.0) * t * out[n - 1] - (nf - 1.0) * out[n - 2]) / (nf + 2.0 * mu - 1.0);
    }
}

/// Precomputed recurrence coefficients for `P_n^mu`, `n <= max_degree`.
#[derive(Debug, Clone)]
pub struct GegenbauerRecurrence {
    mu: f64,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl GegenbauerRecurrence {
    pub fn new(mu: f64, max_degree: usize) -> Self {
        let mut a = vec![0.0; max_degree + 1];
        let mut b = vec![0.0; max_degree + 1];
        for n in 2..=max_degree {
            let nf = n as f64;
            let den = nf + 2.0 * mu - 1.0;
            a[n] = 2.0 * (nf + mu - 1.0) / den;
            b[n] = (nf - 1.0) / den;
        }
        Self { mu, a, b }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn max_degree(&self) -> usize {
        self.a.len() - 1
    }

    /// `sum_{n < coeffs.len()} coeffs[n] P_n^mu(t)`.
    #[inline]
    pub fn sum(&self, t: f64, coeffs: &[f64]) -> f64 {
        let len = coeffs.len();
        if len == 0 {
            return 0.0;
        }
        let mut acc = coeffs[0];
        if len == 1 {
            return acc;
        }
        acc += coeffs[1] * t;
        let (mut p0, mut p1) = (1.0, t);
        for n in 2..len {
            let p2 = self.a[n] * t * p1 - self.b[n] * p0;
            acc += coeffs[n] * p2;
            p0 = p1;
            p1 = p2;
        }
        acc
    }

    /// Two coefficient sets summed in one pass.
    #[inline]
    pub fn sum2(&self, t: f64, c1: &[f64], c2: &[f64]) -> (f64, f64) {
        let len = c1.len().max(c2.len());
        let get = |c: &[f64], n: usize| c.get(n).copied().unwrap_or(0.0);
        if len == 0 {
            return (0.0, 0.0);
        }
        let mut s1 = get(c1, 0);
        let mut s2 = get(c2, 0);
        if len == 1 {
            return (s1, s2);
        }
        s1 += get(c1, 1) * t;
        s2 += get(c2, 1) * t;
        let (mut p0, mut p1) = (1.0, t);
        for n in 2..len {
            let p2 = self.a[n] * t * p1 - self.b[n] * p0;
            s1 += get(c1, n) * p2;
            s2 += get(c2, n) * p2;
            p0 = p1;
            p1 = p2;
        }
        (s1, s2)
    }

    /// Adds `weight * P_n^mu(t)` into `out[n]` for every `n < out.len()`.
    #[inline]
    pub fn accumulate(&self, t: f64, weight: f64, out: &mut [f64]) {
        let len = out.len();
        if len == 0 {
            return;
        }
        out[0] += weight;
        if len == 1 {
            return;
        }
        out[1] += weight * t;
        let (mut p0, mut p1) = (1.0, t);
        for n in 2..len {
            let p2 = self.a[n] * t * p1 - self.b[n] * p0;
            out[n] += weight * p2;
            p0 = p1;
            p1 = p2;
        }
    }
}

fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Dimension of the space of degree-`n` harmonic polynomials on R^d.
pub fn dim_harmonic(n: usize, d: usize) -> u64 {
    assert!(d >= 2, "dim_harmonic needs d >= 2");
    let (n, d) = (n as u64, d as u64);
    let first = binomial(n + d - 1, n);
    let second = if n >= 2 { binomial(n + d - 3, n - 2) } else { 0 };
    (first - second) as u64
}

/// Surface area of the unit sphere in R^d.
pub fn sphere_area(d: usize) -> f64 {
    use std::f64::consts::PI;
    // |S^{d-1}| = 2 pi^{d/2} / Gamma(d/2), with Gamma at integers or half-integers.
    let half = d as f64 / 2.0;
    let mut gamma = if d % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut s = if d % 2 == 0 { 1.0 } else { 0.5 };
    while s < half {
        gamma *= s;
        s += 1.0;
    }
    2.0 * PI.powf(half) / gamma
}

/// Upper bound for `|Z_{k,n}|` on the unit sphere:
/// `((gamma + d/2)_n |S^{d-1}| / (d/2)_n)^2 * dim_harmonic(n, d)^5`.
pub fn zonal_bound(n: usize, d: usize, gamma: f64) -> f64 {
    log_zonal_bound(n, d, gamma).exp()
}

fn log_zonal_bound(n: usize, d: usize, gamma: f64) -> f64 {
    let half = d as f64 / 2.0;
    let log_ratio: f64 = (0..n).map(|i| ((gamma + half + i as f64) / (half + i as f64)).ln()).sum();
    2.0 * (log_ratio + sphere_area(d).ln()) + 5.0 * (dim_harmonic(n, d) as f64).ln()
}

/// A geometric model `scale * B_n * rate^n` for the n-th term of a zonal series,
/// with `B_n` the zonal bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailModel {
    pub scale: f64,
    pub rate: f64,
}

/// Smallest truncation degree `N` whose rigorous tail bound
/// `sum_m scale_m * sum_{n > N} B_n rate_m^n` is below `tol`.
///
/// `B_{n+1}/B_n` decreases in `n`, so the tail after `N` is bounded by
/// `B_{N+1} q^{N+1} / (1 - q B_{N+2}/B_{N+1})`. Returns `(N, bound)`.
pub fn truncation_degree(d: usize, gamma: f64, models: &[TailModel], tol: f64, max_degree: usize) -> Result<(usize, f64)> {
    let bound_at = |n: usize| -> f64 {
        let lb1 = log_zonal_bound(n + 1, d, gamma);
        let lb2 = log_zonal_bound(n + 2, d, gamma);
        let ratio = (lb2 - lb1).exp();
        models
            .iter()
            .filter(|m| m.scale != 0.0)
            .map(|m| {
                if m.rate <= 0.0 {
                    return 0.0;
                }
                let q = m.rate * ratio;
                if q >= 1.0 {
                    return f64::INFINITY;
                }
                m.scale.abs() * (lb1 + (n + 1) as f64 * m.rate.ln()).exp() / (1.0 - q)
            })
            .sum()
    };
    // The bound is eventually decreasing; bisect on a monotone envelope.
    let (mut lo, mut hi) = (0usize, max_degree);
    let top = bound_at(hi);
    if !(top < tol) {
        return Err(Error::Truncation { bound: top, tol, max_degree });
    }
    if bound_at(0) < tol {
        return Ok((0, bound_at(0)));
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if bound_at(mid) < tol {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((hi, bound_at(hi)))
}

/// Tail bound after `n` terms without a tolerance target.
pub fn tail_bound(d: usize, gamma: f64, models: &[TailModel], n: usize) -> f64 {
    let lb1 = log_zonal_bound(n + 1, d, gamma);
    let ratio = (log_zonal_bound(n + 2, d, gamma) - lb1).exp();
    models
        .iter()
        .filter(|m| m.scale != 0.0 && m.rate > 0.0)
        .map(|m| {
            let q = m.rate * ratio;
            if q >= 1.0 {
                f64::INFINITY
            } else {
                m.scale.abs() * (lb1 + (n + 1) as f64 * m.rate.ln()).exp() / (1.0 - q)
            }
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn pochhammer_examples() {
        assert_eq!(pochhammer(3.7, 0), 1.0);
        assert_eq!(pochhammer(1.0, 3), 6.0);
        assert!((pochhammer(0.5, 4) - 6.5625).abs() < 1e-15);
    }

    #[test]
    fn gegenbauer_examples() {
        let g = |mu, n, t| gegenbauer(GegenbauerParam::new(mu, n).unwrap(), t).unwrap();
        assert_eq!(g(0.7, 0, 0.3), 1.0);
        assert!((g(0.5, 1, 0.4) - 0.4).abs() < 1e-15);
        assert!((g(0.5, 2, 1.0) - 1.0).abs() < 1e-15);
        // Legendre P_3 at 0.3.
        let p3 = 0.5 * (5.0 * 0.027 - 3.0 * 0.3);
        assert!((g(0.5, 3, 0.3) - p3).abs() < 1e-15);
        // Chebyshev T_4 when mu = 0.
        let t = 0.35_f64;
        assert!((g(0.0, 4, t) - (4.0 * t.acos()).cos()).abs() < 1e-14);
    }

    #[test]
    fn gegenbauer_rejects_bad_input() {
        assert!(GegenbauerParam::new(-0.5, 2).is_err());
        assert!(gegenbauer(GegenbauerParam::new(1.0, 2).unwrap(), 1.1).is_err());
    }

    #[test]
    fn recurrence_sum_matches_table() {
        let rec = GegenbauerRecurrence::new(1.3, 40);
        let mut table = vec![0.0; 41];
        gegenbauer_table(1.3, -0.37, &mut table);
        let coeffs: Vec<f64> = (0..41).map(|n| 1.0 / (1.0 + n as f64)).collect();
        let direct: f64 = table.iter().zip(&coeffs).map(|(p, c)| p * c).sum();
        assert!((rec.sum(-0.37, &coeffs) - direct).abs() < 1e-13);
        let (s1, s2) = rec.sum2(-0.37, &coeffs, &coeffs[..10]);
        assert!((s1 - direct).abs() < 1e-13);
        let short: f64 = table[..10].iter().zip(&coeffs).map(|(p, c)| p * c).sum();
        assert!((s2 - short).abs() < 1e-13);
        let mut acc = vec![0.0; 41];
        rec.accumulate(-0.37, 2.0, &mut acc);
        for n in 0..41 {
            assert!((acc[n] - 2.0 * table[n]).abs() < 1e-13);
        }
    }

    #[test]
    fn dim_examples() {
        assert_eq!(dim_harmonic(0, 3), 1);
        assert_eq!(dim_harmonic(2, 2), 2);
        assert_eq!(dim_harmonic(3, 3), 7);
        assert_eq!(dim_harmonic(1, 2), 2);
        assert_eq!(dim_harmonic(5, 3), 11);
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn zonal_bound_at_zero() {
        assert!((zonal_bound(0, 3, 0.0) - 16.0 * PI * PI).abs() < 1e-10);
    }

    #[test]
    fn truncation_is_minimal() {
        let models = [TailModel { scale: 1.0, rate: 0.6 }];
        let (n, b) = truncation_degree(3, 0.0, &models, 1e-10, 1000).unwrap();
        assert!(b < 1e-10);
        assert!(tail_bound(3, 0.0, &models, n - 1) >= 1e-10);
        let err = truncation_degree(3, 0.0, &[TailModel { scale: 1.0, rate: 0.99 }], 1e-12, 50).unwrap_err();
        assert!(matches!(err, Error::Truncation { .. }));
    }
}
