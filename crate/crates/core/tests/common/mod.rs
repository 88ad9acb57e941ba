//! Shared oracles and samplers for the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use dunkl_annulus::kernels::{Annulus, SeriesConfig};
use dunkl_annulus::{DunklSystem, RootSystem};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const RHO: f64 = 0.5;

/// `k = 0` in three dimensions.
pub fn classical() -> Annulus {
    Annulus::new(DunklSystem::new(RootSystem::trivial(3).unwrap()).unwrap(), RHO, SeriesConfig::default()).unwrap()
}

/// `Z_2^2` in two dimensions with `k = (1, 1)`.
pub fn z2() -> Annulus {
    Annulus::new(z2_system(), RHO, SeriesConfig::default()).unwrap()
}

pub fn z2_system() -> DunklSystem {
    DunklSystem::new(RootSystem::sign_group(2, &[(0, 1.0), (1, 1.0)]).unwrap()).unwrap()
}

/// Multiplicity per coordinate axis.
pub fn axis_multiplicities(an: &Annulus) -> Vec<u32> {
    let mut k = vec![0; an.dim()];
    for r in an.system().roots().roots() {
        k[r.axis] = r.multiplicity as u32;
    }
    k
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 0.1 && n <= 1.0 {
            return v.into_iter().map(|a| a / n).collect();
        }
    }
}

/// Uniform direction, radius uniform in `[lo, hi]`.
pub fn shell_point(rng: &mut ChaCha8Rng, d: usize, lo: f64, hi: f64) -> Vec<f64> {
    let r = rng.random_range(lo..hi);
    unit(rng, d).into_iter().map(|a| a * r).collect()
}

/// Like [`shell_point`] but at least `clear` away from every coordinate hyperplane.
pub fn shell_point_clear(rng: &mut ChaCha8Rng, d: usize, lo: f64, hi: f64, clear: f64) -> Vec<f64> {
    loop {
        let p = shell_point(rng, d, lo, hi);
        if p.iter().all(|c| c.abs() > clear) {
            return p;
        }
    }
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub fn scale(x: &[f64], s: f64) -> Vec<f64> {
    x.iter().map(|a| a * s).collect()
}

/// `d_k = 2 prod_j Gamma(k_j + 1/2) / Gamma(gamma + d/2)` for a sign group.
pub fn d_k_gamma(k: &[f64]) -> f64 {
    use statrs::function::gamma::ln_gamma;
    let gamma: f64 = k.iter().sum();
    let d = k.len() as f64;
    let num: f64 = k.iter().map(|kj| ln_gamma(kj + 0.5)).sum();
    2.0 * (num - ln_gamma(gamma + 0.5 * d)).exp()
}

/// Polynomial in `d` variables with exact rational coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    pub terms: BTreeMap<Vec<u32>, BigRational>,
}

impl Poly {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c.to_f64().unwrap() * e.iter().zip(x).map(|(p, v)| v.powi(*p as i32)).product::<f64>())
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|c| c.is_zero())
    }

    fn add_term(&mut self, e: Vec<u32>, c: BigRational) {
        let slot = self.terms.entry(e).or_insert_with(BigRational::zero);
        *slot += c;
    }
}

/// Exact sign-group Dunkl Laplacian:
/// `Delta_k x^b = sum_j [b_j(b_j-1) + k_j(2 b_j - (1 - (-1)^{b_j}))] x^{b - 2e_j}`.
pub fn dunkl_laplacian_poly(p: &Poly, k: &[u32]) -> Poly {
    let mut out = Poly::default();
    for (e, c) in &p.terms {
        for j in 0..e.len() {
            let b = e[j] as i64;
            if b < 2 {
                // b = 1 gives 1*0 + k(2 - 2) = 0.
                continue;
            }
            let odd = b % 2;
            let f = b * (b - 1) + k[j] as i64 * (2 * b - 2 * odd);
            if f == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[j] -= 2;
            out.add_term(e2, c * BigRational::from_integer(BigInt::from(f)));
        }
    }
    out.terms.retain(|_, c| !c.is_zero());
    out
}

/// Exponent vectors of the monomials of degree `n` in `d` variables.
pub fn monomials(n: u32, d: usize) -> Vec<Vec<u32>> {
    if d == 1 {
        return vec![vec![n]];
    }
    let mut out = Vec::new();
    for a in (0..=n).rev() {
        for mut rest in monomials(n - a, d - 1) {
            rest.insert(0, a);
            out.push(rest);
        }
    }
    out
}

/// Basis of the homogeneous degree-`n` polynomials killed by `Delta_k`,
/// by exact row reduction.
pub fn harmonic_basis(n: u32, k: &[u32]) -> Vec<Poly> {
    let d = k.len();
    let cols = monomials(n, d);
    if n < 2 {
        return cols.into_iter().map(|e| Poly { terms: [(e, BigRational::one())].into_iter().collect() }).collect();
    }
    let rows = monomials(n - 2, d);
    let mut m: Vec<Vec<BigRational>> = vec![vec![BigRational::zero(); cols.len()]; rows.len()];
    for (ci, e) in cols.iter().enumerate() {
        let img = dunkl_laplacian_poly(&Poly { terms: [(e.clone(), BigRational::one())].into_iter().collect() }, k);
        for (re, c) in img.terms {
            let ri = rows.iter().position(|r| *r == re).unwrap();
            m[ri][ci] = c;
        }
    }
    // Reduced row echelon form.
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols.len() {
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for v in m[r].iter_mut() {
            *v = &*v * &inv;
        }
        for i in 0..m.len() {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols.len() {
                    let t = &m[r][j] * &f;
                    m[i][j] -= t;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == m.len() {
            break;
        }
    }
    let mut basis = Vec::new();
    for free in (0..cols.len()).filter(|c| !pivots.contains(c)) {
        let mut p = Poly::default();
        p.add_term(cols[free].clone(), BigRational::one());
        for (ri, &pc) in pivots.iter().enumerate() {
            let v = -m[ri][free].clone();
            if !v.is_zero() {
                p.add_term(cols[pc].clone(), v);
            }
        }
        basis.push(p);
    }
    basis
}

/// Largest absolute coefficient, for scaling tolerances.
pub fn max_coeff(p: &Poly) -> f64 {
    p.terms.values().map(|c| c.abs().to_f64().unwrap()).fold(0.0, f64::max)
}
