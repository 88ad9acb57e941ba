//! Root systems of sign-group type, the weight `omega_k` and the constants
//! `gamma`, `lambda_k`, `d_k`.

use crate::error::{Error, Result};
use crate::quadrature::QuadratureRule;
use crate::special::sphere_area;

/// Which reflection groups are supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootSystemKind {
    Trivial,
    /// `Z_2^m` generated by reflections in `m` distinct coordinate hyperplanes.
    SignGroup,
}

/// A positive root `scale * e_axis` with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub axis: usize,
    pub scale: f64,
    pub multiplicity: f64,
}

impl Root {
    pub fn vector(&self, d: usize) -> Vec<f64> {
        let mut v = vec![0.0; d];
        v[self.axis] = self.scale;
        v
    }
}

/// Positive roots, multiplicities and the generated group.
#[derive(Debug, Clone, PartialEq)]
pub struct RootSystem {
    dim: usize,
    kind: RootSystemKind,
    roots: Vec<Root>,
}

impl RootSystem {
    pub fn trivial(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::UnsupportedDimension(0));
        }
        Ok(Self { dim, kind: RootSystemKind::Trivial, roots: Vec::new() })
    }

    /// Sign group with unit roots `e_axis` and the given multiplicities.
    pub fn sign_group(dim: usize, axes: &[(usize, f64)]) -> Result<Self> {
        let roots = axes
            .iter()
            .map(|&(axis, multiplicity)| Root { axis, scale: 1.0, multiplicity })
            .collect();
        Self::from_roots(dim, roots)
    }

    /// General constructor; validates the sign-group invariants.
    pub fn from_roots(dim: usize, roots: Vec<Root>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::UnsupportedDimension(0));
        }
        if roots.is_empty() {
            return Self::trivial(dim);
        }
        if roots.len() > dim {
            return Err(Error::InvalidRootSystem(format!("{} roots exceed dimension {dim}", roots.len())));
        }
        for (i, r) in roots.iter().enumerate() {
            if r.axis >= dim {
                return Err(Error::InvalidRootSystem(format!("root {i} uses axis {} outside dimension {dim}", r.axis)));
            }
            if !(r.scale.is_finite() && r.scale != 0.0) {
                return Err(Error::InvalidRootSystem(format!("root {i} is zero or not finite")));
            }
            if !(r.multiplicity >= 0.0 && r.multiplicity.is_finite()) {
                return Err(Error::InvalidRootSystem(format!("root {i} has negative multiplicity {}", r.multiplicity)));
            }
            if roots[..i].iter().any(|q| q.axis == r.axis) {
                return Err(Error::InvalidRootSystem(format!("axis {} listed twice", r.axis)));
            }
        }
        Ok(Self { dim, kind: RootSystemKind::SignGroup, roots })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> RootSystemKind {
        self.kind
    }

    pub fn roots(&self) -> &[Root] {
        &self.roots
    }

    /// `gamma = sum of multiplicities`.
    pub fn gamma(&self) -> f64 {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }

    /// `omega_k(x) = prod |<alpha, x>|^{2k(alpha)}`.
    pub fn weight(&self, x: &[f64]) -> f64 {
        self.roots
            .iter()
            .filter(|r| r.multiplicity > 0.0)
            .map(|r| {
                let p = (r.scale * x[r.axis]).abs();
                let e = 2.0 * r.multiplicity;
                if e == e.round() && e <= 16.0 {
                    p.powi(e as i32)
                } else {
                    p.powf(e)
                }
            })
            .product()
    }

    /// Reflection `sigma_alpha x` for the root with the given index.
    pub fn reflect(&self, root: usize, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        let axis = self.roots[root].axis;
        y[axis] = -y[axis];
        y
    }

    /// All elements of the group, as diagonal sign matrices.
    pub fn group_elements(&self) -> Vec<GroupElement> {
        let m = self.roots.len();
        (0..1usize << m)
            .map(|mask| {
                let mut signs = vec![1.0; self.dim];
                for (j, r) in self.roots.iter().enumerate() {
                    if mask & (1 << j) != 0 {
                        signs[r.axis] = -1.0;
                    }
                }
                GroupElement { signs }
            })
            .collect()
    }

    /// Distinct points of the orbit `W x`.
    pub fn orbit(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut pts: Vec<Vec<f64>> = Vec::new();
        for g in self.group_elements() {
            let y = g.apply(x);
            if !pts.iter().any(|p| crate::field::dist(p, &y) <= 1e-14 * (1.0 + crate::field::norm(x))) {
                pts.push(y);
            }
        }
        pts
    }

    /// `min_g |x - g y|`: coordinates on the root axes compare in absolute value.
    pub fn orbit_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut total: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        for r in &self.roots {
            let (a, b) = (x[r.axis], y[r.axis]);
            total += (a.abs() - b.abs()).powi(2) - (a - b) * (a - b);
        }
        total.max(0.0).sqrt()
    }

    /// Distance from `x` to the nearest reflecting hyperplane (infinite if none).
    pub fn hyperplane_distance(&self, x: &[f64]) -> f64 {
        self.roots.iter().map(|r| x[r.axis].abs()).fold(f64::INFINITY, f64::min)
    }

    /// `int_{S^{d-1}} omega_k = 2 prod_j Gamma(k_j + 1/2) / Gamma(gamma + d/2)`
    /// (product over all axes, `k_j = 0` off the roots), times the root scales.
    pub fn d_k_closed_form(&self) -> f64 {
        use statrs::function::gamma::ln_gamma;
        let mut k = vec![0.0; self.dim];
        let mut scale = 1.0;
        for r in &self.roots {
            k[r.axis] = r.multiplicity;
            scale *= r.scale.abs().powf(2.0 * r.multiplicity);
        }
        let num: f64 = k.iter().map(|kj| ln_gamma(kj + 0.5)).sum();
        scale * 2.0 * (num - ln_gamma(self.gamma() + 0.5 * self.dim as f64)).exp()
    }

    /// `gamma`, `lambda_k`, `d_k` with `d_k` integrated by `sphere_rule`.
    pub fn constants(&self, sphere_rule: &QuadratureRule) -> Result<DunklConstants> {
        if sphere_rule.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: sphere_rule.dim() });
        }
        let gamma = self.gamma();
        let lambda = self.dim as f64 / 2.0 + gamma - 1.0;
        if !(lambda > 0.0) {
            return Err(Error::NonPositiveLambda { lambda });
        }
        let d_k = sphere_rule.integrate(|x| self.weight(x));
        Ok(DunklConstants { gamma, lambda, d_k, sphere_area: sphere_area(self.dim) })
    }
}

/// Diagonal orthogonal map `x -> diag(signs) x`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    pub signs: Vec<f64>,
}

impl GroupElement {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.signs).map(|(a, s)| a * s).collect()
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let d = self.signs.len();
        (0..d)
            .map(|i| (0..d).map(|j| if i == j { self.signs[i] } else { 0.0 }).collect())
            .collect()
    }

    pub fn is_identity(&self) -> bool {
        self.signs.iter().all(|&s| s > 0.0)
    }
}

/// Constants attached to a multiplicity function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DunklConstants {
    pub gamma: f64,
    pub lambda: f64,
    pub d_k: f64,
    pub sphere_area: f64,
}
