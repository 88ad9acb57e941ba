//! A root system together with its constants and cached evaluation data.

use crate::error::{Error, Result};
use crate::intertwining::Intertwiner;
use crate::quadrature::{sphere_rule, QuadratureRule};
use crate::roots::{DunklConstants, RootSystem};
use crate::special::GegenbauerRecurrence;

/// Largest series degree supported by the cached recurrence.
pub const MAX_SERIES_DEGREE: usize = 8192;

/// Root system, constants, `mu` templates and the Gegenbauer recurrence for `lambda_k`.
#[derive(Debug, Clone)]
pub struct DunklSystem {
    roots: RootSystem,
    constants: DunklConstants,
    mu: Intertwiner,
    rec: GegenbauerRecurrence,
}

/// Rule used for `d_k` when none is supplied.
pub fn default_constants_rule(d: usize) -> Result<QuadratureRule> {
    match d {
        2 => sphere_rule(2, 512),
        3 => sphere_rule(3, 96),
        _ => Err(Error::UnsupportedDimension(d)),
    }
}

impl DunklSystem {
    pub fn new(roots: RootSystem) -> Result<Self> {
        let rule = default_constants_rule(roots.dim())?;
        Self::with_rule(roots, &rule)
    }

    /// Supported dimensions are 2 and 3. With a non-integer multiplicity
    /// `omega_k` is not a polynomial and `d_k` is taken from the closed form
    /// `2 prod Gamma(k_j + 1/2) / Gamma(gamma + d/2)` instead of `rule`.
    pub fn with_rule(roots: RootSystem, rule: &QuadratureRule) -> Result<Self> {
        if !(2..=3).contains(&roots.dim()) {
            return Err(Error::UnsupportedDimension(roots.dim()));
        }
        let mut constants = roots.constants(rule)?;
        if roots.roots().iter().any(|r| r.multiplicity.fract() != 0.0) {
            constants.d_k = roots.d_k_closed_form();
        }
        Ok(Self {
            mu: Intertwiner::new(roots.clone()),
            rec: GegenbauerRecurrence::new(constants.lambda, MAX_SERIES_DEGREE),
            roots,
            constants,
        })
    }

    pub fn dim(&self) -> usize {
        self.roots.dim()
    }

    pub fn roots(&self) -> &RootSystem {
        &self.roots
    }

    pub fn constants(&self) -> &DunklConstants {
        &self.constants
    }

    pub fn lambda(&self) -> f64 {
        self.constants.lambda
    }

    pub fn d_k(&self) -> f64 {
        self.constants.d_k
    }

    pub fn intertwiner(&self) -> &Intertwiner {
        &self.mu
    }

    pub(crate) fn recurrence(&self) -> &GegenbauerRecurrence {
        &self.rec
    }

    pub fn weight(&self, x: &[f64]) -> f64 {
        self.roots.weight(x)
    }

    pub(crate) fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        Ok(())
    }
}

/// `base^(-p)` using `powi` for integer and half-integer `p`.
#[inline]
pub(crate) fn inv_pow(base: f64, p: f64) -> f64 {
    let two_p = 2.0 * p;
    if two_p == two_p.round() && two_p.abs() < 64.0 {
        let m = two_p as i32;
        if m % 2 == 0 {
            1.0 / base.powi(m / 2)
        } else {
            1.0 / (base.sqrt() * base.powi(m / 2))
        }
    } else {
        base.powf(-p)
    }
}
