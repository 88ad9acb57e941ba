//! The intertwining operator `V_k` as integration against `mu_x`.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::quadrature::{MuTemplate, QuadratureRule, GRADING};
use crate::roots::{RootSystem, RootSystemKind};

/// Gauss–Jacobi orders kept ready for the hot evaluation paths.
const LADDER: [usize; 14] = [4, 6, 8, 12, 16, 20, 24, 32, 40, 48, 64, 80, 96, 128];
const MAX_LEVELS: usize = 24;
const GRADED_NODES: usize = 16;

/// `mu_x` for one base point.
#[derive(Debug, Clone, PartialEq)]
pub struct MuMeasure {
    pub base: Vec<f64>,
    pub rule: QuadratureRule,
}

impl MuMeasure {
    pub fn integrate(&self, f: &dyn ScalarField) -> f64 {
        self.rule.integrate(|z| f.eval(z))
    }
}

/// Cached `mu` templates for one root system.
#[derive(Debug)]
pub struct Intertwiner {
    roots: RootSystem,
    ladder: Vec<OnceLock<MuTemplate>>,
    graded: Vec<OnceLock<MuTemplate>>,
}

impl Clone for Intertwiner {
    fn clone(&self) -> Self {
        Self::new(self.roots.clone())
    }
}

impl Intertwiner {
    pub fn new(roots: RootSystem) -> Self {
        Self {
            roots,
            ladder: LADDER.iter().map(|_| OnceLock::new()).collect(),
            graded: (0..=MAX_LEVELS).map(|_| OnceLock::new()).collect(),
        }
    }

    pub fn roots(&self) -> &RootSystem {
        &self.roots
    }

    /// True when `mu_x` is the Dirac mass at `x`.
    pub fn is_dirac(&self) -> bool {
        self.roots.kind() == RootSystemKind::Trivial || self.roots.roots().iter().all(|r| r.multiplicity == 0.0)
    }

    /// Cached template with at least `order` nodes per flipped coordinate.
    pub fn template(&self, order: usize) -> &MuTemplate {
        let i = LADDER.iter().position(|&q| q >= order).unwrap_or(LADDER.len() - 1);
        self.ladder[i].get_or_init(|| MuTemplate::new(&self.roots, LADDER[i]).expect("ladder orders are valid"))
    }

    fn graded_template(&self, levels: usize) -> &MuTemplate {
        let l = levels.clamp(2, MAX_LEVELS);
        self.graded[l].get_or_init(|| MuTemplate::graded(&self.roots, l, GRADED_NODES).expect("graded rule parameters are valid"))
    }

    /// Template for `z -> g(<z, v>)` over `mu_y` when `g` is analytic except
    /// at a point lying `gap` beyond the largest value of `<z, v>` on the support.
    ///
    /// The order follows the Bernstein-ellipse estimate in the flipped
    /// coordinate with the steepest slope; very small gaps fall back to a
    /// graded composite rule.
    pub fn template_for(&self, y: &[f64], v: &[f64], gap: f64, eps: f64) -> &MuTemplate {
        self.template_for_degree(y, v, gap, eps, None)
    }

    /// As [`Intertwiner::template_for`]; when `degree` is given, `g` is taken
    /// to be a polynomial of that degree and the Gauss rule exact for it is
    /// used if the ladder reaches it.
    pub fn template_for_degree(&self, y: &[f64], v: &[f64], gap: f64, eps: f64, degree: Option<usize>) -> &MuTemplate {
        if self.is_dirac() {
            return self.template(1);
        }
        let slope = self
            .roots
            .roots()
            .iter()
            .filter(|r| r.multiplicity > 0.0)
            .map(|r| (y[r.axis] * v[r.axis]).abs())
            .fold(0.0, f64::max);
        if slope == 0.0 {
            return self.template(1);
        }
        let delta = (gap / slope).max(0.0);
        let bern = 1.0 + delta + (delta * (2.0 + delta)).sqrt();
        let order = ((-eps.ln()) / (2.0 * bern.ln())).ceil() as usize + 2;
        if let Some(n) = degree {
            let exact = n / 2 + 1;
            if exact <= *LADDER.last().unwrap() {
                return self.template(exact.max(4));
            }
        }
        if order <= *LADDER.last().unwrap() {
            return self.template(order.max(4));
        }
        // Finest panel width about four times the gap.
        let levels = 1 + ((4.0 * delta).ln() / GRADING.ln()).ceil().max(1.0) as usize;
        self.graded_template(levels)
    }

    /// `mu_x` with `order` nodes per flipped coordinate.
    pub fn measure(&self, x: &[f64], order: usize) -> Result<MuMeasure> {
        self.check_dim(x)?;
        let t = MuTemplate::new(&self.roots, order)?;
        Ok(MuMeasure { base: x.to_vec(), rule: t.rule(x) })
    }

    /// `V_k f (x) = int f dmu_x`.
    pub fn vk_apply(&self, f: &dyn ScalarField, x: &[f64], order: usize) -> Result<f64> {
        self.check_dim(x)?;
        if self.is_dirac() {
            return Ok(f.eval(x));
        }
        let t = MuTemplate::new(&self.roots, order)?;
        let mut acc = 0.0;
        t.for_each_point(x, |z, w| acc += w * f.eval(z));
        Ok(acc)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.roots.dim() {
            return Err(Error::DimensionMismatch { expected: self.roots.dim(), found: x.len() });
        }
        Ok(())
    }
}
